#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsr/system.hpp"
#include "nsr/train_config.hpp"

namespace nsr {

/// Settings of the transfer stage.
struct TransferConfig {
  std::string controller = "zero";
  std::uint64_t horizon = 1000;
  std::uint64_t trials = 100;
  std::uint64_t seed = 0;
  std::optional<Vec> x_hat0;  // default: midpoint of X_hat0
  std::optional<Vec> x0;      // default: matched through V
};

/// A parsed experiment file.
///
///   # comment
///   [system.target]      builtin = <name> | dynamics = <key>, param.<p> = v,
///                        state_lb/ub, initial_lb/ub, input_lb/ub, output_lb/ub,
///                        L_x, L_u, L_h, name
///   [system.source]      same keys
///   [train]              TrainConfig fields
///   [transfer]           controller, horizon, trials, seed, x_hat0, x0
///   [run]                workers
///
/// Vectors are whitespace separated.
struct RunConfig {
  SystemDef target;
  SystemDef source;
  TrainConfig train;
  TransferConfig transfer;
  std::size_t workers = 0;
  std::string text;                    // verbatim file contents
  std::vector<std::string> overrides;  // "key = value" applied from the command line
  // section -> key -> (value, line number; 0 for overrides)
  std::map<std::string, std::map<std::string, std::pair<std::string, std::size_t>>> raw;

  /// FNV-1a (16 hex digits) over the canonical [system.*] and [train] entries,
  /// overrides included. train.mode is left out so an artifact can be
  /// certified in either mode.
  std::string hash() const;
  /// Verbatim text followed by the overrides, each line prefixed with "# ".
  std::string echo() const;

  /// Re-applies `section.key = value` and records it (e.g. "train.seed").
  void set(const std::string& dotted_key, const std::string& value);
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::string fnv1a_hex(const std::string& data);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace nsr
