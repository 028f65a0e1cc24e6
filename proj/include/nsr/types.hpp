#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsr {

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;
using MutSpan = std::span<double>;

/// Raised for rejected inputs: bad dimensions, out-of-domain points, malformed
/// files. The message names the offending field.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box [lb, ub] in R^d. Every set handled by the toolkit is one.
struct Box {
  Vec lb;
  Vec ub;

  Box() = default;
  Box(Vec lower, Vec upper);

  /// Cube [lo, hi]^dim.
  static Box uniform(std::size_t dim, double lo, double hi);

  std::size_t dim() const { return lb.size(); }
  bool contains(ConstSpan p, double tol = 0.0) const;
  bool contains(const Box& other) const;
  /// Cartesian product (this x other).
  Box product(const Box& other) const;
  Vec clamp(ConstSpan p) const;
  void clamp_in_place(MutSpan p) const;
  Vec midpoint() const;
};

/// max_i |a_i - b_i|
double inf_dist(ConstSpan a, ConstSpan b);
double inf_norm(ConstSpan a);

/// Concatenate spans into one vector, in order.
Vec concat(std::initializer_list<ConstSpan> parts);

std::string format_vec(ConstSpan v);

/// Shortest round-trip decimal representation of a double.
std::string fmt_double(double v);

}  // namespace nsr
