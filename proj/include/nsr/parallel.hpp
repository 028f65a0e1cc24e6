#pragma once

#include <cstddef>
#include <functional>

namespace nsr {

/// Number of worker threads used by grid sweeps. 0 means "all cores".
void set_worker_count(std::size_t workers);
std::size_t worker_count();

/// Splits [0, n) into a fixed number of contiguous shards (independent of the
/// worker count) and runs fn(shard, begin, end) for each, possibly
/// concurrently. Callers reduce per-shard results in shard order, which keeps
/// every floating-point reduction bit-identical for any worker count.
std::size_t shard_count(std::size_t n);
void for_each_shard(std::size_t n,
                    const std::function<void(std::size_t shard, std::size_t begin,
                                             std::size_t end)>& fn);

}  // namespace nsr
