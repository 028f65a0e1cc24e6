#include "nsr/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nsr {
namespace {

std::atomic<std::size_t> g_workers{0};

constexpr std::size_t kMaxShards = 64;
constexpr std::size_t kMinShardSize = 256;

}  // namespace

void set_worker_count(std::size_t workers) { g_workers.store(workers); }

std::size_t worker_count() {
  std::size_t w = g_workers.load();
  if (w == 0) w = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return w;
}

std::size_t shard_count(std::size_t n) {
  if (n == 0) return 0;
  return std::clamp<std::size_t>(n / kMinShardSize, 1, kMaxShards);
}

void for_each_shard(std::size_t n,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t shards = shard_count(n);
  if (shards == 0) return;
  auto bounds = [&](std::size_t s) {
    return std::pair{n * s / shards, n * (s + 1) / shards};
  };
  const std::size_t workers = std::min(worker_count(), shards);
  if (workers <= 1) {
    for (std::size_t s = 0; s < shards; ++s) {
      auto [b, e] = bounds(s);
      fn(s, b, e);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t s = next.fetch_add(1); s < shards; s = next.fetch_add(1)) {
        try {
          auto [b, e] = bounds(s);
          fn(s, b, e);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace nsr
