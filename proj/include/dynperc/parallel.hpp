#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace dynperc {

/// Worker count: DYNPERC_THREADS if set and positive, else the hardware count.
int default_thread_count();

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded() : std::runtime_error("compute budget exceeded") {}
};

// Optional wall-clock deadline checked between chunks.
struct RunControl {
  std::optional<std::chrono::steady_clock::time_point> deadline;
  int threads = 0;  // 0: default_thread_count()

  void check() const {
    if (deadline && std::chrono::steady_clock::now() > *deadline) throw BudgetExceeded();
  }
  int thread_count() const { return threads > 0 ? threads : default_thread_count(); }
};

/// Runs fn(begin, end) over [0, n) in fixed-size chunks on a worker pool.
/// Chunk boundaries depend only on n and `chunk`, never on the thread count.
/// The first exception (by chunk index) is rethrown after all workers stop.
template <class Fn>
void parallel_for_chunks(std::uint64_t n, std::uint64_t chunk, const RunControl& control, Fn&& fn) {
  if (n == 0) return;
  chunk = std::max<std::uint64_t>(chunk, 1);
  const std::uint64_t chunks = (n + chunk - 1) / chunk;
  const auto workers = static_cast<std::uint64_t>(std::max(1, control.thread_count()));
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::uint64_t error_chunk = chunks;

  auto work = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks || failed.load()) return;
      try {
        control.check();
        const std::uint64_t begin = c * chunk;
        fn(begin, std::min(n, begin + chunk));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (c < error_chunk) {
          error_chunk = c;
          error = std::current_exception();
        }
        failed.store(true);
      }
    }
  };

  const std::uint64_t spawn = std::min(workers, chunks);
  if (spawn <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(spawn - 1);
    for (std::uint64_t i = 1; i < spawn; ++i) pool.emplace_back(work);
    work();
  }
  if (error) std::rethrow_exception(error);
}

/// Chunked map-reduce: fn(begin, end) -> Acc per chunk, merged in chunk order
/// with merge(Acc&, const Acc&), so the result is independent of scheduling.
template <class Acc, class Fn, class Merge>
Acc parallel_reduce_chunks(std::uint64_t n, std::uint64_t chunk, const RunControl& control, Fn&& fn, Merge&& merge) {
  chunk = std::max<std::uint64_t>(chunk, 1);
  const std::uint64_t chunks = (n + chunk - 1) / chunk;
  std::vector<std::optional<Acc>> partial(chunks);
  parallel_for_chunks(n, chunk, control, [&](std::uint64_t begin, std::uint64_t end) {
    partial[begin / chunk] = fn(begin, end);
  });
  Acc total{};
  for (const auto& part : partial) merge(total, *part);
  return total;
}

}  // namespace dynperc
