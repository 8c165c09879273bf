#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "gridcast/util.hpp"

namespace gridcast {

/// Worker count: the request (0 = hardware concurrency), capped by the
/// GRIDCAST_WORKERS environment variable when it holds a positive integer.
inline std::size_t resolve_workers(std::size_t requested = 0) {
  std::size_t n = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GRIDCAST_WORKERS")) {
    try {
      const long long cap = parse_int(env);
      if (cap > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
    } catch (const Error&) {
    }
  }
  return n;
}

/// Runs task(i) for i in [0, count) on up to `workers` threads. Results must be
/// written to index-addressed slots so the outcome does not depend on
/// scheduling. Once a task throws, no new tasks start; every captured
/// exception is returned by index (null where the task succeeded or never ran).
inline std::vector<std::exception_ptr> parallel_for(std::size_t count, std::size_t workers,
                                                    const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  auto run = [&] {
    while (!abort.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
        abort.store(true);
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    run();
    return errors;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  pool.clear();  // joins
  return errors;
}

}  // namespace gridcast
