#include "isrncr/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

namespace isrncr {

namespace {

constexpr std::size_t kSerialThreshold = 256;

std::atomic<std::size_t> g_override{0};

std::size_t env_workers() {
  static const std::size_t value = [] {
    std::size_t n = 0;
    if (const char *s = std::getenv("ISRNCR_THREADS")) {
      try {
        n = static_cast<std::size_t>(std::stoul(s));
      } catch (...) {
        n = 0;
      }
    }
    if (n == 0)
      n = std::max(1u, std::thread::hardware_concurrency());
    return n;
  }();
  return value;
}

} // namespace

std::size_t worker_count() {
  const std::size_t o = g_override.load();
  return o ? o : env_workers();
}

void set_worker_count(std::size_t n) { g_override.store(n); }

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t)> &fn) {
  const std::size_t workers = std::min(worker_count(), count / 64 + 1);
  if (workers <= 1 || count < kSerialThreshold) {
    for (std::size_t k = 0; k < count; ++k)
      fn(k);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  auto run = [&](std::size_t w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    try {
      for (std::size_t k = lo; k < hi; ++k)
        fn(k);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  for (std::size_t w = 1; w < workers; ++w)
    pool.emplace_back(run, w);
  run(0);
  for (auto &t : pool)
    t.join();
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace isrncr
