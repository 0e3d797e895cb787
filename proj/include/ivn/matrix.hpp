#pragma once

// Benchmark matrices: the corrupted micro runs, the TDMA-loss subset and the
// macro attack grid, plus a worker pool that runs one scenario per thread.

#include "ivn/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace ivn {

struct MicroCase {
  TrafficPattern pattern;
  CorruptionKind kind;
  Layer layer;
};

/// Layer-major, then pattern, then corruption kind: 30 cases.
std::vector<MicroCase> micro_cases();
/// Timed-control cases only: 10 cases.
std::vector<MicroCase> micro_tdma_cases();

struct MacroCase {
  TraceAttack attack;
  MacroTarget target;
};

std::vector<MacroCase> macro_cases();

/// Calls fn(0..n-1) on up to `workers` threads and returns the results in
/// index order. The first exception thrown by any call is rethrown.
template <typename F>
auto parallel_map(std::size_t n, unsigned workers, F fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  for (unsigned w = 0; w < count; ++w) {
    pool.emplace_back(work);
  }
  for (auto& t : pool) {
    t.join();
  }
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      std::rethrow_exception(errors[i]);
    }
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

/// hardware_concurrency, or 1 when unknown.
unsigned default_workers();

} // namespace ivn
