#pragma once

// Deterministic discrete-event kernel and seeded random streams.

#include "ivn/core.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <queue>
#include <string_view>
#include <vector>

namespace ivn {

class CausalityViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Single-threaded event loop. Events run in (time, insertion ordinal) order.
class Simulator {
public:
  using Action = std::function<void()>;

  SimTime now() const { return now_; }

  /// Enqueue `action` at absolute time `at`. Throws CausalityViolation when
  /// `at` lies in the past.
  void schedule(SimTime at, Action action);
  void schedule_in(Duration delay, Action action) { schedule(now_ + delay, std::move(action)); }

  /// Execute every event with time <= end, then set the clock to `end`.
  void run_until(SimTime end);

  std::uint64_t scheduled_count() const { return scheduled_; }
  std::uint64_t executed_count() const { return executed_; }
  std::size_t pending_count() const { return queue_.size(); }

private:
  struct Event {
    SimTime at;
    std::uint64_t ordinal;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.ordinal > b.ordinal;
    }
  };

  SimTime now_ = 0;
  std::uint64_t scheduled_ = 0;
  std::uint64_t executed_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

/// xoshiro256** stream seeded from (master seed, label) through splitmix64.
/// The generator and every derived distribution are implemented here with
/// integer arithmetic only, so sequences are identical on every platform.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64();
  /// Uniform integer in [lo, hi] (inclusive). Requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Bernoulli trial.
  bool chance(double p) { return uniform01() < p; }

private:
  std::array<std::uint64_t, 4> s_{};
};

/// FNV-1a of a label, used to derive substream seeds.
std::uint64_t label_hash(std::string_view label);

} // namespace ivn
