#include "ivn/engine.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ivn;

TEST(Simulator, EventsAtNowRunBeforeLaterEvents) {
  Simulator sim;
  std::vector<int> order;
  sim.schedule(10, [&] {
    sim.schedule(20, [&] { order.push_back(2); });
    sim.schedule(10, [&] { order.push_back(1); });
  });
  sim.run_until(100);
  EXPECT_EQ(order, (std::vector<int>{1, 2}));
}

TEST(Simulator, EqualTimesKeepInsertionOrder) {
  Simulator sim;
  std::vector<int> order;
  for (int i = 0; i < 50; ++i) {
    sim.schedule(5, [&order, i] { order.push_back(i); });
  }
  sim.run_until(5);
  ASSERT_EQ(order.size(), 50u);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(order[static_cast<std::size_t>(i)], i);
  }
}

TEST(Simulator, SchedulingInThePastThrows) {
  Simulator sim;
  sim.schedule(1000, [&] { EXPECT_THROW(sim.schedule(999, [] {}), CausalityViolation); });
  sim.run_until(2000);
}

TEST(Simulator, EmptyQueueAdvancesClock) {
  Simulator sim;
  sim.run_until(seconds(10));
  EXPECT_EQ(sim.now(), seconds(10));
  EXPECT_EQ(sim.executed_count(), 0u);
}

TEST(Simulator, EndZeroRunsOnlyTimeZeroEvents) {
  Simulator sim;
  int ran = 0;
  sim.schedule(0, [&] { ++ran; });
  sim.schedule(1, [&] { ++ran; });
  sim.run_until(0);
  EXPECT_EQ(ran, 1);
  EXPECT_EQ(sim.pending_count(), 1u);
}

TEST(Simulator, PeriodicSourceFiresTwentyThousandTimes) {
  Simulator sim;
  std::uint64_t fired = 0;
  std::function<void()> tick = [&] {
    ++fired;
    sim.schedule_in(microseconds(500), tick);
  };
  sim.schedule(0, tick);
  sim.run_until(seconds(10) - 1);
  EXPECT_EQ(fired, 20'000u);
}

TEST(Simulator, NoEventLoss) {
  Simulator sim;
  RngStream rng(3, "events");
  for (int i = 0; i < 1000; ++i) {
    sim.schedule(rng.uniform_int(0, 2000), [&sim, &rng] {
      if (rng.chance(0.5)) {
        sim.schedule_in(rng.uniform_int(0, 500), [] {});
      }
    });
  }
  sim.run_until(1500);
  EXPECT_EQ(sim.scheduled_count(), sim.executed_count() + sim.pending_count());
}

TEST(Rng, DegenerateInterval) {
  RngStream rng(1, "x");
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(rng.uniform_int(5, 5), 5);
  }
}

TEST(Rng, UniformMeanWithinThreeSigma) {
  RngStream rng(7, "mean");
  double sum = 0;
  constexpr int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.uniform01();
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
    sum += v;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.002);
}

TEST(Rng, IntegerDrawsStayInRangeAndCoverIt) {
  RngStream rng(11, "range");
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.uniform_int(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    ++seen[static_cast<std::size_t>(v + 3)];
  }
  for (int c : seen) {
    EXPECT_GT(c, 800);
  }
}

TEST(Rng, SameSeedAndLabelGiveSameSequence) {
  RngStream a(42, "gen:x:0");
  RngStream b(42, "gen:x:0");
  RngStream c(42, "gen:x:1");
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    differs |= va != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

// Reference xoshiro256** seeded by splitmix64 from seed ^ fnv1a(label).
TEST(Rng, MatchesReferenceGenerator) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : std::string("ref")) {
    h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
  }
  ASSERT_EQ(label_hash("ref"), h);
  std::uint64_t x = 99 ^ h;
  std::uint64_t s[4];
  for (auto& w : s) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    w = z ^ (z >> 31);
  }
  const auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
  RngStream rng(99, "ref");
  for (int i = 0; i < 16; ++i) {
    const std::uint64_t expected = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    EXPECT_EQ(rng.next_u64(), expected);
  }
}
