#include "oracle.hpp"

#include <gtest/gtest.h>

TEST(Oracle, VerdictsAndLossIndicationsMatchBruteForce) {
  const auto out = ivn::oracle::check();
  ASSERT_LE(out.frames, 20u);
  for (const auto& m : out.mismatches) {
    ADD_FAILURE() << m;
  }
  EXPECT_GE(out.gate_drops, 2);
  EXPECT_GE(out.meter_drops, 3);
  EXPECT_TRUE(out.loss_with_ref);
  EXPECT_TRUE(out.loss_without_ref);
  EXPECT_TRUE(out.ok());
}
