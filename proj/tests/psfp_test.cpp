#include "ivn/psfp.hpp"

#include <gtest/gtest.h>

using namespace ivn;

namespace {

Frame frame_of(std::uint32_t stream, Priority p, std::uint32_t payload, std::uint64_t uid = 1) {
  Frame f;
  f.uid = uid;
  f.stream = StreamId{stream};
  f.priority = p;
  f.payload_size = payload;
  return f;
}

StreamFilter filter_for(std::uint32_t stream) {
  StreamFilter f;
  f.match = StreamId{stream};
  return f;
}

struct Recorder {
  std::vector<IndicatorEvent> events;
  PsfpInstance::Sink sink() {
    return [this](const IndicatorEvent& e) { events.push_back(e); };
  }
};

std::int64_t line_bits(std::uint32_t wire) { return (wire + 20) * 8; }

} // namespace

TEST(Psfp, OversizedTunnelFrameIsMeterDropped) {
  auto f = filter_for(0);
  f.meter = MaxFrameSize{64};
  Recorder rec;
  PsfpInstance inst(0, 0, {{f}}, rec.sink());
  const Frame big = frame_of(0, Priority::P5, 65);
  ASSERT_EQ(big.wire_size(), 87u);
  EXPECT_EQ(inst.ingest(big, 0), Verdict::MeterDrop);
  EXPECT_EQ(inst.ingest(frame_of(0, Priority::P5, 42), 10), Verdict::Forwarded);
  EXPECT_EQ(inst.ingest(frame_of(0, Priority::P5, 43), 20), Verdict::MeterDrop);
  ASSERT_EQ(rec.events.size(), 2u);
  EXPECT_EQ(rec.events[0].kind, IndicatorKind::MeterDrop);
  const auto stats = inst.snapshot_stats();
  EXPECT_EQ(stats.total.dropped_meter, 2u);
  EXPECT_TRUE(stats.conserved());
}

TEST(Psfp, UntaggedCrossTrafficPassesUntaggedRule) {
  StreamFilter f;
  f.match = MatchUntagged{};
  PsfpInstance inst(0, 0, {{f}}, nullptr);
  EXPECT_EQ(inst.ingest(frame_of(9, Priority::Untagged, 1500), 0), Verdict::Forwarded);
  EXPECT_EQ(inst.ingest(frame_of(9, Priority::P3, 10), 0), Verdict::UnknownDrop);
}

TEST(Psfp, UnfilteredStreamIsUnknownDrop) {
  Recorder rec;
  PsfpInstance inst(2, 1, {{filter_for(0)}}, rec.sink());
  EXPECT_EQ(inst.ingest(frame_of(1, Priority::P5, 10, 77), 5), Verdict::UnknownDrop);
  ASSERT_EQ(rec.events.size(), 1u);
  EXPECT_EQ(rec.events[0].kind, IndicatorKind::UnknownDrop);
  EXPECT_FALSE(rec.events[0].stream.known());
  EXPECT_EQ(rec.events[0].frame_ref, 77u);
  EXPECT_EQ(rec.events[0].node, 2);
  EXPECT_EQ(rec.events[0].port, 1);
}

TEST(Psfp, FirstMatchingFilterWinsAndDuplicatesAreRejected) {
  EXPECT_THROW(PsfpInstance(0, 0, {{filter_for(0), filter_for(0)}}, nullptr), ConfigError);
  StreamFilter untagged;
  untagged.match = MatchUntagged{};
  auto strict = filter_for(3);
  strict.meter = MaxFrameSize{64};
  PsfpInstance inst(0, 0, {{strict, untagged}}, nullptr);
  EXPECT_EQ(inst.ingest(frame_of(3, Priority::Untagged, 100), 0), Verdict::MeterDrop);
}

TEST(Psfp, GateClosesAtWindowEnd) {
  auto f = filter_for(0);
  f.gate = GateControlList(microseconds(500), {{microseconds(100), microseconds(20)}});
  EXPECT_EQ(gate_check(f, microseconds(100)), GateState::Open);
  EXPECT_EQ(gate_check(f, microseconds(120) - 1), GateState::Open);
  EXPECT_EQ(gate_check(f, microseconds(120)), GateState::Closed);
  EXPECT_EQ(gate_check(f, microseconds(120) + 1), GateState::Closed);
  EXPECT_EQ(gate_check(filter_for(0), 12345), GateState::Open);
}

TEST(Meter, FirstFrameConformsWithZeroCredit) {
  MeterState st;
  const MeterConfig m = CreditMeterConfig{mbps(17), 0};
  EXPECT_EQ(meter_check(m, st, frame_of(0, Priority::P6, 400), 0), Conformance::Conform);
  EXPECT_EQ(st.credit, -bits_to_nanobits(line_bits(422)));
}

TEST(Meter, StreamAtIdleSlopeAlwaysConforms) {
  MeterState st;
  const BitRate idle = mbps(17);
  const MeterConfig m = CreditMeterConfig{idle, 1000};
  const std::int64_t bits = line_bits(422);
  // The refill of exactly one frame takes bits / idle seconds.
  const Duration gap = (bits * 1'000'000'000 + idle - 1) / idle;
  for (int i = 0; i < 100'000; ++i) {
    ASSERT_EQ(meter_check(m, st, frame_of(0, Priority::P6, 400), gap * i), Conformance::Conform) << i;
  }
}

TEST(Meter, BurstBeyondCapIsNonconforming) {
  MeterState st;
  const BitRate idle = mbps(17);
  const std::int64_t cap = 4000;
  const MeterConfig m = CreditMeterConfig{idle, cap};
  const Frame f = frame_of(0, Priority::P6, 400);
  // Long idle fills the bucket to the cap; then back-to-back frames at line rate.
  SimTime t = seconds(1);
  std::int64_t credit_nb = bits_to_nanobits(cap);
  const Duration d = transmission_duration(f.wire_size(), mbps(100));
  int conformed = 0;
  EXPECT_EQ(meter_check(m, st, f, 0), Conformance::Conform);
  for (int i = 0; i < 5; ++i, t += d) {
    if (i > 0) {
      credit_nb = std::min(bits_to_nanobits(cap), credit_nb + idle * d);
    }
    const bool expect = credit_nb >= 0;
    const auto got = meter_check(m, st, f, t);
    EXPECT_EQ(got == Conformance::Conform, expect) << i;
    if (expect) {
      credit_nb -= bits_to_nanobits(line_bits(f.wire_size()));
      ++conformed;
    }
  }
  // 4000 bits of credit plus 601 bits of refill per frame admit two frames of 3536 bits.
  EXPECT_EQ(conformed, 2);
}

TEST(Meter, CapHelperAddsRefillOverOneMaximumFrame) {
  const Duration d = transmission_duration(1522, mbps(100));
  EXPECT_EQ(meter_cap_for(mbps(17), 6000, 1522, mbps(100)), 6000 + (mbps(17) * d + 999'999'999) / 1'000'000'000);
}

TEST(Meter, MatchesIndependentCreditTrace) {
  RngStream rng(9, "meter");
  const BitRate idle = mbps(23);
  const std::int64_t cap = 5000;
  const MeterConfig m = CreditMeterConfig{idle, cap};
  MeterState st;
  // Credit tracked in bits as long double.
  long double credit = 0;
  SimTime last = 0;
  SimTime t = 0;
  for (int i = 0; i < 20'000; ++i) {
    t += rng.uniform_int(0, microseconds(400));
    const auto payload = static_cast<std::uint32_t>(rng.uniform_int(0, 1500));
    const Frame f = frame_of(0, Priority::P6, payload);
    credit = std::min<long double>(cap, credit + static_cast<long double>(idle) * (t - last) / 1e9L);
    last = t;
    const bool expect = credit >= 0;
    ASSERT_EQ(meter_check(m, st, f, t) == Conformance::Conform, expect) << i;
    if (expect) {
      credit -= static_cast<long double>(line_bits(f.wire_size()));
    }
    ASSERT_NEAR(static_cast<double>(credit), static_cast<double>(st.credit) / 1e9, 1e-6);
  }
}

TEST(Tdma, WindowCloseCountsMissingFrames) {
  EXPECT_EQ(tdma_window_close(TdmaLossConfig{1}, 1), 0u);
  EXPECT_EQ(tdma_window_close(TdmaLossConfig{1}, 0), 1u);
  EXPECT_EQ(tdma_window_close(TdmaLossConfig{3}, 1), 2u);
  EXPECT_EQ(tdma_window_close(TdmaLossConfig{1}, 4), 0u);
}

TEST(Tdma, LossEventsCarryTheFrameDroppedInTheWindow) {
  Simulator sim;
  auto f = filter_for(0);
  f.gate = GateControlList(microseconds(500), {{microseconds(100), microseconds(50)}});
  f.loss_detector = TdmaLossConfig{1};
  Recorder rec;
  PsfpInstance inst(0, 0, {{f}}, rec.sink());
  inst.start_loss_detection(sim);
  // Cycles 0, 1 and 4 on time, cycle 2 missing, cycle 3 early (gate drop).
  for (int c : {0, 1, 4}) {
    sim.schedule(microseconds(500) * c + microseconds(120), [&, c] {
      EXPECT_EQ(inst.ingest(frame_of(0, Priority::P7, 1500, 10 + c), sim.now()), Verdict::Forwarded);
    });
  }
  sim.schedule(microseconds(1500) + microseconds(80), [&] {
    EXPECT_EQ(inst.ingest(frame_of(0, Priority::P7, 1500, 13), sim.now()), Verdict::GateDrop);
  });
  sim.run_until(microseconds(2500));
  std::vector<IndicatorEvent> losses;
  for (const auto& e : rec.events) {
    if (e.kind == IndicatorKind::TdmaLoss) {
      losses.push_back(e);
    }
  }
  ASSERT_EQ(losses.size(), 2u);
  EXPECT_EQ(losses[0].at, microseconds(1150));
  EXPECT_FALSE(losses[0].frame_ref.has_value());
  EXPECT_EQ(losses[1].at, microseconds(1650));
  EXPECT_EQ(losses[1].frame_ref, 13u);
  EXPECT_EQ(inst.snapshot_stats().total.loss_events, 2u);
}

TEST(Tdma, NothingBeforeTheStreamStarts) {
  Simulator sim;
  auto f = filter_for(0);
  f.gate = GateControlList(microseconds(500), {{0, microseconds(50)}});
  f.loss_detector = TdmaLossConfig{1};
  Recorder rec;
  PsfpInstance inst(0, 0, {{f}}, rec.sink());
  inst.start_loss_detection(sim);
  sim.run_until(milliseconds(10));
  EXPECT_TRUE(rec.events.empty());
}

TEST(Tdma, DetectorNeedsAGate) {
  auto f = filter_for(0);
  f.loss_detector = TdmaLossConfig{1};
  EXPECT_THROW(PsfpInstance(0, 0, {{f}}, nullptr), ConfigError);
}

TEST(Stats, SnapshotsAreMonotoneAndConserved) {
  auto gated = filter_for(0);
  gated.gate = GateControlList(microseconds(500), {{0, microseconds(250)}});
  auto sized = filter_for(1);
  sized.meter = MaxFrameSize{64};
  PsfpInstance inst(0, 0, {{gated, sized}}, nullptr);
  RngStream rng(4, "stats");
  PortStats prev = inst.snapshot_stats();
  for (int i = 0; i < 5000; ++i) {
    const auto stream = static_cast<std::uint32_t>(rng.uniform_int(0, 2));
    inst.ingest(frame_of(stream, Priority::P3, static_cast<std::uint32_t>(rng.uniform_int(0, 100))),
                rng.uniform_int(0, seconds(1)));
    const PortStats now = inst.snapshot_stats();
    ASSERT_TRUE(now.conserved());
    ASSERT_TRUE(prev.total.dominated_by(now.total));
    for (const auto& [id, c] : prev.per_stream) {
      ASSERT_TRUE(c.dominated_by(now.per_stream.at(id)));
    }
    prev = now;
  }
  EXPECT_EQ(prev.total.arrived, 5000u);
}

TEST(IngressSchedule, ShiftsAndWidensEachWindow) {
  const GateControlList egress(microseconds(500), {{0, microseconds(124)}, {microseconds(250), microseconds(124)}});
  const Duration delay = transmission_duration(1522, mbps(100));
  const auto g = ingress_schedule(egress, delay, microseconds(10), microseconds(5));
  ASSERT_EQ(g.entries().size(), 2u);
  EXPECT_EQ(g.entries()[0], (GateEntry{delay - microseconds(10), microseconds(15)}));
  EXPECT_EQ(g.entries()[1], (GateEntry{microseconds(250) + delay - microseconds(10), microseconds(15)}));
}

TEST(IngressSchedule, SplitsAcrossTheCycleBoundary) {
  const GateControlList egress(microseconds(500), {{microseconds(490), microseconds(10)}});
  const auto g = ingress_schedule(egress, microseconds(8), microseconds(2), microseconds(4));
  // Window [496, 502) wraps to [496, 500) and [0, 2).
  ASSERT_EQ(g.entries().size(), 2u);
  EXPECT_EQ(g.entries()[0], (GateEntry{0, microseconds(2)}));
  EXPECT_EQ(g.entries()[1], (GateEntry{microseconds(496), microseconds(4)}));
  EXPECT_EQ(g.state_at(microseconds(999)), GateState::Open);
  EXPECT_EQ(g.state_at(microseconds(1002)), GateState::Closed);
}
