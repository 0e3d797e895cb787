#include "ivn/nads.hpp"
#include "ivn/engine.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace ivn;

namespace {

GroundTruthEvent event_at(SimTime at, std::uint32_t stream, std::vector<std::uint64_t> refs = {}) {
  GroundTruthEvent e;
  e.at = at;
  e.stream = StreamId{stream};
  e.frame_refs = std::move(refs);
  return e;
}

AnomalyAlarm alarm_at(SimTime at, std::uint32_t stream, IndicatorKind kind = IndicatorKind::GateDrop,
                      std::optional<std::uint64_t> ref = std::nullopt) {
  AnomalyAlarm a;
  a.at = at;
  a.stream = StreamId{stream};
  a.kind = kind;
  a.frame_ref = ref;
  return a;
}

// Straight transcription of the attribution rules, quadratic on purpose.
Score reference_score(const std::vector<GroundTruthEvent>& gt, const std::vector<AnomalyAlarm>& alarms,
                      const ScoreOptions& o) {
  std::set<std::size_t> hit;
  Score s;
  for (const auto& a : alarms) {
    if (o.mode == DetectionMode::DropOnly && a.kind == IndicatorKind::TdmaLoss) {
      continue;
    }
    ++s.alarms;
    std::optional<std::size_t> owner;
    for (std::size_t i = 0; i < gt.size() && !owner && a.frame_ref; ++i) {
      for (auto r : gt[i].frame_refs) {
        if (r == *a.frame_ref) {
          owner = i;
        }
      }
    }
    const auto latest = [&](bool same_stream) {
      std::optional<std::size_t> best;
      for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i].at > a.at || (same_stream && gt[i].stream != a.stream)) {
          continue;
        }
        if (!best || gt[i].at > gt[*best].at || (gt[i].at == gt[*best].at && i > *best)) {
          best = i;
        }
      }
      return best;
    };
    if (!owner) {
      auto i = latest(true);
      if (i && (o.stream_horizon || a.at < gt[*i].at + o.window)) {
        owner = i;
      }
    }
    if (!owner) {
      auto i = latest(false);
      if (i && a.at < gt[*i].at + o.window) {
        owner = i;
      }
    }
    if (owner) {
      hit.insert(*owner);
    } else {
      ++s.fp;
    }
  }
  s.tp = hit.size();
  s.fn = gt.size() - s.tp;
  return s;
}

} // namespace

TEST(Controller, CountsAreCumulativePerKey) {
  Controller c;
  IndicatorEvent e{100, 3, 1, StreamId{2}, IndicatorKind::GateDrop, 77};
  EXPECT_EQ(c.observe(e).cumulative, 1u);
  e.at = 200;
  EXPECT_EQ(c.observe(e).cumulative, 2u);
  e.kind = IndicatorKind::MeterDrop;
  EXPECT_EQ(c.observe(e).cumulative, 1u);
  e.port = 2;
  const auto a = c.observe(e);
  EXPECT_EQ(a.cumulative, 1u);
  EXPECT_EQ(a.frame_ref, 77u);
  EXPECT_EQ(a.node, 3u);
  EXPECT_EQ(c.alarms().size(), 4u);
  EXPECT_EQ(c.cumulative(3, 1, StreamId{2}, IndicatorKind::GateDrop), 2u);
  EXPECT_EQ(c.cumulative(3, 1, StreamId{2}, IndicatorKind::TdmaLoss), 0u);
}

TEST(Score, RatioExamples) {
  Score s{6814, 0, 2602, 6814};
  EXPECT_NEAR(*s.recall(), 0.72, 0.005);
  EXPECT_EQ(*s.precision(), 1.0);
  Score none{0, 0, 8918, 0};
  EXPECT_EQ(*none.recall(), 0.0);
  EXPECT_FALSE(none.precision().has_value());
  EXPECT_EQ(format_ratio(none.precision()), "undefined");
  Score half{1, 1, 0, 2};
  EXPECT_EQ(*half.precision(), 0.5);
  EXPECT_EQ(format_ratio(half.precision()), "0.500000");
  EXPECT_FALSE(Score{}.recall().has_value());
}

TEST(Score, FrameLinkWinsOverTime) {
  const std::vector<GroundTruthEvent> gt{event_at(0, 0, {10}), event_at(milliseconds(2), 0, {20})};
  // Arrives after the second event but names the first event's frame.
  const auto s = score(gt, {alarm_at(milliseconds(3), 0, IndicatorKind::GateDrop, 10)});
  EXPECT_EQ(s.tp, 1u);
  EXPECT_EQ(s.fn, 1u);
  EXPECT_EQ(s.fp, 0u);
}

TEST(Score, SameStreamHorizon) {
  const std::vector<GroundTruthEvent> gt{event_at(0, 0)};
  const std::vector<AnomalyAlarm> late{alarm_at(milliseconds(5), 0)};
  EXPECT_EQ(score(gt, late).tp, 1u);
  ScoreOptions bounded;
  bounded.stream_horizon = false;
  const auto s = score(gt, late, bounded);
  EXPECT_EQ(s.tp, 0u);
  EXPECT_EQ(s.fp, 1u);
}

TEST(Score, AnyStreamWithinWindow) {
  const std::vector<GroundTruthEvent> gt{event_at(milliseconds(1), 0)};
  auto s = score(gt, {alarm_at(milliseconds(1) + microseconds(999), 4)});
  EXPECT_EQ(s.tp, 1u);
  s = score(gt, {alarm_at(milliseconds(2), 4)});
  EXPECT_EQ(s.tp, 0u);
  EXPECT_EQ(s.fp, 1u);
  s = score(gt, {alarm_at(milliseconds(1) - 1, 4)});
  EXPECT_EQ(s.fp, 1u);
}

TEST(Score, AlarmsWithoutGroundTruthAreFalsePositives) {
  const auto s = score({}, {alarm_at(5, 0), alarm_at(6, 1)});
  EXPECT_EQ(s.fp, 2u);
  EXPECT_EQ(s.alarms, 2u);
  EXPECT_EQ(*s.precision(), 0.0);
}

TEST(Score, DropOnlyIgnoresLossAlarms) {
  const std::vector<GroundTruthEvent> gt{event_at(0, 0)};
  const std::vector<AnomalyAlarm> alarms{alarm_at(microseconds(500), 0, IndicatorKind::TdmaLoss)};
  ScoreOptions drop_only;
  drop_only.mode = DetectionMode::DropOnly;
  EXPECT_EQ(score(gt, alarms, drop_only), (Score{0, 0, 1, 0}));
  EXPECT_EQ(score(gt, alarms), (Score{1, 0, 0, 1}));
}

TEST(Score, SeveralAlarmsCountOneEventOnce) {
  const std::vector<GroundTruthEvent> gt{event_at(0, 0, {1})};
  const auto s = score(gt, {alarm_at(10, 0, IndicatorKind::GateDrop, 1), alarm_at(20, 0), alarm_at(30, 2)});
  EXPECT_EQ(s.tp, 1u);
  EXPECT_EQ(s.fp, 0u);
  EXPECT_EQ(s.alarms, 3u);
}

TEST(Score, AmbiguousGroundTruthRejectedUnlessOverlapAllowed) {
  const std::vector<GroundTruthEvent> gt{event_at(0, 0), event_at(microseconds(999), 0)};
  EXPECT_THROW(score(gt, {}), ConfigError);
  ScoreOptions o;
  o.allow_overlap = true;
  EXPECT_EQ(score(gt, {alarm_at(microseconds(999), 0)}, o).tp, 1u);
  // Different streams may be close together.
  EXPECT_NO_THROW(score({event_at(0, 0), event_at(1, 1)}, {}));
}

TEST(Score, MatchesReferenceOnRandomInputs) {
  std::mt19937_64 rng(42);
  for (int round = 0; round < 200; ++round) {
    std::vector<GroundTruthEvent> gt;
    std::uint64_t uid = 1;
    for (std::uint32_t stream = 0; stream < 3; ++stream) {
      SimTime t = static_cast<SimTime>(rng() % 500'000);
      while (t < milliseconds(20)) {
        gt.push_back(event_at(t, stream, {uid++}));
        t += milliseconds(1) + static_cast<SimTime>(rng() % 2'000'000);
      }
    }
    std::vector<AnomalyAlarm> alarms;
    for (int k = 0; k < 40; ++k) {
      const auto kind = static_cast<IndicatorKind>(rng() % 4);
      std::optional<std::uint64_t> ref;
      if (rng() % 3 == 0) {
        ref = 1 + rng() % (uid + 5);
      }
      alarms.push_back(alarm_at(static_cast<SimTime>(rng() % milliseconds(22)), static_cast<std::uint32_t>(rng() % 4),
                                kind, ref));
    }
    for (auto mode : {DetectionMode::DropOnly, DetectionMode::DropAndLoss}) {
      for (bool horizon : {false, true}) {
        ScoreOptions o;
        o.mode = mode;
        o.stream_horizon = horizon;
        EXPECT_EQ(score(gt, alarms, o), reference_score(gt, alarms, o)) << "round " << round;
      }
    }
    // Input order of ground truth and alarms does not matter.
    auto gt2 = gt;
    auto alarms2 = alarms;
    std::shuffle(gt2.begin(), gt2.end(), rng);
    std::shuffle(alarms2.begin(), alarms2.end(), rng);
    EXPECT_EQ(score(gt, alarms), score(gt2, alarms2));
  }
}

TEST(Report, RenderIsStable) {
  MetricsReport r;
  r.scenario = "demo";
  r.seed = 3;
  r.duration = seconds(1);
  r.ground_truth_events = 2;
  r.drop_only = Score{1, 0, 1, 1};
  r.drop_and_loss = Score{2, 0, 0, 3};
  PortReport p;
  p.node = "sw";
  p.port = 1;
  p.stats.total.arrived = 5;
  p.stats.total.forwarded = 4;
  p.stats.total.dropped_gate = 1;
  p.stats.per_stream[StreamId{0}] = p.stats.total;
  r.ports.push_back(p);
  const std::string text = render_report(r);
  EXPECT_NE(text.find("scenario=demo\nseed=3\nduration_ns=1000000000\ncorruption=none\n"), std::string::npos);
  EXPECT_NE(text.find("drop_only.recall=0.500000\n"), std::string::npos);
  EXPECT_NE(text.find("drop_and_loss.recall=1.000000\n"), std::string::npos);
  EXPECT_NE(text.find("total.dropped_gate=1\n"), std::string::npos);
  EXPECT_NE(text.find("psfp_instances=1\n"), std::string::npos);
  EXPECT_EQ(render_report(r), text);
  const std::string csv = render_port_stats_csv(r, [](StreamId) { return std::string("tc"); });
  EXPECT_EQ(csv, "node,port,stream,arrived,forwarded,dropped_gate,dropped_meter,dropped_unknown,loss_events\n"
                 "sw,1,*,5,4,1,0,0,0\n"
                 "sw,1,tc,5,4,1,0,0,0\n");
}
