#include "ivn/traffic.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ivn;

namespace {

StreamDescriptor stream_of(std::uint32_t id, Priority p, NodeId src = 1) {
  StreamDescriptor s;
  s.id = StreamId{id};
  s.name = "s" + std::to_string(id);
  s.src = src;
  s.dsts = {2};
  s.priority = p;
  return s;
}

std::vector<Frame> run_source(const GeneratorSpec& spec, const StreamDescriptor& stream, SimTime end,
                              std::uint64_t seed = 1) {
  Simulator sim;
  FrameFactory factory;
  std::vector<Frame> out;
  auto src = start_generator(sim, spec, stream, RngStream(seed, "gen:test:0"), factory,
                             [&](const Frame& f) { out.push_back(f); });
  src->start(end);
  sim.run_until(end);
  EXPECT_EQ(src->emitted(), out.size());
  return out;
}

} // namespace

TEST(FrameFactory, UidsAreUniqueAndSequencesPerStream) {
  FrameFactory factory;
  const auto a = stream_of(0, Priority::P5);
  const auto b = stream_of(1, Priority::P3);
  const Frame a1 = factory.make(a, 10, 5);
  const Frame b1 = factory.make(b, 10, 6);
  const Frame a2 = factory.make(a, 10, 7);
  EXPECT_EQ(a1.uid, 1u);
  EXPECT_EQ(b1.uid, 2u);
  EXPECT_EQ(a2.uid, 3u);
  EXPECT_EQ(a1.seq, 1u);
  EXPECT_EQ(b1.seq, 1u);
  EXPECT_EQ(a2.seq, 2u);
  EXPECT_EQ(a2.created_at, 7);
  EXPECT_EQ(a2.dst, 2u);
  EXPECT_EQ(factory.issued(), 3u);
}

TEST(CanTunnel, EncapsulationSizes) {
  FrameFactory factory;
  const std::vector<StreamDescriptor> streams{stream_of(3, Priority::P0)};
  const CanIdMap map{{0x1a0, CanRoute{StreamId{3}, Priority::P4}}};
  const Frame f8 = encapsulate_can(8, 0x1a0, map, streams, factory, 0);
  EXPECT_EQ(f8.wire_size(), 64u);
  EXPECT_EQ(f8.priority, Priority::P4);
  EXPECT_EQ(f8.stream, StreamId{3});
  EXPECT_EQ(encapsulate_can(16, 0x1a0, map, streams, factory, 0).wire_size(), 64u);
  EXPECT_THROW(encapsulate_can(17, 0x1a0, map, streams, factory, 0), ConfigError);
  EXPECT_THROW(encapsulate_can(8, 0x1a1, map, streams, factory, 0), ConfigError);
}

TEST(Generators, TimedControlEmitsOnePerPeriod) {
  GeneratorSpec spec{StreamId{0}, TimedControl{microseconds(500), 100, microseconds(300)}};
  const auto frames = run_source(spec, stream_of(0, Priority::P7), seconds(10) - 1);
  ASSERT_EQ(frames.size(), 20000u);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(frames[i].created_at, microseconds(300) + static_cast<SimTime>(i) * microseconds(500));
    EXPECT_EQ(frames[i].seq, i + 1);
  }
}

TEST(Generators, ShapedStreamOffersOverdrivenBandwidth) {
  const ShapedStream s{mbps(17), 400, 1.02};
  const Duration interval = shaped_interval(s);
  // (400 + 22 + 20) B at 17.34 Mbit/s.
  EXPECT_EQ(interval, static_cast<Duration>(442.0 * 8 * 1e9 / (17e6 * 1.02)));
  const auto frames = run_source(GeneratorSpec{StreamId{0}, s}, stream_of(0, Priority::P6), seconds(1));
  ASSERT_GE(frames.size(), 2u);
  EXPECT_LT(frames.front().created_at, interval);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    EXPECT_EQ(frames[i].created_at - frames[i - 1].created_at, interval);
  }
}

TEST(Generators, CanTunnelPeriodAndSize) {
  GeneratorSpec spec{StreamId{0}, CanTunnel{0x10, microseconds(500), 8}};
  const auto frames = run_source(spec, stream_of(0, Priority::P5), milliseconds(100));
  ASSERT_GE(frames.size(), 199u);
  EXPECT_LE(frames.size(), 201u);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    EXPECT_EQ(frames[i].created_at - frames[i - 1].created_at, microseconds(500));
    EXPECT_EQ(frames[i].wire_size(), 64u);
  }
}

TEST(Generators, CrossTrafficMeanGap) {
  GeneratorSpec spec{StreamId{0}, CrossTraffic{}};
  const auto frames = run_source(spec, stream_of(0, Priority::Untagged), seconds(10), 7);
  ASSERT_GT(frames.size(), 1000u);
  const double mean_gap =
      static_cast<double>(frames.back().created_at - frames.front().created_at) / static_cast<double>(frames.size() - 1);
  EXPECT_NEAR(mean_gap, 312'500.0, 312'500.0 * 0.01);
  double payload_sum = 0;
  for (const auto& f : frames) {
    EXPECT_LE(f.payload_size, kMaxPayload);
    payload_sum += f.payload_size;
  }
  EXPECT_NEAR(payload_sum / static_cast<double>(frames.size()), 750.0, 750.0 * 0.02);
}

TEST(Generators, SameSeedSameFrames) {
  GeneratorSpec spec{StreamId{0}, CrossTraffic{}};
  const auto a = run_source(spec, stream_of(0, Priority::Untagged), milliseconds(200), 3);
  const auto b = run_source(spec, stream_of(0, Priority::Untagged), milliseconds(200), 3);
  const auto c = run_source(spec, stream_of(0, Priority::Untagged), milliseconds(200), 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].created_at, b[i].created_at);
    EXPECT_EQ(a[i].payload_size, b[i].payload_size);
  }
  bool differs = a.size() != c.size();
  for (std::size_t i = 0; !differs && i < a.size(); ++i) {
    differs = a[i].created_at != c[i].created_at;
  }
  EXPECT_TRUE(differs);
}

TEST(Generators, RejectsInvalidParameters) {
  const auto tagged = stream_of(0, Priority::P5);
  EXPECT_THROW(validate_generator({StreamId{0}, TimedControl{0, 100, 0}}, tagged), ConfigError);
  EXPECT_THROW(validate_generator({StreamId{0}, TimedControl{100, 100, 100}}, tagged), ConfigError);
  EXPECT_THROW(validate_generator({StreamId{0}, TimedControl{100, 1501, 0}}, tagged), FrameTooLarge);
  EXPECT_THROW(validate_generator({StreamId{0}, ShapedStream{mbps(17), 400, 0.9}}, tagged), ConfigError);
  EXPECT_THROW(validate_generator({StreamId{0}, CanTunnel{1, 100, 17}}, tagged), ConfigError);
  EXPECT_THROW(validate_generator({StreamId{0}, CanTunnel{1, 100, 8}}, stream_of(0, Priority::Untagged)),
               ConfigError);
  EXPECT_THROW(validate_generator({StreamId{0}, CrossTraffic{10, 5, 1, 2}}, tagged), ConfigError);
}

TEST(Trace, ParseWriteRoundTrip) {
  std::istringstream in("# comment\noffset_ns,payload_bytes\r\n0,60\n1500,1400\n1500,0\n");
  const TraceFile t = parse_trace(in);
  ASSERT_EQ(t.records.size(), 3u);
  EXPECT_EQ(t.records[1], (TraceRecord{1500, 1400}));
  std::ostringstream out;
  write_trace(out, t);
  EXPECT_EQ(out.str(), "offset_ns,payload_bytes\n0,60\n1500,1400\n1500,0\n");
  std::istringstream again(out.str());
  EXPECT_EQ(parse_trace(again), t);
}

TEST(Trace, RejectsMalformedInput) {
  for (const char* text : {"", "time,size\n0,1\n", "offset_ns,payload_bytes\n5,1\n4,1\n",
                           "offset_ns,payload_bytes\n0,1501\n", "offset_ns,payload_bytes\n-1,2\n",
                           "offset_ns,payload_bytes\n0;2\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parse_trace(in), ConfigError) << text;
  }
}

TEST(Trace, ConvertCapture) {
  std::istringstream in("time,len\n10.5,60\n10.5000015,1514\n10.6,3000\n");
  const TraceFile t = convert_capture_csv(in);
  ASSERT_EQ(t.records.size(), 3u);
  EXPECT_EQ(t.records[0], (TraceRecord{0, 42}));
  EXPECT_EQ(t.records[1], (TraceRecord{1500, 1496}));
  EXPECT_EQ(t.records[2].offset, 100'000'000);
  EXPECT_EQ(t.records[2].payload, kMaxPayload);
}

TEST(Trace, ReplayEmitsAtOffsets) {
  Simulator sim;
  FrameFactory factory;
  TraceFile t{{{0, 10}, {2000, 20}, {seconds(2), 30}}};
  std::vector<Frame> out;
  auto src = replay_trace(sim, t, milliseconds(1), stream_of(2, Priority::Untagged), factory,
                          [&](const Frame& f) { out.push_back(f); });
  src->start(seconds(1));
  sim.run_until(seconds(1));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].created_at, milliseconds(1));
  EXPECT_EQ(out[1].created_at, milliseconds(1) + 2000);
  EXPECT_EQ(out[1].payload_size, 20u);
  EXPECT_EQ(out[1].stream, StreamId{2});
  EXPECT_THROW(replay_trace(sim, t, 0, StreamDescriptor{}, factory, [](const Frame&) {}), ConfigError);
}
