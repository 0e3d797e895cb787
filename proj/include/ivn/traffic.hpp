#pragma once

// Application-layer traffic sources: timed control, shaped streams, CAN
// tunnels, background cross traffic and attack-trace replay.

#include "ivn/core.hpp"
#include "ivn/engine.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace ivn {

/// Static description of a declared stream.
struct StreamDescriptor {
  StreamId id;
  std::string name;
  NodeId src = 0;
  std::vector<NodeId> dsts;
  Priority priority = Priority::Untagged;
};

/// Creates frames with run-unique uids and per-(stream, src) sequence numbers.
class FrameFactory {
public:
  Frame make(const StreamDescriptor& stream, std::uint32_t payload, SimTime now,
             Provenance provenance = Provenance::Regular);
  std::uint64_t issued() const { return next_uid_ - 1; }

private:
  std::uint64_t next_uid_ = 1;
  std::map<std::pair<StreamId, NodeId>, std::uint64_t> seq_;
};

/// One frame per period, created `phase` after each cycle start.
struct TimedControl {
  Duration period = milliseconds(1) / 2;
  std::uint32_t payload = kMaxPayload;
  Duration phase = 0;
  friend bool operator==(const TimedControl&, const TimedControl&) = default;
};

/// Constant-rate source offered slightly above the shaper's idle slope, so the
/// egress credit-based shaper is the binding constraint.
struct ShapedStream {
  BitRate bandwidth = mbps(17);
  std::uint32_t payload = 400;
  double overdrive = 1.02;
  friend bool operator==(const ShapedStream&, const ShapedStream&) = default;
};

/// Periodic CAN message tunneled in one minimum-size Ethernet frame.
struct CanTunnel {
  std::uint32_t can_id = 0;
  Duration period = milliseconds(1) / 2;
  std::uint32_t can_payload = 8;
  friend bool operator==(const CanTunnel&, const CanTunnel&) = default;
};

/// Untagged background load with uniform payload sizes and gaps.
struct CrossTraffic {
  std::uint32_t min_payload = 0;
  std::uint32_t max_payload = kMaxPayload;
  Duration min_interval = microseconds(125);
  Duration max_interval = microseconds(500);
  friend bool operator==(const CrossTraffic&, const CrossTraffic&) = default;
};

using GeneratorKind = std::variant<TimedControl, ShapedStream, CanTunnel, CrossTraffic>;

struct GeneratorSpec {
  StreamId stream;
  GeneratorKind kind;
};

inline constexpr std::uint32_t kMaxCanPayload = 16;

struct CanRoute {
  StreamId stream;
  Priority priority = Priority::P0;
};

/// CAN identifier to tunnel stream mapping of one zonal gateway.
using CanIdMap = std::unordered_map<std::uint32_t, CanRoute>;

/// Wrap one CAN message into a frame of the mapped tunnel stream.
/// Throws ConfigError for unmapped ids or payloads above 16 B.
Frame encapsulate_can(std::uint32_t can_payload, std::uint32_t can_id, const CanIdMap& map,
                      const std::vector<StreamDescriptor>& streams, FrameFactory& factory, SimTime now);

struct TraceRecord {
  Duration offset = 0;
  std::uint32_t payload = 0;
  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct TraceFile {
  std::vector<TraceRecord> records;
  friend bool operator==(const TraceFile&, const TraceFile&) = default;
};

/// Parse the `offset_ns,payload_bytes` text format.
TraceFile parse_trace(std::istream& in);
TraceFile load_trace(const std::string& path);
void write_trace(std::ostream& out, const TraceFile& trace);
/// Convert a capture-derived CSV of `time_seconds,frame_bytes` rows (untagged
/// on-wire sizes, optional header) into a trace relative to the first row.
TraceFile convert_capture_csv(std::istream& in);

/// Sends a frame into the owning host's application-layer path.
using EmitFn = std::function<void(const Frame&)>;

/// Event-loop component driving one generator.
class TrafficSource {
public:
  virtual ~TrafficSource() = default;
  virtual void start(SimTime end) = 0;
  virtual std::uint64_t emitted() const = 0;
};

void validate_generator(const GeneratorSpec& spec, const StreamDescriptor& stream);

std::unique_ptr<TrafficSource> start_generator(Simulator& sim, const GeneratorSpec& spec,
                                               const StreamDescriptor& stream, RngStream rng,
                                               FrameFactory& factory, EmitFn emit);

/// Replay every record as an application-layer frame at start + offset.
std::unique_ptr<TrafficSource> replay_trace(Simulator& sim, const TraceFile& trace, SimTime start,
                                            const StreamDescriptor& stream, FrameFactory& factory, EmitFn emit);

/// Interval between frames of a shaped source.
Duration shaped_interval(const ShapedStream& s, std::uint32_t framing_overhead = kDefaultFramingOverhead,
                         bool tagged = true);

} // namespace ivn
