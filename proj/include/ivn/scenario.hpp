#pragma once

// Scenario model: topology, streams, sources, egress shaping, PSFP rules and
// corruptions, plus validation and the two canonical builders.

#include "ivn/core.hpp"
#include "ivn/corruption.hpp"
#include "ivn/netmodel.hpp"
#include "ivn/psfp.hpp"
#include "ivn/traffic.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ivn {

enum class NodeKind { Host, Switch };

struct NodeSpec {
  std::string name;
  NodeKind kind = NodeKind::Host;
  /// Store-and-forward delay inside a switch.
  Duration processing_delay = 0;
};

/// Full-duplex link. A node's ports are numbered in the order its links appear.
struct LinkSpec {
  std::string a;
  std::string b;
  LinkConfig config;
};

struct StreamSpec {
  std::string name;
  std::string src;
  std::vector<std::string> dsts;
  Priority priority = Priority::Untagged;
};

struct GeneratorEntry {
  std::string stream;
  GeneratorKind kind;
};

/// Replays a trace as application-layer frames of `stream`. With `replace`
/// the stream's own generators are disabled.
struct TraceBinding {
  std::string stream;
  SimTime start = 0;
  /// Path relative to the scenario file; resolved into `records` on load.
  std::string path;
  TraceFile records;
  bool replace = true;
};

struct QueueSpec {
  std::string name;
  int rank = 0;
  std::vector<Priority> priorities;
  std::vector<std::string> streams;
  std::optional<GateControlList> gate;
  std::optional<CbsConfig> cbs;
  std::optional<std::size_t> capacity;
};

/// Egress queue layout of the port of `node` facing `peer`.
struct EgressSpec {
  std::string node;
  std::string peer;
  std::vector<QueueSpec> queues;
};

struct FilterSpec {
  /// Stream name; empty together with `untagged` for the cross-traffic rule.
  std::string stream;
  bool untagged = false;
  std::optional<GateControlList> gate;
  MeterConfig meter;
  std::optional<TdmaLossConfig> loss_detector;
};

/// PSFP instance on the ingress port of `node` facing `peer`.
struct PsfpSpec {
  std::string node;
  std::string peer;
  std::vector<FilterSpec> filters;
};

struct CorruptionEntry {
  std::string stream;
  /// Attachment host; empty means the stream's source.
  std::string host;
  CorruptionSpec spec;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  Duration duration = seconds(10);
  Duration match_window = milliseconds(1);
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<StreamSpec> streams;
  std::vector<GeneratorEntry> generators;
  std::vector<TraceBinding> traces;
  std::vector<EgressSpec> egress;
  std::vector<PsfpSpec> psfp;
  std::vector<CorruptionEntry> corruptions;

  /// Throws ConfigError for unknown names.
  StreamId stream_id(const std::string& name) const;
  NodeId node_id(const std::string& name) const;
  const StreamSpec& stream(StreamId id) const { return streams.at(id.value); }
  std::string stream_name(StreamId id) const;
};

struct Port {
  NodeId peer = 0;
  std::size_t link = 0;
  friend bool operator==(const Port&, const Port&) = default;
};

/// Derived wiring and static forwarding.
struct Topology {
  /// ports[node][port]
  std::vector<std::vector<Port>> ports;
  /// (switch, stream) -> egress ports.
  std::map<std::pair<NodeId, StreamId>, std::vector<PortId>> forwarding;
  /// Host egress port of each stream's source.
  std::map<StreamId, PortId> source_port;
  /// (switch, ingress port) pairs each stream traverses.
  std::map<StreamId, std::set<std::pair<NodeId, PortId>>> ingress_hops;

  PortId port_of(NodeId node, NodeId peer) const;
};

/// Checks nodes, links and streams and computes shortest-path routes only.
Topology compute_routes(const Scenario& s);
/// Validates names and references, computes shortest-path routes and checks
/// that every traversed switch ingress port filters every stream crossing it.
/// Errors name the offending field, e.g. `streams[3].dsts[0]`.
Topology build_topology(const Scenario& s);
void validate(const Scenario& s);

/// Micro benchmark layout knobs.
struct MicroOptions {
  /// Length of the timed-control slot at the source, starting at cycle offset 0.
  Duration tc_slot = microseconds(124);
  /// Application emission offset of the timed-control source within the cycle.
  Duration tc_phase = microseconds(300);
  /// Ingress acceptance around the expected arrival of a full-size frame.
  Duration tc_early = microseconds(25);
  Duration tc_late = microseconds(25);
  std::uint32_t shaped_payload = 400;
  /// Credit ceiling of the shaped stream's CBS.
  std::int64_t cbs_hi_credit_bits = 6000;
  /// Largest frame the shaped-stream meter admits right after a full credit.
  std::uint32_t meter_cap_wire = kMaxPayload + kTaggedOverhead;
};

Scenario build_micro(const MicroOptions& options = {});

enum class TrafficPattern { TimedControl, ShapedStream, CanTunnel };
std::string to_string(TrafficPattern p);
/// Stream name of a traffic pattern inside the micro scenario.
std::string micro_stream(TrafficPattern p);

/// Micro scenario with one corruption of the given pattern.
Scenario micro_with_corruption(const Scenario& base, TrafficPattern pattern, CorruptionKind kind, Layer layer);

struct MacroOptions {
  BitRate camera_rate = mbps(15);
  BitRate lidar_rate = mbps(10);
  std::uint32_t shaped_payload = 1000;
  /// Application emission offset of each timed-control source.
  Duration tc_phase = microseconds(300);
  /// Timed-control slot at the sources; fits one full-size frame.
  Duration tc_source_slot = microseconds(124);
  /// Timed-control slot at switch egress ports, starting at the expected arrival.
  Duration tc_switch_slot = microseconds(16);
  Duration tc_early = microseconds(2);
  Duration tc_late = microseconds(2);
  std::int64_t host_hi_credit_bits = 2000;
  std::int64_t switch_hi_credit_bits = 300;
};

Scenario build_macro(const MacroOptions& options = {});

enum class TraceAttack { SshPatator, WebBruteForce, DosSlowloris };
std::string to_string(TraceAttack a);
TraceFile synthetic_trace(TraceAttack a);

enum class MacroTarget { RadarControl, CanTunnel, CameraStream };
std::string to_string(MacroTarget t);
/// Stream replaced by the attack trace for a target.
std::string macro_stream(MacroTarget t);
/// Macro scenario with the target stream replaced by the attack trace.
Scenario macro_with_attack(const Scenario& base, TraceAttack attack, MacroTarget target);

} // namespace ivn
