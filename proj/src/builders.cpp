#include "ivn/scenario.hpp"

#include <array>

namespace ivn {

namespace {

constexpr Duration kCycle = microseconds(500);
constexpr BitRate kLinkRate = mbps(100);

std::vector<GateEntry> complement(const std::vector<GateEntry>& open, Duration cycle) {
  std::vector<GateEntry> out;
  Duration cursor = 0;
  for (const auto& e : open) {
    if (e.offset > cursor) {
      out.push_back({cursor, e.offset - cursor});
    }
    cursor = e.offset + e.length;
  }
  if (cursor < cycle) {
    out.push_back({cursor, cycle - cursor});
  }
  return out;
}

/// Eight priority queues plus untagged, all behind `gate` when given.
std::vector<QueueSpec> priority_queues(const std::optional<GateControlList>& gate) {
  std::vector<QueueSpec> out;
  for (int p = 7; p >= -1; --p) {
    QueueSpec q;
    q.name = to_string(priority_from_int(p));
    q.rank = p;
    q.priorities = {priority_from_int(p)};
    q.gate = gate;
    out.push_back(std::move(q));
  }
  return out;
}

QueueSpec shaped_queue(const std::string& stream, int rank, BitRate idle, std::int64_t hi,
                       const std::optional<GateControlList>& gate) {
  QueueSpec q;
  q.name = stream;
  q.rank = rank;
  q.streams = {stream};
  q.cbs = CbsConfig{idle, hi};
  q.gate = gate;
  return q;
}

FilterSpec stream_filter(const std::string& stream) {
  FilterSpec f;
  f.stream = stream;
  return f;
}

} // namespace

std::string to_string(TrafficPattern p) {
  switch (p) {
  case TrafficPattern::TimedControl: return "timed_control";
  case TrafficPattern::ShapedStream: return "shaped_stream";
  case TrafficPattern::CanTunnel: return "can_tunnel";
  }
  return "?";
}

std::string micro_stream(TrafficPattern p) { return to_string(p); }

Scenario build_micro(const MicroOptions& o) {
  Scenario s;
  s.name = "micro";
  s.nodes = {{"source", NodeKind::Host, 0}, {"switch", NodeKind::Switch, 0}, {"sink", NodeKind::Host, 0}};
  s.links = {{"source", "switch", LinkConfig{kLinkRate, 0}}, {"switch", "sink", LinkConfig{kLinkRate, 0}}};

  const std::string tc = micro_stream(TrafficPattern::TimedControl);
  const std::string shaped = micro_stream(TrafficPattern::ShapedStream);
  const std::string can = micro_stream(TrafficPattern::CanTunnel);
  s.streams = {
      {tc, "source", {"sink"}, Priority::P7},
      {shaped, "source", {"sink"}, Priority::P6},
      {can, "source", {"sink"}, Priority::P5},
      {"cross_traffic", "source", {"sink"}, Priority::Untagged},
  };
  const ShapedStream shaped_gen{mbps(17), o.shaped_payload, 1.02};
  s.generators = {
      {tc, TimedControl{kCycle, kMaxPayload, o.tc_phase}},
      {shaped, shaped_gen},
      {can, CanTunnel{0x100, kCycle, 8}},
      {"cross_traffic", CrossTraffic{}},
  };

  const GateControlList tc_gate(kCycle, {{0, o.tc_slot}});
  const GateControlList rest_gate(kCycle, complement(tc_gate.entries(), kCycle));
  EgressSpec src{"source", "switch", {}};
  src.queues.push_back(shaped_queue(shaped, 6, shaped_gen.bandwidth, o.cbs_hi_credit_bits, rest_gate));
  for (auto& q : priority_queues(rest_gate)) {
    if (q.rank == 7) {
      q.gate = tc_gate;
    }
    src.queues.push_back(std::move(q));
  }
  s.egress = {src, EgressSpec{"switch", "sink", priority_queues(std::nullopt)}};

  const auto tc_arrival = transmission_duration(wire_size_of(kMaxPayload, true), kLinkRate);
  FilterSpec f_tc = stream_filter(tc);
  f_tc.gate = ingress_schedule(tc_gate, tc_arrival, o.tc_early, o.tc_late);
  f_tc.loss_detector = TdmaLossConfig{1};
  FilterSpec f_shaped = stream_filter(shaped);
  f_shaped.meter = CreditMeterConfig{
      shaped_gen.bandwidth,
      meter_cap_for(shaped_gen.bandwidth, o.cbs_hi_credit_bits, o.meter_cap_wire, kLinkRate)};
  FilterSpec f_can = stream_filter(can);
  f_can.meter = MaxFrameSize{kMinFrame};
  FilterSpec f_cross;
  f_cross.untagged = true;
  s.psfp = {PsfpSpec{"switch", "source", {f_tc, f_shaped, f_can, f_cross}}};
  return s;
}

Scenario micro_with_corruption(const Scenario& base, TrafficPattern pattern, CorruptionKind kind, Layer layer) {
  Scenario s = base;
  CorruptionEntry c;
  c.stream = micro_stream(pattern);
  c.spec.target = s.stream_id(c.stream);
  c.spec.kind = kind;
  c.spec.layer = layer;
  s.corruptions.push_back(c);
  s.name = base.name + "/" + to_string(pattern) + "/" + to_string(kind) + "/" + to_string(layer);
  return s;
}

namespace {

struct Zone {
  const char* sw;
  std::array<const char*, 3> controllers;
};

constexpr std::array<Zone, 3> kZones{{
    {"switch_front", {"zc_front_left", "zc_front", "zc_front_right"}},
    {"switch_center", {"zc_center_left", "zc_center", "zc_center_right"}},
    {"switch_rear", {"zc_rear_left", "zc_rear", "zc_rear_right"}},
}};

constexpr std::array<Priority, 4> kCanPriorities{Priority::P0, Priority::P1, Priority::P3, Priority::P6};
constexpr std::array<Duration, 4> kCanPeriods{milliseconds(10), milliseconds(20), milliseconds(100),
                                              milliseconds(500)};
constexpr std::uint32_t kBackboneCanIds = 201;

struct ShapedSource {
  const char* stream;
  const char* host;
  const char* sw;
  bool camera;
};

constexpr std::array<ShapedSource, 5> kShaped{{
    {"cam_front_video", "cam_front", "switch_front", true},
    {"lidar_front_points", "lidar_front", "switch_front", false},
    {"cam_center_video", "cam_center", "switch_center", true},
    {"cam_rear_video", "cam_rear", "switch_rear", true},
    {"lidar_rear_points", "lidar_rear", "switch_rear", false},
}};

std::string can_stream_name(const std::string& zc, Priority p) { return "can_" + zc + "_" + to_string(p); }

} // namespace

Scenario build_macro(const MacroOptions& o) {
  Scenario s;
  s.name = "macro";
  const LinkConfig link{kLinkRate, 0};

  for (const auto& z : kZones) {
    s.nodes.push_back({z.sw, NodeKind::Switch, 0});
  }
  const std::vector<std::pair<std::string, std::string>> hosts{
      {"cam_front", "switch_front"},       {"lidar_front", "switch_front"},
      {"radar", "switch_front"},           {"zc_front_left", "switch_front"},
      {"zc_front", "switch_front"},        {"zc_front_right", "switch_front"},
      {"sensor_fusion", "switch_center"},  {"cam_center", "switch_center"},
      {"infotainment", "switch_center"},   {"collision_avoidance", "switch_center"},
      {"zc_center_left", "switch_center"}, {"zc_center", "switch_center"},
      {"zc_center_right", "switch_center"}, {"cam_rear", "switch_rear"},
      {"lidar_rear", "switch_rear"},       {"zc_rear_left", "switch_rear"},
      {"zc_rear", "switch_rear"},          {"zc_rear_right", "switch_rear"},
  };
  for (const auto& [h, sw] : hosts) {
    s.nodes.push_back({h, NodeKind::Host, 0});
    s.links.push_back({h, sw, link});
  }
  s.links.push_back({"switch_front", "switch_center", link});
  s.links.push_back({"switch_center", "switch_rear", link});

  // Timed control.
  const std::uint32_t tc_payload = kMinFrame - kTaggedOverhead;
  const Duration d_tc = transmission_duration(kMinFrame, kLinkRate);
  s.streams.push_back({"radar_control", "radar", {"collision_avoidance"}, Priority::P7});
  s.streams.push_back({"fusion_control", "sensor_fusion", {"collision_avoidance"}, Priority::P7});
  // The fusion slot sits half a cycle after the radar slot; both sources emit
  // at the same distance before their slot.
  const Duration fusion_offset = kCycle / 2;
  s.generators.push_back({"radar_control", TimedControl{kCycle, tc_payload, o.tc_phase}});
  s.generators.push_back({"fusion_control", TimedControl{kCycle, tc_payload, (o.tc_phase + fusion_offset) % kCycle}});

  // Shaped sensor streams.
  for (const auto& sh : kShaped) {
    s.streams.push_back({sh.stream, sh.host, {"sensor_fusion"}, Priority::P5});
    s.generators.push_back(
        {sh.stream, ShapedStream{sh.camera ? o.camera_rate : o.lidar_rate, o.shaped_payload, 1.02}});
  }
  const auto rate_of = [&](const std::string& stream) {
    for (const auto& sh : kShaped) {
      if (stream == sh.stream) {
        return sh.camera ? o.camera_rate : o.lidar_rate;
      }
    }
    return BitRate{0};
  };

  // CAN tunnels: one stream per (zonal controller, priority), multicast to
  // every other zonal controller.
  std::vector<std::string> controllers;
  for (const auto& z : kZones) {
    controllers.insert(controllers.end(), z.controllers.begin(), z.controllers.end());
  }
  std::vector<std::string> can_streams;
  for (const auto& zc : controllers) {
    std::vector<std::string> dsts;
    for (const auto& other : controllers) {
      if (other != zc) {
        dsts.push_back(other);
      }
    }
    for (auto p : kCanPriorities) {
      s.streams.push_back({can_stream_name(zc, p), zc, dsts, p});
      can_streams.push_back(can_stream_name(zc, p));
    }
  }
  for (std::uint32_t i = 0; i < kBackboneCanIds; ++i) {
    const auto& zc = controllers[i % controllers.size()];
    const Priority p = kCanPriorities[(i / controllers.size()) % kCanPriorities.size()];
    const Duration period = kCanPeriods[(i / (controllers.size() * kCanPriorities.size())) % kCanPeriods.size()];
    s.generators.push_back({can_stream_name(zc, p), CanTunnel{0x100 + i, period, 8}});
  }

  // Egress. Timed-control slots open at the expected arrival of the frame
  // sent at the start of the source slot.
  const GateControlList radar_gate(kCycle, {{0, o.tc_source_slot}});
  const GateControlList fusion_gate(kCycle, {{fusion_offset, o.tc_source_slot}});
  const GateControlList front_trunk_tc(kCycle, {{d_tc, o.tc_switch_slot}});
  const GateControlList center_ca_tc(kCycle, {{2 * d_tc, o.tc_switch_slot}, {fusion_offset + d_tc, o.tc_switch_slot}});

  const auto tc_port = [&](const std::string& node, const std::string& peer, const GateControlList& tc,
                           const std::vector<std::string>& shaped, std::int64_t hi) {
    const GateControlList rest(kCycle, complement(tc.entries(), kCycle));
    EgressSpec e{node, peer, {}};
    for (const auto& st : shaped) {
      e.queues.push_back(shaped_queue(st, 5, rate_of(st), hi, rest));
    }
    for (auto& q : priority_queues(rest)) {
      if (q.rank == 7) {
        q.gate = tc;
      }
      e.queues.push_back(std::move(q));
    }
    return e;
  };
  const auto plain_port = [&](const std::string& node, const std::string& peer,
                              const std::vector<std::string>& shaped, std::int64_t hi) {
    EgressSpec e{node, peer, {}};
    for (const auto& st : shaped) {
      e.queues.push_back(shaped_queue(st, 5, rate_of(st), hi, std::nullopt));
    }
    for (auto& q : priority_queues(std::nullopt)) {
      e.queues.push_back(std::move(q));
    }
    return e;
  };

  s.egress.push_back(tc_port("radar", "switch_front", radar_gate, {}, 0));
  s.egress.push_back(tc_port("sensor_fusion", "switch_center", fusion_gate, {}, 0));
  for (const auto& sh : kShaped) {
    s.egress.push_back(plain_port(sh.host, sh.sw, {sh.stream}, o.host_hi_credit_bits));
  }
  s.egress.push_back(tc_port("switch_front", "switch_center", front_trunk_tc, {"cam_front_video", "lidar_front_points"},
                             o.switch_hi_credit_bits));
  s.egress.push_back(tc_port("switch_center", "collision_avoidance", center_ca_tc, {}, 0));
  s.egress.push_back(plain_port("switch_rear", "switch_center", {"cam_rear_video", "lidar_rear_points"},
                                o.switch_hi_credit_bits));
  s.egress.push_back(plain_port("switch_center", "sensor_fusion",
                                {"cam_front_video", "lidar_front_points", "cam_center_video", "cam_rear_video",
                                 "lidar_rear_points"},
                                o.switch_hi_credit_bits));

  // Ingress policing.
  const Topology topo = compute_routes(s);
  const std::uint32_t shaped_wire = wire_size_of(o.shaped_payload, true);
  const auto filter_for = [&](const std::string& stream, bool from_host, const GateControlList* upstream_tc) {
    FilterSpec f = stream_filter(stream);
    if (upstream_tc) {
      f.gate = ingress_schedule(*upstream_tc, d_tc, o.tc_early, o.tc_late);
    } else if (const BitRate r = rate_of(stream); r > 0) {
      const std::int64_t hi = from_host ? o.host_hi_credit_bits : o.switch_hi_credit_bits;
      f.meter = CreditMeterConfig{r, meter_cap_for(r, hi, shaped_wire, kLinkRate)};
    } else {
      f.meter = MaxFrameSize{kMinFrame};
    }
    return f;
  };
  const auto upstream_tc_gate = [&](const std::string& stream, const std::string& peer) -> const GateControlList* {
    if (stream == "radar_control") {
      return peer == "radar" ? &radar_gate : &front_trunk_tc;
    }
    if (stream == "fusion_control") {
      return &fusion_gate;
    }
    return nullptr;
  };

  for (std::size_t n = 0; n < s.nodes.size(); ++n) {
    if (s.nodes[n].kind != NodeKind::Switch) {
      continue;
    }
    const auto& ports = topo.ports[n];
    for (std::size_t p = 0; p < ports.size(); ++p) {
      const auto& peer = s.nodes[static_cast<std::size_t>(ports[p].peer)];
      PsfpSpec inst{s.nodes[n].name, peer.name, {}};
      for (std::size_t i = 0; i < s.streams.size(); ++i) {
        const auto hops = topo.ingress_hops.find(StreamId{static_cast<std::uint32_t>(i)});
        if (hops == topo.ingress_hops.end() ||
            !hops->second.contains({static_cast<NodeId>(n), static_cast<PortId>(p)})) {
          continue;
        }
        const auto& name = s.streams[i].name;
        inst.filters.push_back(filter_for(name, peer.kind == NodeKind::Host, upstream_tc_gate(name, peer.name)));
      }
      // Hosts that send nothing still get an instance so unknown traffic is dropped.
      if (!inst.filters.empty() || peer.name == "infotainment") {
        s.psfp.push_back(std::move(inst));
      }
    }
  }
  return s;
}

std::string to_string(TraceAttack a) {
  switch (a) {
  case TraceAttack::SshPatator: return "ssh_patator";
  case TraceAttack::WebBruteForce: return "web_brute_force";
  case TraceAttack::DosSlowloris: return "dos_slowloris";
  }
  return "?";
}

std::string to_string(MacroTarget t) {
  switch (t) {
  case MacroTarget::RadarControl: return "radar_control";
  case MacroTarget::CanTunnel: return "can_tunnel";
  case MacroTarget::CameraStream: return "camera_stream";
  }
  return "?";
}

std::string macro_stream(MacroTarget t) {
  switch (t) {
  case MacroTarget::RadarControl: return "radar_control";
  case MacroTarget::CanTunnel: return can_stream_name("zc_front_left", Priority::P6);
  case MacroTarget::CameraStream: return "cam_front_video";
  }
  return "";
}

namespace {

// Payload sizes are tagged-frame payloads: wire = payload + 22, minimum 64.
TraceFile ssh_trace() {
  TraceFile t;
  // Login attempts: a full-size frame immediately followed by two short ones.
  const std::array<Duration, 7> bursts{milliseconds(350), milliseconds(1900), milliseconds(3400), milliseconds(5050),
                                       milliseconds(6600), milliseconds(8200), milliseconds(9450)};
  for (std::size_t i = 0; i < bursts.size(); ++i) {
    t.records.push_back({bursts[i], kMaxPayload});
    t.records.push_back({bursts[i] + microseconds(10), 68 + static_cast<std::uint32_t>(i)});
    t.records.push_back({bursts[i] + microseconds(25), 120});
  }
  return t;
}

TraceFile web_trace() {
  TraceFile t;
  constexpr std::uint32_t k74 = 74 - kTaggedOverhead;
  // Short requests land just before the ingress window at 0.2 s and 5.2 s closes.
  t.records = {
      {milliseconds(120), 480},  {milliseconds(200) - microseconds(100), k74},
      {milliseconds(900), 1200}, {milliseconds(2300), 310},
      {milliseconds(3700), 860}, {milliseconds(5200) - microseconds(100), k74},
      {milliseconds(6100), 540}, {milliseconds(7400), 1500},
      {milliseconds(8800), 95},  {milliseconds(9600), 700},
  };
  return t;
}

TraceFile slowloris_trace() {
  TraceFile t;
  // Minimum-size frames emitted while the source gate is closed, one per cycle,
  // except the pair 229 us apart ahead of the window at 5.17 s.
  t.records = {
      {milliseconds(400) + microseconds(300), 0},  {milliseconds(1500) + microseconds(200), 700},
      {milliseconds(2600) + microseconds(350), 0}, {milliseconds(3900) + microseconds(180), 0},
      {microseconds(5169700), 0},                  {microseconds(5169929), 0},
      {milliseconds(6300) + microseconds(260), 350}, {milliseconds(7700) + microseconds(410), 0},
      {milliseconds(9100) + microseconds(300), 1100},
  };
  return t;
}

} // namespace

TraceFile synthetic_trace(TraceAttack a) {
  switch (a) {
  case TraceAttack::SshPatator: return ssh_trace();
  case TraceAttack::WebBruteForce: return web_trace();
  case TraceAttack::DosSlowloris: return slowloris_trace();
  }
  return {};
}

Scenario macro_with_attack(const Scenario& base, TraceAttack attack, MacroTarget target) {
  Scenario s = base;
  TraceBinding b;
  b.stream = macro_stream(target);
  b.path = "traces/" + to_string(attack) + ".csv";
  b.records = synthetic_trace(attack);
  s.traces.push_back(std::move(b));
  s.name = base.name + "/" + to_string(attack) + "/" + to_string(target);
  return s;
}

} // namespace ivn
