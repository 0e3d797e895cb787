#include "ivn/scenario.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

namespace ivn {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

std::string at(const std::string& field, std::size_t i) { return field + "[" + std::to_string(i) + "]"; }

} // namespace

StreamId Scenario::stream_id(const std::string& name) const {
  for (std::size_t i = 0; i < streams.size(); ++i) {
    if (streams[i].name == name) {
      return StreamId{static_cast<std::uint32_t>(i)};
    }
  }
  throw ConfigError("unknown stream '" + name + "'");
}

NodeId Scenario::node_id(const std::string& name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name == name) {
      return static_cast<NodeId>(i);
    }
  }
  throw ConfigError("unknown node '" + name + "'");
}

std::string Scenario::stream_name(StreamId id) const {
  if (!id.known()) {
    return "unknown";
  }
  return id.value < streams.size() ? streams[id.value].name : "stream" + std::to_string(id.value);
}

PortId Topology::port_of(NodeId node, NodeId peer) const {
  const auto& ps = ports.at(static_cast<std::size_t>(node));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].peer == peer) {
      return static_cast<PortId>(i);
    }
  }
  throw ConfigError("no link between node " + std::to_string(node) + " and " + std::to_string(peer));
}

Topology compute_routes(const Scenario& s) {
  if (s.duration <= 0) {
    fail("duration_ns", "must be positive");
  }
  if (s.match_window <= 0) {
    fail("match_window_ns", "must be positive");
  }

  std::unordered_map<std::string, NodeId> node_ids;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& n = s.nodes[i];
    if (n.name.empty()) {
      fail(at("nodes", i) + ".name", "must not be empty");
    }
    if (!node_ids.emplace(n.name, static_cast<NodeId>(i)).second) {
      fail(at("nodes", i) + ".name", "duplicate node '" + n.name + "'");
    }
    if (n.processing_delay < 0) {
      fail(at("nodes", i) + ".processing_delay_ns", "must be non-negative");
    }
  }
  const auto node_ref = [&](const std::string& path, const std::string& name) {
    const auto it = node_ids.find(name);
    if (it == node_ids.end()) {
      fail(path, "unknown node '" + name + "'");
    }
    return it->second;
  };
  const auto is_switch = [&](NodeId n) { return s.nodes[static_cast<std::size_t>(n)].kind == NodeKind::Switch; };

  Topology topo;
  topo.ports.resize(s.nodes.size());
  for (std::size_t i = 0; i < s.links.size(); ++i) {
    const auto& l = s.links[i];
    const std::string path = at("links", i);
    const NodeId a = node_ref(path + ".a", l.a);
    const NodeId b = node_ref(path + ".b", l.b);
    if (a == b) {
      fail(path, "link connects '" + l.a + "' to itself");
    }
    for (const auto& p : topo.ports[static_cast<std::size_t>(a)]) {
      if (p.peer == b) {
        fail(path, "duplicate link between '" + l.a + "' and '" + l.b + "'");
      }
    }
    if (l.config.rate <= 0) {
      fail(path + ".rate_bps", "must be positive");
    }
    if (l.config.propagation_delay < 0) {
      fail(path + ".propagation_delay_ns", "must be non-negative");
    }
    topo.ports[static_cast<std::size_t>(a)].push_back({b, i});
    topo.ports[static_cast<std::size_t>(b)].push_back({a, i});
  }

  std::unordered_map<std::string, StreamId> stream_ids;
  for (std::size_t i = 0; i < s.streams.size(); ++i) {
    const auto& st = s.streams[i];
    const std::string path = at("streams", i);
    if (st.name.empty()) {
      fail(path + ".name", "must not be empty");
    }
    if (!stream_ids.emplace(st.name, StreamId{static_cast<std::uint32_t>(i)}).second) {
      fail(path + ".name", "stream '" + st.name + "' declared more than once");
    }
    const NodeId src = node_ref(path + ".src", st.src);
    if (is_switch(src)) {
      fail(path + ".src", "stream source must be a host");
    }
    if (st.dsts.empty()) {
      fail(path + ".dsts", "needs at least one destination");
    }

    const StreamId id{static_cast<std::uint32_t>(i)};
    // Breadth-first search through switches only.
    std::vector<NodeId> parent(s.nodes.size(), -2);
    std::deque<NodeId> frontier{src};
    parent[static_cast<std::size_t>(src)] = -1;
    while (!frontier.empty()) {
      const NodeId n = frontier.front();
      frontier.pop_front();
      if (n != src && !is_switch(n)) {
        continue;
      }
      for (const auto& p : topo.ports[static_cast<std::size_t>(n)]) {
        if (parent[static_cast<std::size_t>(p.peer)] == -2) {
          parent[static_cast<std::size_t>(p.peer)] = n;
          frontier.push_back(p.peer);
        }
      }
    }
    std::optional<PortId> first_port;
    for (std::size_t d = 0; d < st.dsts.size(); ++d) {
      const std::string dpath = path + "." + at("dsts", d);
      const NodeId dst = node_ref(dpath, st.dsts[d]);
      if (dst == src || is_switch(dst)) {
        fail(dpath, "destination must be a host other than the source");
      }
      if (parent[static_cast<std::size_t>(dst)] == -2) {
        fail(dpath, "no route from '" + st.src + "' to '" + st.dsts[d] + "'");
      }
      std::vector<NodeId> hops{dst};
      while (hops.back() != src) {
        hops.push_back(parent[static_cast<std::size_t>(hops.back())]);
      }
      std::reverse(hops.begin(), hops.end());
      const PortId sp = topo.port_of(src, hops[1]);
      if (first_port && *first_port != sp) {
        fail(dpath, "destinations of one stream must share the source port");
      }
      first_port = sp;
      for (std::size_t h = 1; h + 1 < hops.size(); ++h) {
        const NodeId sw = hops[h];
        auto& out = topo.forwarding[{sw, id}];
        const PortId op = topo.port_of(sw, hops[h + 1]);
        if (std::find(out.begin(), out.end(), op) == out.end()) {
          out.push_back(op);
        }
        topo.ingress_hops[id].insert({sw, topo.port_of(sw, hops[h - 1])});
      }
    }
    topo.source_port[id] = *first_port;
  }
  return topo;
}

Topology build_topology(const Scenario& s) {
  Topology topo = compute_routes(s);
  std::unordered_map<std::string, NodeId> node_ids;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    node_ids.emplace(s.nodes[i].name, static_cast<NodeId>(i));
  }
  const auto node_ref = [&](const std::string& path, const std::string& name) {
    const auto it = node_ids.find(name);
    if (it == node_ids.end()) {
      fail(path, "unknown node '" + name + "'");
    }
    return it->second;
  };
  const auto is_switch = [&](NodeId n) { return s.nodes[static_cast<std::size_t>(n)].kind == NodeKind::Switch; };
  std::unordered_map<std::string, StreamId> stream_ids;
  for (std::size_t i = 0; i < s.streams.size(); ++i) {
    stream_ids.emplace(s.streams[i].name, StreamId{static_cast<std::uint32_t>(i)});
  }
  const auto stream_ref = [&](const std::string& path, const std::string& name) {
    const auto it = stream_ids.find(name);
    if (it == stream_ids.end()) {
      fail(path, "unknown stream '" + name + "'");
    }
    return it->second;
  };

  for (std::size_t i = 0; i < s.generators.size(); ++i) {
    const auto& g = s.generators[i];
    const std::string path = at("generators", i);
    const StreamId id = stream_ref(path + ".stream", g.stream);
    const auto& st = s.streams[id.value];
    StreamDescriptor desc{id, st.name, 0, {}, st.priority};
    try {
      validate_generator(GeneratorSpec{id, g.kind}, desc);
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
  }

  for (std::size_t i = 0; i < s.traces.size(); ++i) {
    const auto& t = s.traces[i];
    const std::string path = at("traces", i);
    stream_ref(path + ".stream", t.stream);
    if (t.start < 0) {
      fail(path + ".start_ns", "must be non-negative");
    }
    for (std::size_t r = 0; r < t.records.records.size(); ++r) {
      const auto& rec = t.records.records[r];
      if (rec.offset < 0 || rec.payload > kMaxPayload ||
          (r > 0 && rec.offset < t.records.records[r - 1].offset)) {
        fail(path + "." + at("records", r), "offsets must be non-decreasing and payloads at most 1500 B");
      }
    }
  }

  // Streams leaving each (node, port).
  std::map<std::pair<NodeId, PortId>, std::vector<StreamId>> egress_streams;
  for (const auto& [id, port] : topo.source_port) {
    egress_streams[{s.node_id(s.streams[id.value].src), port}].push_back(id);
  }
  for (const auto& [key, ports] : topo.forwarding) {
    for (PortId p : ports) {
      egress_streams[{key.first, p}].push_back(key.second);
    }
  }

  std::set<std::pair<NodeId, PortId>> egress_seen;
  for (std::size_t i = 0; i < s.egress.size(); ++i) {
    const auto& e = s.egress[i];
    const std::string path = at("egress", i);
    const NodeId n = node_ref(path + ".node", e.node);
    const NodeId peer = node_ref(path + ".peer", e.peer);
    PortId port = 0;
    try {
      port = topo.port_of(n, peer);
    } catch (const ConfigError&) {
      fail(path + ".peer", "'" + e.node + "' has no link to '" + e.peer + "'");
    }
    if (!egress_seen.insert({n, port}).second) {
      fail(path, "duplicate egress layout for port '" + e.node + "' -> '" + e.peer + "'");
    }
    if (e.queues.empty()) {
      fail(path + ".queues", "needs at least one queue");
    }
    const BitRate rate = s.links[topo.ports[static_cast<std::size_t>(n)][static_cast<std::size_t>(port)].link].config.rate;
    for (std::size_t q = 0; q < e.queues.size(); ++q) {
      const auto& qs = e.queues[q];
      const std::string qpath = path + "." + at("queues", q);
      for (std::size_t k = 0; k < qs.streams.size(); ++k) {
        stream_ref(qpath + "." + at("streams", k), qs.streams[k]);
      }
      if (qs.cbs && (qs.cbs->idle_slope <= 0 || qs.cbs->idle_slope > rate)) {
        fail(qpath + ".cbs.idle_slope_bps", "must lie in (0, link rate]");
      }
      if (qs.cbs && qs.cbs->hi_credit_bits && *qs.cbs->hi_credit_bits < 0) {
        fail(qpath + ".cbs.hi_credit_bits", "must be non-negative");
      }
    }
    for (StreamId id : egress_streams[{n, port}]) {
      const auto& st = s.streams[id.value];
      const bool served = std::any_of(e.queues.begin(), e.queues.end(), [&](const QueueSpec& q) {
        return std::find(q.streams.begin(), q.streams.end(), st.name) != q.streams.end() ||
               std::find(q.priorities.begin(), q.priorities.end(), st.priority) != q.priorities.end();
      });
      if (!served) {
        fail(path + ".queues", "no queue serves stream '" + st.name + "'");
      }
    }
  }

  std::map<std::pair<NodeId, PortId>, const PsfpSpec*> instances;
  for (std::size_t i = 0; i < s.psfp.size(); ++i) {
    const auto& ps = s.psfp[i];
    const std::string path = at("psfp", i);
    const NodeId n = node_ref(path + ".node", ps.node);
    if (!is_switch(n)) {
      fail(path + ".node", "PSFP runs on switches only");
    }
    const NodeId peer = node_ref(path + ".peer", ps.peer);
    PortId port = 0;
    try {
      port = topo.port_of(n, peer);
    } catch (const ConfigError&) {
      fail(path + ".peer", "'" + ps.node + "' has no link to '" + ps.peer + "'");
    }
    if (!instances.emplace(std::pair{n, port}, &ps).second) {
      fail(path, "duplicate PSFP instance on '" + ps.node + "' port from '" + ps.peer + "'");
    }
    std::set<std::string> seen;
    for (std::size_t f = 0; f < ps.filters.size(); ++f) {
      const auto& fs = ps.filters[f];
      const std::string fpath = path + "." + at("filters", f);
      if (fs.untagged == !fs.stream.empty()) {
        fail(fpath, "needs exactly one of 'stream' or 'untagged'");
      }
      if (!fs.untagged) {
        stream_ref(fpath + ".stream", fs.stream);
      }
      if (!seen.insert(fs.untagged ? std::string("\x01untagged") : fs.stream).second) {
        fail(fpath, "duplicate filter");
      }
      if (fs.loss_detector && (!fs.gate || fs.untagged)) {
        fail(fpath + ".tdma_loss", "needs a scheduled gate on a stream filter");
      }
      if (const auto* m = std::get_if<CreditMeterConfig>(&fs.meter); m && (m->idle_slope <= 0 || m->burst_cap_bits < 0)) {
        fail(fpath + ".meter", "credit meter needs a positive idle slope and a non-negative cap");
      }
    }
  }

  for (const auto& [id, hops] : topo.ingress_hops) {
    const auto& st = s.streams[id.value];
    for (const auto& [sw, port] : hops) {
      const std::string where = "stream '" + st.name + "' enters '" + s.nodes[static_cast<std::size_t>(sw)].name +
                                "' from '" +
                                s.nodes[static_cast<std::size_t>(topo.ports[static_cast<std::size_t>(sw)]
                                                                     [static_cast<std::size_t>(port)].peer)]
                                    .name +
                                "'";
      const auto it = instances.find({sw, port});
      if (it == instances.end()) {
        fail("psfp", where + " where no PSFP instance runs");
      }
      const auto& filters = it->second->filters;
      const bool covered = std::any_of(filters.begin(), filters.end(), [&](const FilterSpec& f) {
        return f.stream == st.name || (f.untagged && !is_tagged(st.priority));
      });
      if (!covered) {
        fail("psfp", where + " without a matching stream filter");
      }
    }
  }

  for (std::size_t i = 0; i < s.corruptions.size(); ++i) {
    const auto& c = s.corruptions[i];
    const std::string path = at("corruptions", i);
    const StreamId id = stream_ref(path + ".stream", c.stream);
    if (!c.host.empty() && c.host != s.streams[id.value].src) {
      node_ref(path + ".host", c.host);
      fail(path + ".host", "stream '" + c.stream + "' is not sourced at '" + c.host + "'");
    }
    CorruptionSpec spec = c.spec;
    spec.target = id;
    try {
      validate_corruption(spec);
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
    if (spec.min_event_gap < s.match_window) {
      fail(path + ".min_event_gap_ns", "shorter than match_window_ns; ground-truth windows would overlap");
    }
  }
  return topo;
}

void validate(const Scenario& s) { build_topology(s); }

} // namespace ivn
