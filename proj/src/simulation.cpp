#include "ivn/simulation.hpp"

#include <algorithm>
#include <memory>

namespace ivn {

std::vector<QueueConfig> to_queue_configs(const Scenario& s, const EgressSpec& spec) {
  std::vector<QueueConfig> out;
  for (const auto& q : spec.queues) {
    QueueConfig c{q.name, q.rank, q.priorities, {}, q.gate, q.cbs, q.capacity};
    for (const auto& name : q.streams) {
      c.streams.push_back(s.stream_id(name));
    }
    out.push_back(std::move(c));
  }
  return out;
}

PsfpPortConfig to_port_config(const Scenario& s, const PsfpSpec& spec) {
  PsfpPortConfig cfg;
  for (const auto& f : spec.filters) {
    StreamFilter sf;
    if (f.untagged) {
      sf.match = MatchUntagged{};
    } else {
      sf.match = s.stream_id(f.stream);
    }
    sf.gate = f.gate;
    sf.meter = f.meter;
    sf.loss_detector = f.loss_detector;
    cfg.filters.push_back(std::move(sf));
  }
  return cfg;
}

namespace {

using Forward = std::function<void(const Frame&)>;

class Network {
public:
  Network(const Scenario& s, const RunOptions& options)
      : s_(s), topo_(build_topology(s)), options_(options), seed_(options.seed.value_or(s.seed)) {}

  RunResult run() {
    describe_streams();
    build_ports();
    build_psfp();
    build_corruptions();
    build_sources();
    for (auto& l : layers_) {
      l->start(s_.duration);
    }
    for (auto& [key, inst] : psfp_) {
      inst->start_loss_detection(sim_);
    }
    sim_.run_until(s_.duration);
    result_.frames_created = factory_.issued();
    result_.events_executed = sim_.executed_count();
    result_.alarms = controller_.alarms();
    report();
    check_invariants();
    return std::move(result_);
  }

private:
  const std::string& node_name(NodeId n) const { return s_.nodes[static_cast<std::size_t>(n)].name; }
  bool is_switch(NodeId n) const { return s_.nodes[static_cast<std::size_t>(n)].kind == NodeKind::Switch; }

  void describe_streams() {
    for (std::size_t i = 0; i < s_.streams.size(); ++i) {
      const auto& st = s_.streams[i];
      StreamDescriptor d{StreamId{static_cast<std::uint32_t>(i)}, st.name, s_.node_id(st.src), {}, st.priority};
      for (const auto& dst : st.dsts) {
        d.dsts.push_back(s_.node_id(dst));
      }
      streams_.push_back(std::move(d));
    }
  }

  void build_ports() {
    const std::size_t n_nodes = s_.nodes.size();
    egress_.resize(n_nodes);
    phy_.resize(n_nodes);
    link_entry_.resize(n_nodes);
    app_entry_.resize(n_nodes);
    for (std::size_t n = 0; n < n_nodes; ++n) {
      const auto node = static_cast<NodeId>(n);
      const auto& ports = topo_.ports[n];
      for (std::size_t p = 0; p < ports.size(); ++p) {
        const NodeId peer = ports[p].peer;
        const PortId peer_port = topo_.port_of(peer, node);
        const LinkConfig& link = s_.links[ports[p].link].config;
        phy_[n].push_back(std::make_unique<LinkTransmitter>(
            sim_, link, [this, peer, peer_port](const Frame& f) { receive(peer, peer_port, f); }));
        link_entry_[n].push_back([this, n, p](const Frame& f) { phy_[n][p]->send(f); });

        std::vector<QueueConfig> queues = default_queue_layout();
        for (const auto& e : s_.egress) {
          if (e.node == node_name(node) && e.peer == node_name(peer)) {
            queues = to_queue_configs(s_, e);
          }
        }
        egress_[n].push_back(std::make_unique<EgressPort>(
            sim_, link.rate, link.framing_overhead, std::move(queues),
            [this, n, p](const Frame& f) { link_entry_[n][p](f); }));
        // A port never starts a frame while its PHY is still sending.
        egress_[n][p]->attach_medium([this, n, p] { return !phy_[n][p]->idle(); });
        phy_[n][p]->on_idle([this, n, p] { egress_[n][p]->medium_idle(); });
      }
      app_entry_[n] = [this, n](const Frame& f) {
        egress_[n][static_cast<std::size_t>(topo_.source_port.at(f.stream))]->enqueue(f);
      };
    }
  }

  void build_psfp() {
    for (const auto& spec : s_.psfp) {
      const NodeId node = s_.node_id(spec.node);
      const PortId port = topo_.port_of(node, s_.node_id(spec.peer));
      psfp_[{node, port}] = std::make_unique<PsfpInstance>(
          node, port, to_port_config(s_, spec), [this](const IndicatorEvent& e) { on_indicator(e); });
    }
  }

  void build_corruptions() {
    // The first declared layer sees frames first; chains are built from their far end.
    for (std::size_t i = s_.corruptions.size(); i-- > 0;) {
      const auto& c = s_.corruptions[i];
      const StreamId id = s_.stream_id(c.stream);
      const NodeId host = streams_[id.value].src;
      const auto n = static_cast<std::size_t>(host);
      Forward* slot = nullptr;
      if (c.spec.layer == Layer::Application) {
        slot = &app_entry_[n];
      } else {
        slot = &link_entry_[n][static_cast<std::size_t>(topo_.source_port.at(id))];
      }
      CorruptionSpec spec = c.spec;
      spec.target = id;
      auto layer = std::make_unique<CorruptionLayer>(
          sim_, spec, streams_[id.value], RngStream(seed_, "corrupt:" + std::to_string(i)), factory_, *slot,
          [this, host](const GroundTruthEvent& g) { on_truth(host, g); });
      CorruptionLayer* raw = layer.get();
      *slot = [raw](const Frame& f) { raw->process(f); };
      layers_.push_back(std::move(layer));
      result_.report.corruptions.insert(result_.report.corruptions.begin(),
                                        c.stream + "/" + to_string(c.spec.kind) + "/" + to_string(c.spec.layer));
    }
  }

  void build_sources() {
    std::vector<bool> replaced(streams_.size(), false);
    for (const auto& t : s_.traces) {
      if (t.replace) {
        replaced[s_.stream_id(t.stream).value] = true;
      }
    }
    for (std::size_t i = 0; i < s_.generators.size(); ++i) {
      const auto& g = s_.generators[i];
      const StreamId id = s_.stream_id(g.stream);
      if (replaced[id.value]) {
        continue;
      }
      const auto& desc = streams_[id.value];
      const auto n = static_cast<std::size_t>(desc.src);
      auto src = start_generator(sim_, GeneratorSpec{id, g.kind}, desc,
                                 RngStream(seed_, "gen:" + g.stream + ":" + std::to_string(i)), factory_,
                                 [this, n](const Frame& f) { app_entry_[n](f); });
      sources_.push_back(std::move(src));
    }
    for (const auto& t : s_.traces) {
      const StreamId id = s_.stream_id(t.stream);
      const auto& desc = streams_[id.value];
      const NodeId host = desc.src;
      // Every replayed frame is attack traffic and counts as one injection.
      auto src = replay_trace(sim_, t.records, t.start, desc, factory_, [this, host](const Frame& f) {
        on_truth(host, GroundTruthEvent{sim_.now(), f.stream, CorruptionKind::Injection, Layer::Application, {f.uid}});
        app_entry_[static_cast<std::size_t>(host)](f);
      });
      sources_.push_back(std::move(src));
    }
    for (auto& src : sources_) {
      src->start(s_.duration);
    }
  }

  void receive(NodeId node, PortId port, const Frame& f) {
    if (!is_switch(node)) {
      const auto& dsts = streams_[f.stream.value].dsts;
      if (std::find(dsts.begin(), dsts.end(), node) != dsts.end()) {
        ++result_.delivered[f.stream];
      }
      return;
    }
    if (const auto it = psfp_.find({node, port}); it != psfp_.end()) {
      const Verdict v = it->second->ingest(f, sim_.now());
      if (options_.on_ingest) {
        options_.on_ingest(IngestRecord{sim_.now(), node, port, f, v});
      }
      if (v != Verdict::Forwarded) {
        return;
      }
    }
    const auto route = topo_.forwarding.find({node, f.stream});
    if (route == topo_.forwarding.end()) {
      ++result_.unroutable;
      return;
    }
    const Duration delay = s_.nodes[static_cast<std::size_t>(node)].processing_delay;
    for (const PortId out : route->second) {
      EgressPort* e = egress_[static_cast<std::size_t>(node)][static_cast<std::size_t>(out)].get();
      if (delay == 0) {
        e->enqueue(f);
      } else {
        sim_.schedule_in(delay, [e, f] { e->enqueue(f); });
      }
    }
  }

  void on_indicator(const IndicatorEvent& e) {
    result_.indicators.push_back(e);
    const std::string stream = s_.stream_name(e.stream);
    result_.log.records.push_back(indicator_record(e, node_name(e.node), stream));
    const AnomalyAlarm a = controller_.observe(e);
    result_.log.records.push_back(alarm_record(a, node_name(a.node), stream));
  }

  void on_truth(NodeId host, const GroundTruthEvent& g) {
    result_.ground_truth.push_back(g);
    result_.log.records.push_back(truth_record(g, node_name(host), s_.stream_name(g.stream)));
  }

  void report() {
    auto& r = result_.report;
    r.scenario = s_.name;
    r.seed = seed_;
    r.duration = s_.duration;
    r.ground_truth_events = result_.ground_truth.size();
    ScoreOptions opts;
    opts.window = s_.match_window;
    opts.allow_overlap = !s_.traces.empty();
    opts.mode = DetectionMode::DropOnly;
    r.drop_only = score(result_.ground_truth, result_.alarms, opts);
    opts.mode = DetectionMode::DropAndLoss;
    r.drop_and_loss = score(result_.ground_truth, result_.alarms, opts);
    for (const auto& spec : s_.psfp) {
      const NodeId node = s_.node_id(spec.node);
      const PortId port = topo_.port_of(node, s_.node_id(spec.peer));
      r.ports.push_back(PortReport{spec.node, port, psfp_.at({node, port})->snapshot_stats()});
    }
  }

  void check_invariants() const {
    for (const auto& p : result_.report.ports) {
      StreamCounters sum;
      for (const auto& [id, c] : p.stats.per_stream) {
        if (!c.conserved()) {
          throw InvariantViolation("frame conservation violated at " + p.node + " port " + std::to_string(p.port) +
                                   " for stream " + s_.stream_name(id));
        }
        sum.arrived += c.arrived;
        sum.forwarded += c.forwarded;
        sum.dropped_gate += c.dropped_gate;
        sum.dropped_meter += c.dropped_meter;
        sum.dropped_unknown += c.dropped_unknown;
        sum.loss_events += c.loss_events;
      }
      if (!p.stats.total.conserved() || !(sum == p.stats.total)) {
        throw InvariantViolation("port totals inconsistent at " + p.node + " port " + std::to_string(p.port));
      }
    }
    if (result_.alarms.size() != result_.indicators.size()) {
      throw InvariantViolation("alarm count differs from indicator count");
    }
  }

  const Scenario& s_;
  Topology topo_;
  const RunOptions& options_;
  std::uint64_t seed_;
  Simulator sim_;
  FrameFactory factory_;
  Controller controller_;
  std::vector<StreamDescriptor> streams_;
  std::vector<std::vector<std::unique_ptr<LinkTransmitter>>> phy_;
  std::vector<std::vector<std::unique_ptr<EgressPort>>> egress_;
  std::vector<std::vector<Forward>> link_entry_;
  std::vector<Forward> app_entry_;
  std::map<std::pair<NodeId, PortId>, std::unique_ptr<PsfpInstance>> psfp_;
  std::vector<std::unique_ptr<CorruptionLayer>> layers_;
  std::vector<std::unique_ptr<TrafficSource>> sources_;
  RunResult result_;
};

} // namespace

RunResult run_scenario(const Scenario& s, const RunOptions& options) {
  Network net(s, options);
  return net.run();
}

} // namespace ivn
