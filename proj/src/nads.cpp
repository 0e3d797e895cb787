#include "ivn/nads.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace ivn {

AnomalyAlarm Controller::observe(const IndicatorEvent& event) {
  const auto n = ++counters_[{event.node, event.port, event.stream, event.kind}];
  alarms_.push_back(AnomalyAlarm{event.at, event.node, event.port, event.stream, event.kind, n, event.frame_ref});
  return alarms_.back();
}

std::uint64_t Controller::cumulative(NodeId node, PortId port, StreamId stream, IndicatorKind kind) const {
  const auto it = counters_.find({node, port, stream, kind});
  return it == counters_.end() ? 0 : it->second;
}

std::string to_string(DetectionMode m) {
  return m == DetectionMode::DropOnly ? "drop_only" : "drop_and_loss";
}

std::optional<double> Score::precision() const {
  if (tp + fp == 0) {
    return std::nullopt;
  }
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::optional<double> Score::recall() const {
  if (tp + fn == 0) {
    return std::nullopt;
  }
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

Score score(const std::vector<GroundTruthEvent>& ground_truth, const std::vector<AnomalyAlarm>& alarms,
            const ScoreOptions& options) {
  const auto by_time = [&](std::size_t a, std::size_t b) {
    return std::tie(ground_truth[a].at, a) < std::tie(ground_truth[b].at, b);
  };
  std::vector<std::size_t> order(ground_truth.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), by_time);

  std::map<StreamId, std::vector<std::size_t>> per_stream;
  std::unordered_map<std::uint64_t, std::size_t> by_frame;
  for (std::size_t i : order) {
    auto& v = per_stream[ground_truth[i].stream];
    if (!options.allow_overlap && !v.empty() && ground_truth[i].at - ground_truth[v.back()].at < options.window) {
      throw ConfigError("ground-truth events of one stream are closer than the matching window; matching "
                        "would be ambiguous");
    }
    v.push_back(i);
    for (auto ref : ground_truth[i].frame_refs) {
      by_frame.emplace(ref, i);
    }
  }

  // Latest event in `idx` (time-sorted) at or before t, if its window contains t.
  const auto containing = [&](const std::vector<std::size_t>& idx, SimTime t,
                              bool unbounded) -> std::optional<std::size_t> {
    auto it = std::upper_bound(idx.begin(), idx.end(), t,
                               [&](SimTime v, std::size_t i) { return v < ground_truth[i].at; });
    if (it == idx.begin()) {
      return std::nullopt;
    }
    const std::size_t i = *std::prev(it);
    if (unbounded || t < ground_truth[i].at + options.window) {
      return i;
    }
    return std::nullopt;
  };

  Score s;
  std::vector<bool> hit(ground_truth.size(), false);
  for (const auto& a : alarms) {
    if (options.mode == DetectionMode::DropOnly && a.kind == IndicatorKind::TdmaLoss) {
      continue;
    }
    ++s.alarms;
    std::optional<std::size_t> idx;
    if (a.frame_ref) {
      if (const auto it = by_frame.find(*a.frame_ref); it != by_frame.end()) {
        idx = it->second;
      }
    }
    if (!idx) {
      if (const auto it = per_stream.find(a.stream); it != per_stream.end()) {
        idx = containing(it->second, a.at, options.stream_horizon);
      }
    }
    if (!idx) {
      idx = containing(order, a.at, false);
    }
    if (idx) {
      hit[*idx] = true;
    } else {
      ++s.fp;
    }
  }
  s.tp = static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), true));
  s.fn = ground_truth.size() - s.tp;
  return s;
}

StreamCounters MetricsReport::totals() const {
  StreamCounters t;
  for (const auto& p : ports) {
    t.arrived += p.stats.total.arrived;
    t.forwarded += p.stats.total.forwarded;
    t.dropped_gate += p.stats.total.dropped_gate;
    t.dropped_meter += p.stats.total.dropped_meter;
    t.dropped_unknown += p.stats.total.dropped_unknown;
    t.loss_events += p.stats.total.loss_events;
  }
  return t;
}

std::string format_ratio(const std::optional<double>& v) {
  if (!v) {
    return "undefined";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

namespace {

void put_score(std::ostringstream& out, const std::string& prefix, const Score& s) {
  out << prefix << ".alarms=" << s.alarms << '\n'
      << prefix << ".tp=" << s.tp << '\n'
      << prefix << ".fp=" << s.fp << '\n'
      << prefix << ".fn=" << s.fn << '\n'
      << prefix << ".precision=" << format_ratio(s.precision()) << '\n'
      << prefix << ".recall=" << format_ratio(s.recall()) << '\n';
}

void put_counters(std::ostringstream& out, const std::string& prefix, const StreamCounters& c) {
  out << prefix << ".arrived=" << c.arrived << '\n'
      << prefix << ".forwarded=" << c.forwarded << '\n'
      << prefix << ".dropped_gate=" << c.dropped_gate << '\n'
      << prefix << ".dropped_meter=" << c.dropped_meter << '\n'
      << prefix << ".dropped_unknown=" << c.dropped_unknown << '\n'
      << prefix << ".loss_events=" << c.loss_events << '\n';
}

} // namespace

std::string render_report(const MetricsReport& r) {
  std::ostringstream out;
  out << "scenario=" << r.scenario << '\n';
  out << "seed=" << r.seed << '\n';
  out << "duration_ns=" << r.duration << '\n';
  std::string corr;
  for (const auto& c : r.corruptions) {
    corr += (corr.empty() ? "" : ";") + c;
  }
  out << "corruption=" << (corr.empty() ? "none" : corr) << '\n';
  out << "ground_truth_events=" << r.ground_truth_events << '\n';
  put_score(out, to_string(DetectionMode::DropOnly), r.drop_only);
  put_score(out, to_string(DetectionMode::DropAndLoss), r.drop_and_loss);
  put_counters(out, "total", r.totals());
  out << "psfp_instances=" << r.ports.size() << '\n';
  for (const auto& p : r.ports) {
    put_counters(out, "port." + p.node + "." + std::to_string(p.port), p.stats.total);
  }
  return out.str();
}

std::string render_port_stats_csv(const MetricsReport& report,
                                  const std::function<std::string(StreamId)>& stream_name) {
  std::ostringstream out;
  out << "node,port,stream,arrived,forwarded,dropped_gate,dropped_meter,dropped_unknown,loss_events\n";
  const auto row = [&](const PortReport& p, const std::string& stream, const StreamCounters& c) {
    out << p.node << ',' << p.port << ',' << stream << ',' << c.arrived << ',' << c.forwarded << ','
        << c.dropped_gate << ',' << c.dropped_meter << ',' << c.dropped_unknown << ',' << c.loss_events << '\n';
  };
  for (const auto& p : report.ports) {
    row(p, "*", p.stats.total);
    for (const auto& [id, c] : p.stats.per_stream) {
      row(p, stream_name(id), c);
    }
  }
  return out.str();
}

} // namespace ivn
