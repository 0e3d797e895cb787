#include "ivn/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <fstream>
#include <sstream>

namespace ivn {

Frame FrameFactory::make(const StreamDescriptor& stream, std::uint32_t payload, SimTime now, Provenance provenance) {
  Frame f;
  f.uid = next_uid_++;
  f.stream = stream.id;
  f.priority = stream.priority;
  f.payload_size = payload;
  f.seq = ++seq_[{stream.id, stream.src}];
  f.created_at = now;
  f.src = stream.src;
  f.dst = stream.dsts.size() == 1 ? stream.dsts.front() : kBroadcast;
  f.provenance = provenance;
  return f;
}

Frame encapsulate_can(std::uint32_t can_payload, std::uint32_t can_id, const CanIdMap& map,
                      const std::vector<StreamDescriptor>& streams, FrameFactory& factory, SimTime now) {
  if (can_payload > kMaxCanPayload) {
    throw ConfigError("CAN payload of " + std::to_string(can_payload) + " B exceeds 16 B");
  }
  const auto it = map.find(can_id);
  if (it == map.end()) {
    throw ConfigError("CAN id " + std::to_string(can_id) + " is not mapped to a tunnel stream");
  }
  const StreamDescriptor* desc = nullptr;
  for (const auto& s : streams) {
    if (s.id == it->second.stream) {
      desc = &s;
    }
  }
  if (desc == nullptr) {
    throw ConfigError("CAN id " + std::to_string(can_id) + " maps to an undeclared stream");
  }
  StreamDescriptor routed = *desc;
  routed.priority = it->second.priority;
  return factory.make(routed, can_payload, now);
}

TraceFile parse_trace(std::istream& in) {
  TraceFile trace;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    if (!header_seen) {
      if (line != "offset_ns,payload_bytes") {
        throw ConfigError("trace line " + std::to_string(lineno) + ": expected header 'offset_ns,payload_bytes'");
      }
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    long long offset = -1;
    long long payload = -1;
    char comma = 0;
    if (!(row >> offset >> comma >> payload) || comma != ',' || offset < 0 || payload < 0) {
      throw ConfigError("trace line " + std::to_string(lineno) + ": malformed record '" + line + "'");
    }
    if (payload > static_cast<long long>(kMaxPayload)) {
      throw ConfigError("trace line " + std::to_string(lineno) + ": payload exceeds 1500 B");
    }
    if (!trace.records.empty() && offset < trace.records.back().offset) {
      throw ConfigError("trace line " + std::to_string(lineno) + ": offsets must be non-decreasing");
    }
    trace.records.push_back({offset, static_cast<std::uint32_t>(payload)});
  }
  if (!header_seen) {
    throw ConfigError("trace is empty (missing header)");
  }
  return trace;
}

TraceFile load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open trace file '" + path + "'");
  }
  return parse_trace(in);
}

void write_trace(std::ostream& out, const TraceFile& trace) {
  out << "offset_ns,payload_bytes\n";
  for (const auto& r : trace.records) {
    out << r.offset << ',' << r.payload << '\n';
  }
}

TraceFile convert_capture_csv(std::istream& in) {
  TraceFile trace;
  std::string line;
  std::optional<double> first;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    std::istringstream row(line);
    double time = 0;
    double size = 0;
    char comma = 0;
    if (!(row >> time >> comma >> size) || comma != ',') {
      if (lineno == 1) {
        continue; // header
      }
      throw ConfigError("capture line " + std::to_string(lineno) + ": malformed row");
    }
    if (!first) {
      first = time;
    }
    const auto offset = static_cast<Duration>(std::llround((time - *first) * 1e9));
    const auto bytes = static_cast<long long>(std::llround(size));
    const long long payload = std::clamp<long long>(bytes - kUntaggedOverhead, 0, kMaxPayload);
    if (!trace.records.empty() && offset < trace.records.back().offset) {
      throw ConfigError("capture line " + std::to_string(lineno) + ": timestamps must be non-decreasing");
    }
    trace.records.push_back({offset, static_cast<std::uint32_t>(payload)});
  }
  return trace;
}

Duration shaped_interval(const ShapedStream& s, std::uint32_t framing_overhead, bool tagged) {
  const std::int64_t bits = static_cast<std::int64_t>(wire_size_of(s.payload, tagged) + framing_overhead) * 8;
  return static_cast<Duration>(std::floor(static_cast<double>(bits) * 1e9 / (static_cast<double>(s.bandwidth) * s.overdrive)));
}

void validate_generator(const GeneratorSpec& spec, const StreamDescriptor& stream) {
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, TimedControl>) {
          if (g.period <= 0 || g.phase < 0 || g.phase >= g.period) {
            throw ConfigError("timed control '" + stream.name + "': need period > 0 and 0 <= phase < period");
          }
          wire_size_of(g.payload, true);
        } else if constexpr (std::is_same_v<T, ShapedStream>) {
          if (g.bandwidth <= 0 || g.overdrive < 1.0) {
            throw ConfigError("shaped stream '" + stream.name + "': need bandwidth > 0 and overdrive >= 1");
          }
          wire_size_of(g.payload, true);
        } else if constexpr (std::is_same_v<T, CanTunnel>) {
          if (g.can_payload > kMaxCanPayload) {
            throw ConfigError("CAN tunnel '" + stream.name + "': CAN payload exceeds 16 B");
          }
          if (g.period <= 0) {
            throw ConfigError("CAN tunnel '" + stream.name + "': period must be positive");
          }
          if (!is_tagged(stream.priority)) {
            throw ConfigError("CAN tunnel '" + stream.name + "' must be tagged");
          }
        } else {
          if (g.min_payload > g.max_payload || g.max_payload > kMaxPayload || g.min_interval <= 0 ||
              g.min_interval > g.max_interval) {
            throw ConfigError("cross traffic '" + stream.name + "': invalid ranges");
          }
        }
      },
      spec.kind);
  (void)spec.stream;
}

namespace {

/// Self-rescheduling source: `next_gap` returns the delay to the next frame.
class SelfScheduledSource : public TrafficSource {
public:
  using Make = std::function<Frame(SimTime)>;
  using Gap = std::function<Duration()>;

  SelfScheduledSource(Simulator& sim, SimTime first, Make make, Gap gap, EmitFn emit)
      : sim_(sim), first_(first), make_(std::move(make)), gap_(std::move(gap)), emit_(std::move(emit)) {}

  void start(SimTime end) override {
    end_ = end;
    if (first_ <= end_) {
      sim_.schedule(first_, [this] { fire(); });
    }
  }

  std::uint64_t emitted() const override { return emitted_; }

private:
  void fire() {
    ++emitted_;
    emit_(make_(sim_.now()));
    const SimTime next = sim_.now() + gap_();
    if (next <= end_) {
      sim_.schedule(next, [this] { fire(); });
    }
  }

  Simulator& sim_;
  SimTime first_;
  SimTime end_ = 0;
  Make make_;
  Gap gap_;
  EmitFn emit_;
  std::uint64_t emitted_ = 0;
};

class TraceSource : public TrafficSource {
public:
  TraceSource(Simulator& sim, TraceFile trace, SimTime start, StreamDescriptor stream, FrameFactory& factory,
              EmitFn emit)
      : sim_(sim), trace_(std::move(trace)), start_(start), stream_(std::move(stream)), factory_(factory),
        emit_(std::move(emit)) {}

  void start(SimTime end) override {
    for (const auto& r : trace_.records) {
      const SimTime at = start_ + r.offset;
      if (at > end) {
        break;
      }
      sim_.schedule(at, [this, payload = r.payload] {
        ++emitted_;
        emit_(factory_.make(stream_, payload, sim_.now()));
      });
    }
  }

  std::uint64_t emitted() const override { return emitted_; }

private:
  Simulator& sim_;
  TraceFile trace_;
  SimTime start_;
  StreamDescriptor stream_;
  FrameFactory& factory_;
  EmitFn emit_;
  std::uint64_t emitted_ = 0;
};

} // namespace

std::unique_ptr<TrafficSource> start_generator(Simulator& sim, const GeneratorSpec& spec,
                                               const StreamDescriptor& stream, RngStream rng,
                                               FrameFactory& factory, EmitFn emit) {
  validate_generator(spec, stream);
  auto shared_rng = std::make_shared<RngStream>(rng);
  return std::visit(
      [&](const auto& g) -> std::unique_ptr<TrafficSource> {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, TimedControl>) {
          return std::make_unique<SelfScheduledSource>(
              sim, sim.now() + g.phase,
              [&factory, stream, g](SimTime now) { return factory.make(stream, g.payload, now); },
              [g] { return g.period; }, std::move(emit));
        } else if constexpr (std::is_same_v<T, ShapedStream>) {
          const Duration interval = shaped_interval(g);
          const SimTime first = sim.now() + shared_rng->uniform_int(0, interval - 1);
          return std::make_unique<SelfScheduledSource>(
              sim, first, [&factory, stream, g](SimTime now) { return factory.make(stream, g.payload, now); },
              [interval] { return interval; }, std::move(emit));
        } else if constexpr (std::is_same_v<T, CanTunnel>) {
          const SimTime first = sim.now() + shared_rng->uniform_int(0, g.period - 1);
          CanIdMap map{{g.can_id, CanRoute{stream.id, stream.priority}}};
          std::vector<StreamDescriptor> streams{stream};
          return std::make_unique<SelfScheduledSource>(
              sim, first,
              [&factory, map, streams, g](SimTime now) {
                return encapsulate_can(g.can_payload, g.can_id, map, streams, factory, now);
              },
              [g] { return g.period; }, std::move(emit));
        } else {
          const SimTime first = sim.now() + shared_rng->uniform_int(g.min_interval, g.max_interval);
          return std::make_unique<SelfScheduledSource>(
              sim, first,
              [&factory, stream, g, shared_rng](SimTime now) {
                const auto payload = static_cast<std::uint32_t>(shared_rng->uniform_int(g.min_payload, g.max_payload));
                return factory.make(stream, payload, now);
              },
              [g, shared_rng] { return shared_rng->uniform_int(g.min_interval, g.max_interval); }, std::move(emit));
        }
      },
      spec.kind);
}

std::unique_ptr<TrafficSource> replay_trace(Simulator& sim, const TraceFile& trace, SimTime start,
                                            const StreamDescriptor& stream, FrameFactory& factory, EmitFn emit) {
  if (!stream.id.known()) {
    throw ConfigError("trace replay needs a bound stream");
  }
  return std::make_unique<TraceSource>(sim, trace, start, stream, factory, std::move(emit));
}

} // namespace ivn
