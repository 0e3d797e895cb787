#include "ivn/scenario_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ivn {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

// A JSON object plus the field path used in diagnostics.
class Obj {
public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      fail(path_, "expected an object");
    }
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  T req(const std::string& key) const {
    if (!j_.contains(key)) {
      fail(at(key), "missing field");
    }
    return value<T>(key);
  }

  template <typename T>
  T opt(const std::string& key, T fallback) const {
    return j_.contains(key) ? value<T>(key) : fallback;
  }

  Obj obj(const std::string& key) const { return Obj(j_.at(key), at(key)); }

  std::vector<Obj> list(const std::string& key) const {
    std::vector<Obj> out;
    if (!j_.contains(key)) {
      return out;
    }
    const json& arr = j_.at(key);
    if (!arr.is_array()) {
      fail(at(key), "expected a list");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.emplace_back(arr[i], at(key) + "[" + std::to_string(i) + "]");
    }
    return out;
  }

  void only(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find_if(keys.begin(), keys.end(), [&](const char* a) { return k == a; }) == keys.end()) {
        fail(at(k), "unknown field");
      }
    }
  }

private:
  template <typename T>
  T value(const std::string& key) const {
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) {
          fail(at(key), "expected a string");
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) {
          fail(at(key), "expected true or false");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) {
          fail(at(key), "expected a number");
        }
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) {
          fail(at(key), "expected an integer");
        }
        if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          fail(at(key), "must be non-negative");
        }
      } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
        if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); })) {
          fail(at(key), "expected a list of strings");
        }
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      fail(at(key), e.what());
    }
  }

  const json& j_;
  std::string path_;
};

Priority priority_of(const std::string& s, const std::string& path) {
  if (s == "untagged") {
    return Priority::Untagged;
  }
  if (s.size() == 2 && s[0] == 'P' && s[1] >= '0' && s[1] <= '7') {
    return priority_from_int(s[1] - '0');
  }
  fail(path, "unknown priority '" + s + "' (expected P0..P7 or untagged)");
}

GateControlList read_gate(const Obj& o) {
  o.only({"cycle_ns", "entries"});
  std::vector<GateEntry> entries;
  for (const auto& e : o.list("entries")) {
    e.only({"offset_ns", "length_ns"});
    entries.push_back({e.req<Duration>("offset_ns"), e.req<Duration>("length_ns")});
  }
  try {
    return GateControlList(o.req<Duration>("cycle_ns"), std::move(entries));
  } catch (const ConfigError& e) {
    fail(o.path(), e.what());
  }
}

json write_gate(const GateControlList& g) {
  json entries = json::array();
  for (const auto& e : g.entries()) {
    entries.push_back({{"offset_ns", e.offset}, {"length_ns", e.length}});
  }
  return {{"cycle_ns", g.cycle()}, {"entries", entries}};
}

GeneratorKind read_generator(const Obj& o) {
  const auto type = o.req<std::string>("type");
  if (type == "timed_control") {
    o.only({"stream", "type", "period_ns", "payload_bytes", "phase_ns"});
    TimedControl d;
    return TimedControl{o.opt("period_ns", d.period), o.opt("payload_bytes", d.payload), o.opt("phase_ns", d.phase)};
  }
  if (type == "shaped_stream") {
    o.only({"stream", "type", "bandwidth_bps", "payload_bytes", "overdrive"});
    ShapedStream d;
    return ShapedStream{o.opt("bandwidth_bps", d.bandwidth), o.opt("payload_bytes", d.payload),
                        o.opt("overdrive", d.overdrive)};
  }
  if (type == "can_tunnel") {
    o.only({"stream", "type", "can_id", "period_ns", "can_payload_bytes"});
    CanTunnel d;
    return CanTunnel{o.opt("can_id", d.can_id), o.opt("period_ns", d.period),
                     o.opt("can_payload_bytes", d.can_payload)};
  }
  if (type == "cross_traffic") {
    o.only({"stream", "type", "min_payload_bytes", "max_payload_bytes", "min_interval_ns", "max_interval_ns"});
    CrossTraffic d;
    return CrossTraffic{o.opt("min_payload_bytes", d.min_payload), o.opt("max_payload_bytes", d.max_payload),
                        o.opt("min_interval_ns", d.min_interval), o.opt("max_interval_ns", d.max_interval)};
  }
  fail(o.at("type"), "unknown generator type '" + type + "'");
}

json write_generator(const GeneratorEntry& g) {
  json j{{"stream", g.stream}};
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, TimedControl>) {
          j.update({{"type", "timed_control"}, {"period_ns", k.period}, {"payload_bytes", k.payload},
                    {"phase_ns", k.phase}});
        } else if constexpr (std::is_same_v<T, ShapedStream>) {
          j.update({{"type", "shaped_stream"}, {"bandwidth_bps", k.bandwidth}, {"payload_bytes", k.payload},
                    {"overdrive", k.overdrive}});
        } else if constexpr (std::is_same_v<T, CanTunnel>) {
          j.update({{"type", "can_tunnel"}, {"can_id", k.can_id}, {"period_ns", k.period},
                    {"can_payload_bytes", k.can_payload}});
        } else {
          j.update({{"type", "cross_traffic"}, {"min_payload_bytes", k.min_payload},
                    {"max_payload_bytes", k.max_payload}, {"min_interval_ns", k.min_interval},
                    {"max_interval_ns", k.max_interval}});
        }
      },
      g.kind);
  return j;
}

MeterConfig read_meter(const Obj& o) {
  const auto type = o.req<std::string>("type");
  if (type == "max_frame_size") {
    o.only({"type", "limit_bytes"});
    return MaxFrameSize{o.req<std::uint32_t>("limit_bytes")};
  }
  if (type == "credit") {
    o.only({"type", "idle_slope_bps", "burst_cap_bits", "framing_overhead_bytes"});
    return CreditMeterConfig{o.req<BitRate>("idle_slope_bps"), o.req<std::int64_t>("burst_cap_bits"),
                             o.opt("framing_overhead_bytes", kDefaultFramingOverhead)};
  }
  fail(o.at("type"), "unknown meter type '" + type + "' (expected max_frame_size or credit)");
}

json write_meter(const MeterConfig& m) {
  if (const auto* f = std::get_if<MaxFrameSize>(&m)) {
    return {{"type", "max_frame_size"}, {"limit_bytes", f->limit}};
  }
  const auto& c = std::get<CreditMeterConfig>(m);
  return {{"type", "credit"}, {"idle_slope_bps", c.idle_slope}, {"burst_cap_bits", c.burst_cap_bits},
          {"framing_overhead_bytes", c.framing_overhead}};
}

Scenario read_scenario(const Obj& root, const std::string& base_dir) {
  root.only({"name", "seed", "duration_ns", "match_window_ns", "nodes", "links", "streams", "generators", "traces",
             "egress", "psfp", "corruptions"});
  Scenario s;
  s.name = root.req<std::string>("name");
  s.seed = root.opt("seed", s.seed);
  s.duration = root.opt("duration_ns", s.duration);
  s.match_window = root.opt("match_window_ns", s.match_window);

  for (const auto& o : root.list("nodes")) {
    o.only({"name", "kind", "processing_delay_ns"});
    const auto kind = o.req<std::string>("kind");
    if (kind != "host" && kind != "switch") {
      fail(o.at("kind"), "expected host or switch");
    }
    s.nodes.push_back({o.req<std::string>("name"), kind == "host" ? NodeKind::Host : NodeKind::Switch,
                       o.opt<Duration>("processing_delay_ns", 0)});
  }
  for (const auto& o : root.list("links")) {
    o.only({"a", "b", "rate_bps", "propagation_delay_ns", "framing_overhead_bytes"});
    LinkConfig c;
    c.rate = o.opt("rate_bps", c.rate);
    c.propagation_delay = o.opt("propagation_delay_ns", c.propagation_delay);
    c.framing_overhead = o.opt("framing_overhead_bytes", c.framing_overhead);
    s.links.push_back({o.req<std::string>("a"), o.req<std::string>("b"), c});
  }
  for (const auto& o : root.list("streams")) {
    o.only({"name", "src", "dsts", "priority"});
    s.streams.push_back({o.req<std::string>("name"), o.req<std::string>("src"),
                         o.req<std::vector<std::string>>("dsts"),
                         priority_of(o.req<std::string>("priority"), o.at("priority"))});
  }
  for (const auto& o : root.list("generators")) {
    s.generators.push_back({o.req<std::string>("stream"), read_generator(o)});
  }
  for (const auto& o : root.list("traces")) {
    o.only({"stream", "start_ns", "path", "replace"});
    TraceBinding t;
    t.stream = o.req<std::string>("stream");
    t.start = o.opt<SimTime>("start_ns", 0);
    t.path = o.req<std::string>("path");
    t.replace = o.opt("replace", true);
    if (!base_dir.empty()) {
      try {
        t.records = load_trace((fs::path(base_dir) / t.path).string());
      } catch (const ConfigError& e) {
        fail(o.at("path"), e.what());
      }
    }
    s.traces.push_back(std::move(t));
  }
  for (const auto& o : root.list("egress")) {
    o.only({"node", "peer", "queues"});
    EgressSpec e{o.req<std::string>("node"), o.req<std::string>("peer"), {}};
    for (const auto& q : o.list("queues")) {
      q.only({"name", "rank", "priorities", "streams", "gate", "cbs", "capacity"});
      QueueSpec spec;
      spec.name = q.req<std::string>("name");
      spec.rank = q.req<int>("rank");
      const auto prios = q.opt<std::vector<std::string>>("priorities", {});
      for (std::size_t i = 0; i < prios.size(); ++i) {
        spec.priorities.push_back(priority_of(prios[i], q.at("priorities") + "[" + std::to_string(i) + "]"));
      }
      spec.streams = q.opt<std::vector<std::string>>("streams", {});
      if (q.has("gate")) {
        spec.gate = read_gate(q.obj("gate"));
      }
      if (q.has("cbs")) {
        const Obj c = q.obj("cbs");
        c.only({"idle_slope_bps", "hi_credit_bits"});
        CbsConfig cfg{c.req<BitRate>("idle_slope_bps"), std::nullopt};
        if (c.has("hi_credit_bits")) {
          cfg.hi_credit_bits = c.req<std::int64_t>("hi_credit_bits");
        }
        spec.cbs = cfg;
      }
      if (q.has("capacity")) {
        spec.capacity = q.req<std::size_t>("capacity");
      }
      e.queues.push_back(std::move(spec));
    }
    s.egress.push_back(std::move(e));
  }
  for (const auto& o : root.list("psfp")) {
    o.only({"node", "peer", "filters"});
    PsfpSpec p{o.req<std::string>("node"), o.req<std::string>("peer"), {}};
    for (const auto& f : o.list("filters")) {
      f.only({"stream", "untagged", "gate", "meter", "tdma_loss"});
      FilterSpec spec;
      spec.untagged = f.opt("untagged", false);
      spec.stream = spec.untagged ? f.opt<std::string>("stream", "") : f.req<std::string>("stream");
      if (f.has("gate")) {
        spec.gate = read_gate(f.obj("gate"));
      }
      if (f.has("meter")) {
        spec.meter = read_meter(f.obj("meter"));
      }
      if (f.has("tdma_loss")) {
        const Obj l = f.obj("tdma_loss");
        l.only({"expected_per_window"});
        spec.loss_detector = TdmaLossConfig{l.opt<std::uint32_t>("expected_per_window", 1)};
      }
      p.filters.push_back(std::move(spec));
    }
    s.psfp.push_back(std::move(p));
  }
  for (const auto& o : root.list("corruptions")) {
    o.only({"stream", "host", "layer", "kind", "probability", "min_event_gap_ns", "max_delay_ns",
            "max_payload_bytes"});
    CorruptionEntry c;
    c.stream = o.req<std::string>("stream");
    c.host = o.opt<std::string>("host", "");
    try {
      c.spec.layer = layer_from_string(o.req<std::string>("layer"));
    } catch (const ConfigError& e) {
      fail(o.at("layer"), e.what());
    }
    try {
      c.spec.kind = corruption_kind_from_string(o.req<std::string>("kind"));
    } catch (const ConfigError& e) {
      fail(o.at("kind"), e.what());
    }
    c.spec.probability = o.opt("probability", c.spec.probability);
    c.spec.min_event_gap = o.opt("min_event_gap_ns", c.spec.min_event_gap);
    c.spec.max_delay = o.opt("max_delay_ns", c.spec.max_delay);
    c.spec.max_payload = o.opt("max_payload_bytes", c.spec.max_payload);
    s.corruptions.push_back(std::move(c));
  }
  return s;
}

std::string line_of(const std::string& text, std::size_t byte) {
  const auto end = std::min(byte, text.size());
  return std::to_string(1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

} // namespace

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + line_of(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  return read_scenario(Obj(j, ""), base_dir);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path + ": cannot open scenario file");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    fs::path dir = fs::path(path).parent_path();
    Scenario s = parse_scenario(buf.str(), dir.empty() ? "." : dir.string());
    validate(s);
    return s;
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string render_scenario(const Scenario& s) {
  json nodes = json::array();
  for (const auto& n : s.nodes) {
    json o{{"name", n.name}, {"kind", n.kind == NodeKind::Host ? "host" : "switch"}};
    if (n.processing_delay != 0) {
      o["processing_delay_ns"] = n.processing_delay;
    }
    nodes.push_back(o);
  }
  json links = json::array();
  for (const auto& l : s.links) {
    links.push_back({{"a", l.a},
                     {"b", l.b},
                     {"rate_bps", l.config.rate},
                     {"propagation_delay_ns", l.config.propagation_delay},
                     {"framing_overhead_bytes", l.config.framing_overhead}});
  }
  json streams = json::array();
  for (const auto& st : s.streams) {
    streams.push_back({{"name", st.name}, {"src", st.src}, {"dsts", st.dsts}, {"priority", to_string(st.priority)}});
  }
  json generators = json::array();
  for (const auto& g : s.generators) {
    generators.push_back(write_generator(g));
  }
  json traces = json::array();
  for (const auto& t : s.traces) {
    traces.push_back({{"stream", t.stream}, {"start_ns", t.start}, {"path", t.path}, {"replace", t.replace}});
  }
  json egress = json::array();
  for (const auto& e : s.egress) {
    json queues = json::array();
    for (const auto& q : e.queues) {
      json o{{"name", q.name}, {"rank", q.rank}};
      json prios = json::array();
      for (auto p : q.priorities) {
        prios.push_back(to_string(p));
      }
      o["priorities"] = prios;
      if (!q.streams.empty()) {
        o["streams"] = q.streams;
      }
      if (q.gate) {
        o["gate"] = write_gate(*q.gate);
      }
      if (q.cbs) {
        json c{{"idle_slope_bps", q.cbs->idle_slope}};
        if (q.cbs->hi_credit_bits) {
          c["hi_credit_bits"] = *q.cbs->hi_credit_bits;
        }
        o["cbs"] = c;
      }
      if (q.capacity) {
        o["capacity"] = *q.capacity;
      }
      queues.push_back(o);
    }
    egress.push_back({{"node", e.node}, {"peer", e.peer}, {"queues", queues}});
  }
  json psfp = json::array();
  for (const auto& p : s.psfp) {
    json filters = json::array();
    for (const auto& f : p.filters) {
      json o;
      if (f.untagged) {
        o["untagged"] = true;
      } else {
        o["stream"] = f.stream;
      }
      if (f.gate) {
        o["gate"] = write_gate(*f.gate);
      }
      if (!std::holds_alternative<std::monostate>(f.meter)) {
        o["meter"] = write_meter(f.meter);
      }
      if (f.loss_detector) {
        o["tdma_loss"] = {{"expected_per_window", f.loss_detector->expected_per_window}};
      }
      filters.push_back(o);
    }
    psfp.push_back({{"node", p.node}, {"peer", p.peer}, {"filters", filters}});
  }
  json corruptions = json::array();
  for (const auto& c : s.corruptions) {
    json o{{"stream", c.stream},
           {"layer", to_string(c.spec.layer)},
           {"kind", to_string(c.spec.kind)},
           {"probability", c.spec.probability},
           {"min_event_gap_ns", c.spec.min_event_gap},
           {"max_delay_ns", c.spec.max_delay},
           {"max_payload_bytes", c.spec.max_payload}};
    if (!c.host.empty()) {
      o["host"] = c.host;
    }
    corruptions.push_back(o);
  }
  // nlohmann sorts object keys, which keeps the output stable.
  json root{{"name", s.name},
            {"seed", s.seed},
            {"duration_ns", s.duration},
            {"match_window_ns", s.match_window},
            {"nodes", nodes},
            {"links", links},
            {"streams", streams},
            {"generators", generators},
            {"traces", traces},
            {"egress", egress},
            {"psfp", psfp},
            {"corruptions", corruptions}};
  return root.dump(2) + "\n";
}

void save_scenario(const Scenario& s, const std::string& path) {
  const fs::path dir = fs::path(path).parent_path();
  if (!dir.empty()) {
    fs::create_directories(dir);
  }
  for (const auto& t : s.traces) {
    const fs::path tp = dir / t.path;
    if (tp.has_parent_path()) {
      fs::create_directories(tp.parent_path());
    }
    std::ofstream out(tp);
    if (!out) {
      throw ConfigError(tp.string() + ": cannot write trace file");
    }
    write_trace(out, t.records);
  }
  std::ofstream out(path);
  if (!out) {
    throw ConfigError(path + ": cannot write scenario file");
  }
  out << render_scenario(s);
}

} // namespace ivn
