#include "ivn/runlog.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <sstream>

namespace ivn {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    out.push_back(cur);
  }
  if (!s.empty() && s.back() == sep) {
    out.emplace_back();
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& what) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError("bad " + what + " '" + s + "'");
  }
  return v;
}

std::string frame_suffix(const std::optional<std::uint64_t>& ref) {
  return ref ? ";frame=" + std::to_string(*ref) : "";
}

} // namespace

std::string render_run_log(const RunLog& log) {
  std::ostringstream out;
  out << kRunLogHeader << '\n';
  for (const auto& r : log.records) {
    out << r.kind << ',' << r.at << ',' << r.node << ',' << r.port << ',' << r.stream << ',' << r.detail << '\n';
  }
  return out.str();
}

RunLog parse_run_log(std::istream& in) {
  RunLog log;
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) {
      continue;
    }
    if (!header) {
      if (line != kRunLogHeader) {
        throw ConfigError("run log line 1: expected header '" + std::string(kRunLogHeader) + "'");
      }
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 6) {
      throw ConfigError("run log line " + std::to_string(n) + ": expected 6 fields");
    }
    if (f[0] != "indicator" && f[0] != "alarm" && f[0] != "truth") {
      throw ConfigError("run log line " + std::to_string(n) + ": unknown record kind '" + f[0] + "'");
    }
    try {
      log.records.push_back({f[0], parse_number<SimTime>(f[1], "time"), f[2], f[3], f[4], f[5]});
    } catch (const ConfigError& e) {
      throw ConfigError("run log line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (!header) {
    throw ConfigError("run log is empty");
  }
  return log;
}

LogRecord indicator_record(const IndicatorEvent& e, const std::string& node, const std::string& stream) {
  return {"indicator", e.at, node, std::to_string(e.port), stream, to_string(e.kind) + frame_suffix(e.frame_ref)};
}

LogRecord alarm_record(const AnomalyAlarm& a, const std::string& node, const std::string& stream) {
  return {"alarm", a.at, node, std::to_string(a.port), stream,
          to_string(a.kind) + ";cumulative=" + std::to_string(a.cumulative) + frame_suffix(a.frame_ref)};
}

LogRecord truth_record(const GroundTruthEvent& g, const std::string& host, const std::string& stream) {
  std::string frames;
  for (auto ref : g.frame_refs) {
    frames += (frames.empty() ? "" : " ") + std::to_string(ref);
  }
  return {"truth", g.at, host, "-", stream, to_string(g.kind) + "/" + to_string(g.layer) + ";frames=" + frames};
}

ReplayedRun replay_run_log(const RunLog& log) {
  ReplayedRun out;
  std::map<std::string, StreamId> streams;
  std::map<std::string, NodeId> nodes;
  const auto stream_of = [&](const std::string& name) {
    return streams.emplace(name, StreamId{static_cast<std::uint32_t>(streams.size())}).first->second;
  };
  const auto node_of = [&](const std::string& name) {
    return nodes.emplace(name, static_cast<NodeId>(nodes.size())).first->second;
  };
  for (const auto& r : log.records) {
    const auto parts = split(r.detail, ';');
    if (parts.empty()) {
      throw ConfigError("run log record without detail");
    }
    if (r.kind == "alarm") {
      AnomalyAlarm a;
      a.at = r.at;
      a.node = node_of(r.node);
      a.port = parse_number<PortId>(r.port, "port");
      a.stream = stream_of(r.stream);
      a.kind = indicator_kind_from_string(parts[0]);
      for (std::size_t i = 1; i < parts.size(); ++i) {
        if (parts[i].starts_with("cumulative=")) {
          a.cumulative = parse_number<std::uint64_t>(parts[i].substr(11), "cumulative count");
        } else if (parts[i].starts_with("frame=")) {
          a.frame_ref = parse_number<std::uint64_t>(parts[i].substr(6), "frame reference");
        }
      }
      out.alarms.push_back(a);
    } else if (r.kind == "truth") {
      GroundTruthEvent g;
      g.at = r.at;
      g.stream = stream_of(r.stream);
      const auto kl = split(parts[0], '/');
      if (kl.size() != 2) {
        throw ConfigError("bad ground-truth detail '" + r.detail + "'");
      }
      g.kind = corruption_kind_from_string(kl[0]);
      g.layer = layer_from_string(kl[1]);
      if (parts.size() > 1 && parts[1].starts_with("frames=")) {
        for (const auto& ref : split(parts[1].substr(7), ' ')) {
          if (!ref.empty()) {
            g.frame_refs.push_back(parse_number<std::uint64_t>(ref, "frame reference"));
          }
        }
      }
      out.ground_truth.push_back(std::move(g));
    }
  }
  return out;
}

} // namespace ivn
