// ivnsim: run scenarios and benchmark matrices from the command line.

#include "ivn/matrix.hpp"
#include "ivn/scenario_io.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace ivn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

std::string default_out_dir() {
  const char* env = std::getenv("IVNSIM_OUT");
  return env && *env ? env : "out";
}

// Builtin names resolve to the builders unless a file of that name exists.
Scenario resolve_scenario(const std::string& arg) {
  if (!fs::exists(arg)) {
    if (arg == "micro") {
      return build_micro();
    }
    if (arg == "macro") {
      return build_macro();
    }
  }
  return load_scenario(arg);
}

// All files are rendered before the directory is touched so that a failed
// run leaves nothing behind.
void write_files(const std::string& dir, const std::map<std::string, std::string>& files) {
  fs::create_directories(dir);
  for (const auto& [name, text] : files) {
    const fs::path p = fs::path(dir) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) {
      throw ConfigError(p.string() + ": cannot write");
    }
    out << text;
  }
}

std::string ratio(const std::optional<double>& v) { return format_ratio(v); }

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<Duration> duration,
            const std::string& out_dir) {
  Scenario s = resolve_scenario(path);
  if (duration) {
    s.duration = *duration;
  }
  RunOptions opts;
  opts.seed = seed;
  const RunResult r = run_scenario(s, opts);
  write_files(out_dir, {{"run_log.csv", render_run_log(r.log)},
                        {"report.txt", render_report(r.report)},
                        {"port_stats.csv", render_port_stats_csv(r.report, [&](StreamId id) {
                           return s.stream_name(id);
                         })}});
  const Score& sc = r.report.drop_only;
  std::cout << s.name << " seed=" << r.report.seed << " ground_truth=" << r.report.ground_truth_events
            << " alarms=" << sc.alarms << " tp=" << sc.tp << " fp=" << sc.fp << " fn=" << sc.fn
            << " recall=" << ratio(sc.recall()) << " precision=" << ratio(sc.precision()) << '\n';
  return 0;
}

struct RunRow {
  std::string label;
  std::uint64_t seed = 0;
  MetricsReport report;
};

std::string baseline_csv(const std::vector<RunRow>& rows) {
  std::ostringstream out;
  out << "seed,psfp_instances,arrived,forwarded,dropped,alarms\n";
  for (const auto& r : rows) {
    const auto t = r.report.totals();
    out << r.seed << ',' << r.report.ports.size() << ',' << t.arrived << ',' << t.forwarded << ',' << t.dropped()
        << ',' << r.report.drop_and_loss.alarms << '\n';
  }
  return out.str();
}

std::string runs_csv(const std::vector<RunRow>& rows) {
  std::ostringstream out;
  out << "scenario,seed,ground_truth,mode,alarms,tp,fp,fn,precision,recall\n";
  for (const auto& r : rows) {
    for (auto mode : {DetectionMode::DropOnly, DetectionMode::DropAndLoss}) {
      const Score& s = r.report.score_for(mode);
      out << r.label << ',' << r.seed << ',' << r.report.ground_truth_events << ',' << to_string(mode) << ','
          << s.alarms << ',' << s.tp << ',' << s.fp << ',' << s.fn << ',' << ratio(s.precision()) << ','
          << ratio(s.recall()) << '\n';
    }
  }
  return out.str();
}

// One row per case with counts pooled over seeds.
std::string recall_table(const std::vector<MicroCase>& cases, const std::vector<RunRow>& rows, std::size_t seeds,
                         DetectionMode mode) {
  std::ostringstream out;
  out << "pattern,corruption,layer,seeds,ground_truth,tp,fn,recall,fp,precision\n";
  for (std::size_t c = 0; c < cases.size(); ++c) {
    Score pooled;
    std::uint64_t gt = 0;
    for (std::size_t k = 0; k < seeds; ++k) {
      const auto& rep = rows[c * seeds + k].report;
      const Score& s = rep.score_for(mode);
      pooled.tp += s.tp;
      pooled.fn += s.fn;
      pooled.fp += s.fp;
      pooled.alarms += s.alarms;
      gt += rep.ground_truth_events;
    }
    out << to_string(cases[c].pattern) << ',' << to_string(cases[c].kind) << ',' << to_string(cases[c].layer)
        << ',' << seeds << ',' << gt << ',' << pooled.tp << ',' << pooled.fn << ',' << ratio(pooled.recall()) << ','
        << pooled.fp << ',' << ratio(pooled.precision()) << '\n';
  }
  return out.str();
}

std::vector<RunRow> run_all(const std::vector<std::pair<Scenario, std::uint64_t>>& jobs, unsigned workers) {
  return parallel_map(jobs.size(), workers, [&](std::size_t i) {
    RunOptions opts;
    opts.seed = jobs[i].second;
    return RunRow{jobs[i].first.name, jobs[i].second, run_scenario(jobs[i].first, opts).report};
  });
}

int cmd_matrix(const std::string& which, const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
               unsigned workers) {
  std::map<std::string, std::string> files;
  if (which == "micro" || which == "micro-tdma") {
    const Scenario base = build_micro();
    const auto cases = which == "micro" ? micro_cases() : micro_tdma_cases();
    std::vector<std::pair<Scenario, std::uint64_t>> jobs;
    for (const auto& c : cases) {
      const Scenario s = micro_with_corruption(base, c.pattern, c.kind, c.layer);
      for (auto seed : seeds) {
        jobs.emplace_back(s, seed);
      }
    }
    const std::size_t corrupted = jobs.size();
    if (which == "micro") {
      for (auto seed : seeds) {
        jobs.emplace_back(base, seed);
      }
    }
    const auto rows = run_all(jobs, workers);
    const std::vector<RunRow> runs(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(corrupted));
    files["runs.csv"] = runs_csv(runs);
    if (which == "micro") {
      files["baseline.csv"] = baseline_csv({rows.begin() + static_cast<std::ptrdiff_t>(corrupted), rows.end()});
      files["recall_drop_only.csv"] = recall_table(cases, runs, seeds.size(), DetectionMode::DropOnly);
    } else {
      files["recall_drop_and_loss.csv"] = recall_table(cases, runs, seeds.size(), DetectionMode::DropAndLoss);
    }
  } else if (which == "macro") {
    const Scenario base = build_macro();
    const auto cases = macro_cases();
    std::vector<std::pair<Scenario, std::uint64_t>> jobs;
    for (const auto& c : cases) {
      jobs.emplace_back(macro_with_attack(base, c.attack, c.target), seeds.front());
    }
    for (auto seed : seeds) {
      jobs.emplace_back(base, seed);
    }
    const auto rows = run_all(jobs, workers);
    std::ostringstream out;
    out << "attack,target,stream,trace_frames,drops_switch_front,drops_switch_center,drops_switch_rear,alarms,tp,fp\n";
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const Scenario& s = jobs[i].first;
      const StreamId id = s.stream_id(macro_stream(cases[i].target));
      std::map<std::string, std::uint64_t> drops;
      for (const auto& p : rows[i].report.ports) {
        if (const auto it = p.stats.per_stream.find(id); it != p.stats.per_stream.end()) {
          drops[p.node] += it->second.dropped();
        }
      }
      const Score& sc = rows[i].report.drop_only;
      out << to_string(cases[i].attack) << ',' << to_string(cases[i].target) << ',' << s.stream_name(id) << ','
          << s.traces.front().records.records.size() << ',' << drops["switch_front"] << ','
          << drops["switch_center"] << ',' << drops["switch_rear"] << ',' << sc.alarms << ',' << sc.tp << ','
          << sc.fp << '\n';
    }
    files["attacks.csv"] = out.str();
    files["baseline.csv"] = baseline_csv({rows.begin() + static_cast<std::ptrdiff_t>(cases.size()), rows.end()});
  } else {
    throw ConfigError("unknown matrix '" + which + "' (expected micro, micro-tdma or macro)");
  }
  write_files(out_dir, files);
  for (const auto& [name, text] : files) {
    std::cout << (fs::path(out_dir) / name).string() << '\n';
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  const Scenario s = resolve_scenario(path);
  validate(s);
  std::cout << s.name << ": ok (" << s.nodes.size() << " nodes, " << s.streams.size() << " streams, "
            << s.psfp.size() << " PSFP instances)\n";
  return 0;
}

int cmd_export(const std::string& out_dir) {
  save_scenario(build_micro(), (fs::path(out_dir) / "micro.json").string());
  save_scenario(build_macro(), (fs::path(out_dir) / "macro.json").string());
  const Scenario macro = build_macro();
  for (const auto& c : macro_cases()) {
    const Scenario s = macro_with_attack(macro, c.attack, c.target);
    save_scenario(s, (fs::path(out_dir) / ("macro_" + to_string(c.attack) + "_" + to_string(c.target) + ".json"))
                         .string());
  }
  return 0;
}

int cmd_convert(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) {
    throw ConfigError(in_path + ": cannot open capture file");
  }
  const TraceFile t = convert_capture_csv(in);
  std::ofstream out(out_path);
  if (!out) {
    throw ConfigError(out_path + ": cannot write trace file");
  }
  write_trace(out, t);
  std::cout << t.records.size() << " records\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-vehicle TSN network simulator with PSFP-based anomaly detection"};
  app.require_subcommand(1);

  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<Duration> duration;
  std::string out_dir = default_out_dir();
  auto* run = app.add_subcommand("run", "Run one scenario (file, or the builtin micro/macro)");
  run->add_option("scenario", scenario, "Scenario file or builtin name")->required();
  run->add_option("--seed", seed, "Seed override");
  run->add_option("--duration", duration, "Duration override in ns");
  run->add_option("--out", out_dir, "Output directory (default $IVNSIM_OUT or ./out)");

  std::string which;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  unsigned workers = default_workers();
  auto* matrix = app.add_subcommand("matrix", "Run a benchmark matrix");
  matrix->add_option("name", which, "micro, micro-tdma or macro")->required();
  matrix->add_option("--seeds", seeds, "Comma-separated seeds")->delimiter(',');
  matrix->add_option("--out", out_dir, "Output directory (default $IVNSIM_OUT or ./out)");
  matrix->add_option("--jobs", workers, "Worker threads");

  auto* val = app.add_subcommand("validate", "Check a scenario file");
  val->add_option("scenario", scenario, "Scenario file or builtin name")->required();

  std::string export_dir = "scenarios";
  auto* exp = app.add_subcommand("export", "Write the builtin scenarios and attack traces as files");
  exp->add_option("dir", export_dir, "Target directory");

  std::string capture;
  std::string trace_out;
  auto* conv = app.add_subcommand("convert-trace", "Convert a time_seconds,frame_bytes capture CSV to a trace");
  conv->add_option("capture", capture, "Capture CSV")->required();
  conv->add_option("trace", trace_out, "Output trace file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      return cmd_run(scenario, seed, duration, out_dir);
    }
    if (*matrix) {
      if (seeds.empty()) {
        throw ConfigError("--seeds must name at least one seed");
      }
      return cmd_matrix(which, seeds, out_dir, workers);
    }
    if (*val) {
      return cmd_validate(scenario);
    }
    if (*exp) {
      return cmd_export(export_dir);
    }
    return cmd_convert(capture, trace_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
