#pragma once

// Wires a scenario into hosts, switches, links and the controller, runs it and
// collects the metrics report, run log and ground truth.

#include "ivn/nads.hpp"
#include "ivn/runlog.hpp"
#include "ivn/scenario.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>

namespace ivn {

/// A conservation or bookkeeping check failed after a run.
class InvariantViolation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct IngestRecord {
  SimTime at = 0;
  NodeId node = 0;
  PortId port = 0;
  Frame frame;
  Verdict verdict = Verdict::Forwarded;
};

struct RunOptions {
  /// Overrides the scenario's seed.
  std::optional<std::uint64_t> seed;
  /// Called after every PSFP decision.
  std::function<void(const IngestRecord&)> on_ingest;
};

struct RunResult {
  MetricsReport report;
  RunLog log;
  std::vector<IndicatorEvent> indicators;
  std::vector<AnomalyAlarm> alarms;
  std::vector<GroundTruthEvent> ground_truth;
  std::uint64_t frames_created = 0;
  /// Copies delivered to destination hosts, per stream.
  std::map<StreamId, std::uint64_t> delivered;
  /// Frames reaching a switch with no route for their stream.
  std::uint64_t unroutable = 0;
  std::uint64_t events_executed = 0;
};

/// Queue layout of a scenario egress spec with stream names resolved.
std::vector<QueueConfig> to_queue_configs(const Scenario& s, const EgressSpec& spec);
PsfpPortConfig to_port_config(const Scenario& s, const PsfpSpec& spec);

/// Validates and runs the scenario for its full duration. Throws ConfigError
/// for invalid scenarios and InvariantViolation when post-run checks fail.
RunResult run_scenario(const Scenario& s, const RunOptions& options = {});

} // namespace ivn
