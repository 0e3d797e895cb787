#pragma once

// Central anomaly detector: turns PSFP indicator events into alarms and
// scores alarms against the corruption ground truth.

#include "ivn/core.hpp"
#include "ivn/corruption.hpp"
#include "ivn/psfp.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace ivn {

struct AnomalyAlarm {
  SimTime at = 0;
  NodeId node = 0;
  PortId port = 0;
  StreamId stream;
  IndicatorKind kind = IndicatorKind::GateDrop;
  std::uint64_t cumulative = 0;
  std::optional<std::uint64_t> frame_ref;
  friend bool operator==(const AnomalyAlarm&, const AnomalyAlarm&) = default;
};

/// Raises one alarm per counter increment. Counters are cumulative per
/// (switch, port, stream, indicator kind) since network initialization.
class Controller {
public:
  AnomalyAlarm observe(const IndicatorEvent& event);

  const std::vector<AnomalyAlarm>& alarms() const { return alarms_; }
  std::uint64_t cumulative(NodeId node, PortId port, StreamId stream, IndicatorKind kind) const;

private:
  std::map<std::tuple<NodeId, PortId, StreamId, IndicatorKind>, std::uint64_t> counters_;
  std::vector<AnomalyAlarm> alarms_;
};

enum class DetectionMode { DropOnly, DropAndLoss };

std::string to_string(DetectionMode m);

struct Score {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t alarms = 0;

  std::optional<double> precision() const;
  std::optional<double> recall() const;
  friend bool operator==(const Score&, const Score&) = default;
};

struct ScoreOptions {
  Duration window = milliseconds(1);
  DetectionMode mode = DetectionMode::DropAndLoss;
  /// Trace replay records may be closer than the window; the latest preceding
  /// event then owns an unlinked alarm.
  bool allow_overlap = false;
  /// Same-stream alarms belong to the stream's latest preceding event however
  /// late they come; when false they must fall inside its window.
  bool stream_horizon = true;
};

/// Attribution of each alarm, in order: the ground-truth event that lists the
/// alarm's frame; the latest preceding event of the same stream (within its
/// window unless `stream_horizon`); the nearest preceding event of any stream
/// whose window contains it.
/// Unattributed alarms are false positives; events without alarms are misses.
/// Throws ConfigError when two events of one stream are closer than the window,
/// unless overlap is allowed.
Score score(const std::vector<GroundTruthEvent>& ground_truth, const std::vector<AnomalyAlarm>& alarms,
            const ScoreOptions& options = {});

struct PortReport {
  std::string node;
  PortId port = 0;
  PortStats stats;
};

struct MetricsReport {
  std::string scenario;
  std::uint64_t seed = 0;
  Duration duration = 0;
  /// "none" or `stream/kind/layer` of each enabled corruption.
  std::vector<std::string> corruptions;
  std::uint64_t ground_truth_events = 0;
  Score drop_only;
  Score drop_and_loss;
  std::vector<PortReport> ports;

  const Score& score_for(DetectionMode m) const { return m == DetectionMode::DropOnly ? drop_only : drop_and_loss; }
  StreamCounters totals() const;
};

/// key=value lines, one per field, stable ordering.
std::string render_report(const MetricsReport& report);
/// node,port,stream,arrived,forwarded,dropped_gate,dropped_meter,dropped_unknown,loss_events
std::string render_port_stats_csv(const MetricsReport& report,
                                  const std::function<std::string(StreamId)>& stream_name);

std::string format_ratio(const std::optional<double>& v);

} // namespace ivn
