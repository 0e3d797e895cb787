#pragma once

// Chronological record of indicators, alarms and ground truth of one run.
// Text form: `kind,time_ns,node,port,stream,detail` with a header line.

#include "ivn/core.hpp"
#include "ivn/corruption.hpp"
#include "ivn/nads.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ivn {

struct LogRecord {
  /// indicator, alarm or truth
  std::string kind;
  SimTime at = 0;
  std::string node;
  /// Port number, or "-" for ground truth.
  std::string port;
  std::string stream;
  std::string detail;
  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct RunLog {
  std::vector<LogRecord> records;
  friend bool operator==(const RunLog&, const RunLog&) = default;
};

inline constexpr const char* kRunLogHeader = "kind,time_ns,node,port,stream,detail";

std::string render_run_log(const RunLog& log);
/// Throws ConfigError on a malformed line, naming its line number.
RunLog parse_run_log(std::istream& in);

LogRecord indicator_record(const IndicatorEvent& e, const std::string& node, const std::string& stream);
LogRecord alarm_record(const AnomalyAlarm& a, const std::string& node, const std::string& stream);
LogRecord truth_record(const GroundTruthEvent& g, const std::string& host, const std::string& stream);

/// Alarms and ground truth recovered from a log, for re-scoring offline.
/// Stream identities are assigned in order of first appearance, so stream
/// equality is preserved but ids differ from the scenario's.
struct ReplayedRun {
  std::vector<AnomalyAlarm> alarms;
  std::vector<GroundTruthEvent> ground_truth;
};

ReplayedRun replay_run_log(const RunLog& log);

} // namespace ivn
