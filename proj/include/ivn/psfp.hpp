#pragma once

// IEEE 802.1Qci per-stream filtering and policing for one ingress port:
// stream identification, stream gates and flow meters, plus the drop and
// TDMA-loss indicators the anomaly detector consumes.

#include "ivn/core.hpp"
#include "ivn/engine.hpp"
#include "ivn/netmodel.hpp"

#include <map>
#include <optional>
#include <variant>
#include <vector>

namespace ivn {

/// Matches any untagged frame (background cross traffic).
struct MatchUntagged {
  friend bool operator==(const MatchUntagged&, const MatchUntagged&) = default;
};

using StreamMatch = std::variant<StreamId, MatchUntagged>;

struct MaxFrameSize {
  std::uint32_t limit = kMinFrame;
  friend bool operator==(const MaxFrameSize&, const MaxFrameSize&) = default;
};

/// Credit-based meter mirroring an upstream credit-based shaper: credit
/// replenishes at the idle slope up to the cap, a frame conforms when credit
/// is non-negative on arrival and then consumes its line bits.
struct CreditMeterConfig {
  BitRate idle_slope = 0;
  std::int64_t burst_cap_bits = 0;
  std::uint32_t framing_overhead = kDefaultFramingOverhead;
  friend bool operator==(const CreditMeterConfig&, const CreditMeterConfig&) = default;
};

using MeterConfig = std::variant<std::monostate, MaxFrameSize, CreditMeterConfig>;

struct TdmaLossConfig {
  std::uint32_t expected_per_window = 1;
  friend bool operator==(const TdmaLossConfig&, const TdmaLossConfig&) = default;
};

struct StreamFilter {
  StreamMatch match;
  /// Unset: the gate is always open.
  std::optional<GateControlList> gate;
  MeterConfig meter;
  std::optional<TdmaLossConfig> loss_detector;
};

/// Frames matching no filter are dropped.
struct PsfpPortConfig {
  std::vector<StreamFilter> filters;
};

struct MeterState {
  Nanobits credit = 0;
  SimTime last_update = 0;
};

enum class Conformance { Conform, Nonconform };

enum class IndicatorKind { GateDrop, MeterDrop, UnknownDrop, TdmaLoss };

std::string to_string(IndicatorKind k);
IndicatorKind indicator_kind_from_string(const std::string& s);

struct IndicatorEvent {
  SimTime at = 0;
  NodeId node = 0;
  PortId port = 0;
  StreamId stream;
  IndicatorKind kind = IndicatorKind::GateDrop;
  /// TdmaLoss carries the frame of the stream dropped in the same window, if any.
  std::optional<std::uint64_t> frame_ref;
};

enum class Verdict { Forwarded, GateDrop, MeterDrop, UnknownDrop };

struct StreamCounters {
  std::uint64_t arrived = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t dropped_gate = 0;
  std::uint64_t dropped_meter = 0;
  std::uint64_t dropped_unknown = 0;
  std::uint64_t loss_events = 0;

  std::uint64_t dropped() const { return dropped_gate + dropped_meter + dropped_unknown; }
  bool conserved() const { return arrived == forwarded + dropped(); }
  /// Every counter of *this is <= the matching counter of `later`.
  bool dominated_by(const StreamCounters& later) const;
  friend bool operator==(const StreamCounters&, const StreamCounters&) = default;
};

struct PortStats {
  StreamCounters total;
  std::map<StreamId, StreamCounters> per_stream;

  bool conserved() const;
};

GateState gate_check(const StreamFilter& filter, SimTime now);
Conformance meter_check(const MeterConfig& meter, MeterState& state, const Frame& frame, SimTime now);
/// Number of TdmaLoss indications owed at a window close.
std::uint32_t tdma_window_close(const TdmaLossConfig& loss, std::uint32_t window_pass_count);

/// Ingress schedule for a time-triggered stream: every egress window is moved
/// to the expected arrival of a frame sent at window open (`arrival_delay`)
/// and widened to [arrival - early, arrival + late). Windows that cross the
/// cycle boundary are split.
GateControlList ingress_schedule(const GateControlList& egress, Duration arrival_delay, Duration early,
                                 Duration late);

/// Credit cap that admits every frame up to `max_frame_wire` from a shaper
/// with the given idle slope and hi-credit.
std::int64_t meter_cap_for(BitRate idle_slope, std::int64_t hi_credit_bits, std::uint32_t max_frame_wire,
                           BitRate link_rate, std::uint32_t framing_overhead = kDefaultFramingOverhead);

/// One PSFP instance bound to a (switch, ingress port).
class PsfpInstance {
public:
  using Sink = std::function<void(const IndicatorEvent&)>;

  PsfpInstance(NodeId node, PortId port, PsfpPortConfig cfg, Sink sink);

  /// Run the frame through identification, gate and meter at `now`.
  Verdict ingest(const Frame& frame, SimTime now);
  /// Schedule window-close checks for every filter with a loss detector.
  void start_loss_detection(Simulator& sim);

  PortStats snapshot_stats() const { return stats_; }
  const PsfpPortConfig& config() const { return cfg_; }
  NodeId node() const { return node_; }
  PortId port() const { return port_; }

private:
  struct FilterState {
    MeterState meter;
    std::uint32_t window_passes = 0;
    bool loss_armed = false;
    /// Last frame of this filter dropped since the previous window close.
    std::optional<std::uint64_t> window_drop;
  };

  std::optional<std::size_t> identify(const Frame& frame) const;
  void emit(IndicatorKind kind, StreamId stream, SimTime at, std::optional<std::uint64_t> frame_ref);
  void on_window_close(Simulator& sim, std::size_t filter);

  NodeId node_;
  PortId port_;
  PsfpPortConfig cfg_;
  Sink sink_;
  std::vector<FilterState> state_;
  PortStats stats_;
};

} // namespace ivn
