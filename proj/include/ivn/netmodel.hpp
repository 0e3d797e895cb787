#pragma once

// Egress machinery: gate control lists, credit-based shaping, strict-priority
// queue selection and serializing links.

#include "ivn/core.hpp"
#include "ivn/engine.hpp"

#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace ivn {

enum class GateState { Open, Closed };

struct GateEntry {
  Duration offset = 0;
  Duration length = 0;

  friend bool operator==(const GateEntry&, const GateEntry&) = default;
};

/// Periodic open/close schedule. Windows are half-open [offset, offset+length)
/// relative to the start of each cycle; the gate is closed outside them.
class GateControlList {
public:
  struct Window {
    SimTime open;
    SimTime close;
  };

  GateControlList() = default;
  /// Validates that entries are sorted, non-overlapping and inside [0, cycle).
  GateControlList(Duration cycle, std::vector<GateEntry> entries);

  Duration cycle() const { return cycle_; }
  const std::vector<GateEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  GateState state_at(SimTime t) const;
  /// The window containing t, else the next window opening after t. Touching
  /// entries, including the last and first across the cycle boundary, form
  /// one window.
  std::optional<Window> window_at_or_after(SimTime t) const;
  /// Earliest instant >= t at which the gate is open and stays open for at
  /// least `need`. nullopt when no window is long enough.
  std::optional<SimTime> earliest_fit(SimTime t, Duration need) const;
  /// First window close strictly after t.
  std::optional<SimTime> next_close_after(SimTime t) const;

  friend bool operator==(const GateControlList&, const GateControlList&) = default;

private:
  Duration cycle_ = 0;
  std::vector<GateEntry> entries_;
  /// Merged open runs; the last one may extend past the cycle end.
  std::vector<GateEntry> runs_;
  bool always_open_ = false;
};

inline GateState gate_state(const GateControlList& gcl, SimTime t) { return gcl.state_at(t); }

/// Credit values are kept in nanobits (1e-9 bit) so that slope x time in
/// (bit/s) x ns is an exact integer.
using Nanobits = std::int64_t;

constexpr Nanobits bits_to_nanobits(std::int64_t bits) { return bits * 1'000'000'000LL; }

struct CbsConfig {
  BitRate idle_slope = 0;
  /// Upper clamp on accumulated credit, in bits. Unset means unbounded.
  std::optional<std::int64_t> hi_credit_bits;

  friend bool operator==(const CbsConfig&, const CbsConfig&) = default;
};

/// 802.1Qav credit-based shaper state for one queue.
class CreditBasedShaper {
public:
  CreditBasedShaper(CbsConfig cfg, BitRate port_rate);

  /// Bring credit up to `now`. `backlogged` describes the queue since the
  /// last update; ignored while a frame of this queue is in transmission.
  void advance(SimTime now, bool backlogged);
  void begin_transmission(SimTime now);
  void end_transmission(SimTime now, Duration duration, bool queue_empty);

  bool permits() const { return credit_ >= 0; }
  bool transmitting() const { return transmitting_; }
  /// Time at which a waiting, backlogged queue reaches zero credit.
  SimTime zero_credit_time(SimTime now) const;

  Nanobits credit() const { return credit_; }
  double credit_bits() const { return static_cast<double>(credit_) * 1e-9; }
  const CbsConfig& config() const { return cfg_; }

private:
  void clamp();

  CbsConfig cfg_;
  BitRate port_rate_;
  Nanobits credit_ = 0;
  SimTime last_ = 0;
  bool transmitting_ = false;
};

struct QueueConfig {
  std::string name;
  /// Higher rank is served first; equal ranks fall back to declaration order.
  int rank = 0;
  std::vector<Priority> priorities;
  /// Streams explicitly mapped to this queue, overriding priority mapping.
  std::vector<StreamId> streams;
  std::optional<GateControlList> gate;
  std::optional<CbsConfig> cbs;
  std::optional<std::size_t> capacity;
};

/// Eight priority queues plus an untagged queue, no shaping.
std::vector<QueueConfig> default_queue_layout();

/// Strict-priority egress port. A queue is eligible when its gate is open
/// with enough window left for the head frame (no overrun) and, for
/// credit-based queues, its credit is non-negative.
class EgressPort {
public:
  using Transmit = std::function<void(const Frame&)>;

  EgressPort(Simulator& sim, BitRate rate, std::uint32_t framing_overhead, std::vector<QueueConfig> queues,
             Transmit transmit);
  EgressPort(const EgressPort&) = delete;
  EgressPort& operator=(const EgressPort&) = delete;

  void enqueue(const Frame& frame);
  /// Holds transmission start while `busy` reports the shared medium in use;
  /// call medium_idle() when it frees up.
  void attach_medium(std::function<bool()> busy) { medium_busy_ = std::move(busy); }
  void medium_idle() { try_transmit(); }

  std::size_t queue_index_for(const Frame& frame) const;
  std::size_t backlog() const;
  std::size_t backlog(std::size_t queue) const { return queues_.at(queue).frames.size(); }
  std::uint64_t overflow_drops() const { return overflow_drops_; }
  std::uint64_t transmitted() const { return transmitted_; }
  const CreditBasedShaper* shaper(std::size_t queue) const;
  std::size_t queue_count() const { return queues_.size(); }

private:
  struct Queue {
    QueueConfig cfg;
    std::deque<Frame> frames;
    std::optional<CreditBasedShaper> cbs;
  };

  void advance_shapers();
  void try_transmit();
  void finish_transmission(std::size_t queue, Duration duration);
  std::optional<SimTime> eligible_from(const Queue& q, SimTime now) const;
  void wake_at(SimTime t);

  Simulator& sim_;
  BitRate rate_;
  std::uint32_t overhead_;
  std::vector<Queue> queues_;
  std::vector<std::size_t> order_;
  Transmit transmit_;
  std::function<bool()> medium_busy_;
  bool busy_ = false;
  std::optional<SimTime> pending_wake_;
  std::uint64_t overflow_drops_ = 0;
  std::uint64_t transmitted_ = 0;
};

struct LinkConfig {
  BitRate rate = mbps(100);
  Duration propagation_delay = 0;
  std::uint32_t framing_overhead = kDefaultFramingOverhead;
};

/// Arrival instant (end of reception) of a frame leaving at `depart`.
SimTime deliver(const LinkConfig& link, const Frame& frame, SimTime depart);

/// One direction of a full-duplex link. Frames are serialized FIFO, one at a
/// time; the peer callback runs at the end-of-reception instant.
class LinkTransmitter {
public:
  using Receive = std::function<void(const Frame&)>;

  LinkTransmitter(Simulator& sim, LinkConfig cfg, Receive receive);
  LinkTransmitter(const LinkTransmitter&) = delete;
  LinkTransmitter& operator=(const LinkTransmitter&) = delete;

  void send(const Frame& frame);
  bool idle() const { return !busy_; }
  /// Called whenever the transmitter runs out of frames.
  void on_idle(std::function<void()> cb) { on_idle_ = std::move(cb); }
  const LinkConfig& config() const { return cfg_; }
  std::uint64_t sent() const { return sent_; }

private:
  void start(const Frame& frame);

  Simulator& sim_;
  LinkConfig cfg_;
  Receive receive_;
  std::function<void()> on_idle_;
  std::deque<Frame> fifo_;
  bool busy_ = false;
  std::uint64_t sent_ = 0;
};

} // namespace ivn
