#pragma once

// Corruption injectors attached inside a source host, either between the
// application and the egress shaper or between the egress port and the PHY.

#include "ivn/core.hpp"
#include "ivn/engine.hpp"
#include "ivn/traffic.hpp"

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ivn {

enum class Layer { Application, Link };

enum class CorruptionKind { Elimination, Injection, Manipulation, Reordering, Rescheduling };

std::string to_string(Layer l);
std::string to_string(CorruptionKind k);
Layer layer_from_string(const std::string& s);
CorruptionKind corruption_kind_from_string(const std::string& s);

struct CorruptionSpec {
  StreamId target;
  Layer layer = Layer::Application;
  CorruptionKind kind = CorruptionKind::Elimination;
  double probability = 0.5;
  Duration min_event_gap = milliseconds(1);
  /// Upper bound of the injection interval jitter and the rescheduling delay.
  Duration max_delay = microseconds(125);
  std::uint32_t max_payload = kMaxPayload;
  friend bool operator==(const CorruptionSpec&, const CorruptionSpec&) = default;
};

struct GroundTruthEvent {
  SimTime at = 0;
  StreamId stream;
  CorruptionKind kind = CorruptionKind::Elimination;
  Layer layer = Layer::Application;
  std::vector<std::uint64_t> frame_refs;
  friend bool operator==(const GroundTruthEvent&, const GroundTruthEvent&) = default;
};

void validate_corruption(const CorruptionSpec& spec);

/// One injector. Every frame crossing the attachment point goes through
/// `process`; frames of other streams pass untouched.
class CorruptionLayer {
public:
  using Forward = std::function<void(const Frame&)>;
  using GroundTruthSink = std::function<void(const GroundTruthEvent&)>;

  CorruptionLayer(Simulator& sim, CorruptionSpec spec, StreamDescriptor target, RngStream rng,
                  FrameFactory& factory, Forward forward, GroundTruthSink sink);

  /// Arms the injection timer and the end-of-stream flush for held frames.
  void start(SimTime end);
  void process(const Frame& frame);

  const CorruptionSpec& spec() const { return spec_; }
  std::uint64_t events() const { return events_; }

private:
  bool eligible() const;
  void record(std::vector<std::uint64_t> refs);
  void inject();
  void schedule_injection(SimTime from);
  void flush();

  Simulator& sim_;
  CorruptionSpec spec_;
  StreamDescriptor target_;
  RngStream rng_;
  FrameFactory& factory_;
  Forward forward_;
  GroundTruthSink sink_;
  std::optional<SimTime> last_event_;
  std::optional<Frame> held_;
  SimTime end_ = 0;
  std::uint64_t events_ = 0;
};

} // namespace ivn
