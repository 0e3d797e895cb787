#include "ivn/corruption.hpp"

namespace ivn {

std::string to_string(Layer l) {
  return l == Layer::Application ? "app" : "link";
}

std::string to_string(CorruptionKind k) {
  switch (k) {
  case CorruptionKind::Elimination: return "elimination";
  case CorruptionKind::Injection: return "injection";
  case CorruptionKind::Manipulation: return "manipulation";
  case CorruptionKind::Reordering: return "reordering";
  case CorruptionKind::Rescheduling: return "rescheduling";
  }
  return "?";
}

Layer layer_from_string(const std::string& s) {
  if (s == "app") {
    return Layer::Application;
  }
  if (s == "link") {
    return Layer::Link;
  }
  throw ConfigError("unknown corruption layer '" + s + "' (expected app or link)");
}

CorruptionKind corruption_kind_from_string(const std::string& s) {
  for (auto k : {CorruptionKind::Elimination, CorruptionKind::Injection, CorruptionKind::Manipulation,
                 CorruptionKind::Reordering, CorruptionKind::Rescheduling}) {
    if (to_string(k) == s) {
      return k;
    }
  }
  throw ConfigError("unknown corruption kind '" + s + "'");
}

void validate_corruption(const CorruptionSpec& spec) {
  if (!spec.target.known()) {
    throw ConfigError("corruption needs a target stream");
  }
  if (!(spec.probability >= 0.0 && spec.probability <= 1.0)) {
    throw ConfigError("corruption probability must lie in [0, 1]");
  }
  if (spec.min_event_gap < 0 || spec.max_delay < 0) {
    throw ConfigError("corruption durations must be non-negative");
  }
  if (spec.max_payload > kMaxPayload) {
    throw ConfigError("corruption payload bound exceeds 1500 B");
  }
}

CorruptionLayer::CorruptionLayer(Simulator& sim, CorruptionSpec spec, StreamDescriptor target, RngStream rng,
                                 FrameFactory& factory, Forward forward, GroundTruthSink sink)
    : sim_(sim), spec_(spec), target_(std::move(target)), rng_(std::move(rng)), factory_(factory),
      forward_(std::move(forward)), sink_(std::move(sink)) {
  validate_corruption(spec_);
  if (target_.id != spec_.target) {
    throw ConfigError("corruption target does not match the bound stream");
  }
}

void CorruptionLayer::start(SimTime end) {
  end_ = end;
  if (spec_.kind == CorruptionKind::Injection) {
    schedule_injection(sim_.now());
  }
  if (spec_.kind == CorruptionKind::Reordering) {
    sim_.schedule(end, [this] { flush(); });
  }
}

bool CorruptionLayer::eligible() const {
  return !last_event_ || sim_.now() - *last_event_ >= spec_.min_event_gap;
}

void CorruptionLayer::record(std::vector<std::uint64_t> refs) {
  last_event_ = sim_.now();
  ++events_;
  if (sink_) {
    sink_(GroundTruthEvent{sim_.now(), spec_.target, spec_.kind, spec_.layer, std::move(refs)});
  }
}

void CorruptionLayer::schedule_injection(SimTime from) {
  const SimTime at = from + spec_.min_event_gap + rng_.uniform_int(0, spec_.max_delay);
  if (at <= end_) {
    sim_.schedule(at, [this] { inject(); });
  }
}

void CorruptionLayer::inject() {
  const auto payload = static_cast<std::uint32_t>(rng_.uniform_int(0, spec_.max_payload));
  const Frame f = factory_.make(target_, payload, sim_.now(), Provenance::Injected);
  record({f.uid});
  forward_(f);
  schedule_injection(sim_.now());
}

void CorruptionLayer::flush() {
  if (held_) {
    const Frame f = *held_;
    held_.reset();
    forward_(f);
  }
}

void CorruptionLayer::process(const Frame& frame) {
  if (frame.stream != spec_.target || frame.provenance == Provenance::Injected) {
    forward_(frame);
    return;
  }
  switch (spec_.kind) {
  case CorruptionKind::Injection:
    forward_(frame);
    return;
  case CorruptionKind::Elimination:
    if (eligible() && rng_.chance(spec_.probability)) {
      record({frame.uid});
      return;
    }
    forward_(frame);
    return;
  case CorruptionKind::Manipulation:
    if (eligible() && rng_.chance(spec_.probability)) {
      Frame m = frame;
      m.payload_size = static_cast<std::uint32_t>(rng_.uniform_int(0, spec_.max_payload));
      m.provenance = Provenance::Manipulated;
      record({m.uid});
      forward_(m);
      return;
    }
    forward_(frame);
    return;
  case CorruptionKind::Reordering:
    if (held_) {
      forward_(frame);
      flush();
      return;
    }
    if (eligible() && rng_.chance(spec_.probability)) {
      record({frame.uid});
      held_ = frame;
      return;
    }
    forward_(frame);
    return;
  case CorruptionKind::Rescheduling:
    if (eligible() && rng_.chance(spec_.probability)) {
      const Duration delay = rng_.uniform_int(0, spec_.max_delay);
      record({frame.uid});
      sim_.schedule_in(delay, [this, frame] { forward_(frame); });
      return;
    }
    forward_(frame);
    return;
  }
}

} // namespace ivn
