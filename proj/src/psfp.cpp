#include "ivn/psfp.hpp"

#include <algorithm>

namespace ivn {

std::string to_string(IndicatorKind k) {
  switch (k) {
  case IndicatorKind::GateDrop: return "GateDrop";
  case IndicatorKind::MeterDrop: return "MeterDrop";
  case IndicatorKind::UnknownDrop: return "UnknownDrop";
  case IndicatorKind::TdmaLoss: return "TdmaLoss";
  }
  return "?";
}

IndicatorKind indicator_kind_from_string(const std::string& s) {
  for (auto k : {IndicatorKind::GateDrop, IndicatorKind::MeterDrop, IndicatorKind::UnknownDrop,
                 IndicatorKind::TdmaLoss}) {
    if (to_string(k) == s) {
      return k;
    }
  }
  throw ConfigError("unknown indicator kind '" + s + "'");
}

bool StreamCounters::dominated_by(const StreamCounters& later) const {
  return arrived <= later.arrived && forwarded <= later.forwarded && dropped_gate <= later.dropped_gate &&
         dropped_meter <= later.dropped_meter && dropped_unknown <= later.dropped_unknown &&
         loss_events <= later.loss_events;
}

bool PortStats::conserved() const {
  return total.conserved() &&
         std::all_of(per_stream.begin(), per_stream.end(), [](const auto& kv) { return kv.second.conserved(); });
}

GateState gate_check(const StreamFilter& filter, SimTime now) {
  if (!filter.gate) {
    return GateState::Open;
  }
  return filter.gate->state_at(now);
}

Conformance meter_check(const MeterConfig& meter, MeterState& state, const Frame& frame, SimTime now) {
  if (const auto* size = std::get_if<MaxFrameSize>(&meter)) {
    return frame.wire_size() <= size->limit ? Conformance::Conform : Conformance::Nonconform;
  }
  if (const auto* cbm = std::get_if<CreditMeterConfig>(&meter)) {
    const Nanobits cap = bits_to_nanobits(cbm->burst_cap_bits);
    if (now > state.last_update) {
      const __int128 c = static_cast<__int128>(state.credit) +
                         static_cast<__int128>(cbm->idle_slope) * (now - state.last_update);
      state.credit = c > cap ? cap : static_cast<Nanobits>(c);
      state.last_update = now;
    }
    if (state.credit < 0) {
      return Conformance::Nonconform;
    }
    state.credit -= bits_to_nanobits(static_cast<std::int64_t>(frame.wire_size() + cbm->framing_overhead) * 8);
    return Conformance::Conform;
  }
  return Conformance::Conform;
}

std::uint32_t tdma_window_close(const TdmaLossConfig& loss, std::uint32_t window_pass_count) {
  return window_pass_count < loss.expected_per_window ? loss.expected_per_window - window_pass_count : 0;
}

GateControlList ingress_schedule(const GateControlList& egress, Duration arrival_delay, Duration early,
                                 Duration late) {
  const Duration cycle = egress.cycle();
  const Duration length = early + late;
  if (length <= 0 || length >= cycle) {
    throw ConfigError("ingress window length must lie in (0, cycle)");
  }
  std::vector<GateEntry> out;
  for (const auto& e : egress.entries()) {
    Duration open = (e.offset + arrival_delay - early) % cycle;
    if (open < 0) {
      open += cycle;
    }
    if (open + length <= cycle) {
      out.push_back({open, length});
    } else {
      out.push_back({open, cycle - open});
      out.push_back({0, open + length - cycle});
    }
  }
  std::sort(out.begin(), out.end(), [](const GateEntry& a, const GateEntry& b) { return a.offset < b.offset; });
  return GateControlList(cycle, std::move(out));
}

std::int64_t meter_cap_for(BitRate idle_slope, std::int64_t hi_credit_bits, std::uint32_t max_frame_wire,
                           BitRate link_rate, std::uint32_t framing_overhead) {
  const Duration d = transmission_duration(max_frame_wire, link_rate, framing_overhead);
  const std::int64_t refill = (idle_slope * d + 999'999'999) / 1'000'000'000;
  return hi_credit_bits + refill;
}

PsfpInstance::PsfpInstance(NodeId node, PortId port, PsfpPortConfig cfg, Sink sink)
    : node_(node), port_(port), cfg_(std::move(cfg)), sink_(std::move(sink)), state_(cfg_.filters.size()) {
  for (std::size_t i = 0; i < cfg_.filters.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg_.filters.size(); ++j) {
      if (cfg_.filters[i].match == cfg_.filters[j].match) {
        throw ConfigError("duplicate stream filter on one PSFP instance");
      }
    }
    if (cfg_.filters[i].loss_detector && !cfg_.filters[i].gate) {
      throw ConfigError("TDMA loss detection needs a scheduled gate");
    }
    if (cfg_.filters[i].loss_detector && !std::holds_alternative<StreamId>(cfg_.filters[i].match)) {
      throw ConfigError("TDMA loss detection needs a stream-identified filter");
    }
  }
}

std::optional<std::size_t> PsfpInstance::identify(const Frame& frame) const {
  for (std::size_t i = 0; i < cfg_.filters.size(); ++i) {
    const auto& m = cfg_.filters[i].match;
    if (const auto* id = std::get_if<StreamId>(&m)) {
      if (*id == frame.stream) {
        return i;
      }
    } else if (!is_tagged(frame.priority)) {
      return i;
    }
  }
  return std::nullopt;
}

void PsfpInstance::emit(IndicatorKind kind, StreamId stream, SimTime at, std::optional<std::uint64_t> frame_ref) {
  if (sink_) {
    sink_(IndicatorEvent{at, node_, port_, stream, kind, frame_ref});
  }
}

Verdict PsfpInstance::ingest(const Frame& frame, SimTime now) {
  const auto idx = identify(frame);
  const StreamId stream = idx ? frame.stream : kUnknownStream;
  auto& per = stats_.per_stream[stream];
  ++stats_.total.arrived;
  ++per.arrived;
  if (!idx) {
    ++stats_.total.dropped_unknown;
    ++per.dropped_unknown;
    emit(IndicatorKind::UnknownDrop, stream, now, frame.uid);
    return Verdict::UnknownDrop;
  }
  const auto& filter = cfg_.filters[*idx];
  auto& st = state_[*idx];
  if (gate_check(filter, now) == GateState::Closed) {
    ++stats_.total.dropped_gate;
    ++per.dropped_gate;
    st.window_drop = frame.uid;
    emit(IndicatorKind::GateDrop, stream, now, frame.uid);
    return Verdict::GateDrop;
  }
  if (filter.loss_detector) {
    ++st.window_passes;
    st.loss_armed = true;
  }
  if (meter_check(filter.meter, st.meter, frame, now) == Conformance::Nonconform) {
    ++stats_.total.dropped_meter;
    ++per.dropped_meter;
    st.window_drop = frame.uid;
    emit(IndicatorKind::MeterDrop, stream, now, frame.uid);
    return Verdict::MeterDrop;
  }
  ++stats_.total.forwarded;
  ++per.forwarded;
  return Verdict::Forwarded;
}

void PsfpInstance::start_loss_detection(Simulator& sim) {
  for (std::size_t i = 0; i < cfg_.filters.size(); ++i) {
    const auto& f = cfg_.filters[i];
    if (!f.loss_detector) {
      continue;
    }
    if (const auto close = f.gate->next_close_after(sim.now())) {
      sim.schedule(*close, [this, &sim, i] { on_window_close(sim, i); });
    }
  }
}

void PsfpInstance::on_window_close(Simulator& sim, std::size_t filter) {
  const auto& f = cfg_.filters[filter];
  auto& st = state_[filter];
  if (st.loss_armed) {
    const StreamId stream = std::get<StreamId>(f.match);
    const std::uint32_t missing = tdma_window_close(*f.loss_detector, st.window_passes);
    for (std::uint32_t k = 0; k < missing; ++k) {
      ++stats_.total.loss_events;
      ++stats_.per_stream[stream].loss_events;
      emit(IndicatorKind::TdmaLoss, stream, sim.now(), st.window_drop);
    }
  }
  st.window_passes = 0;
  st.window_drop.reset();
  if (const auto next = f.gate->next_close_after(sim.now())) {
    sim.schedule(*next, [this, &sim, filter] { on_window_close(sim, filter); });
  }
}

} // namespace ivn
