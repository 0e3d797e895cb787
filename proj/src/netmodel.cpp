#include "ivn/netmodel.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace ivn {

GateControlList::GateControlList(Duration cycle, std::vector<GateEntry> entries)
    : cycle_(cycle), entries_(std::move(entries)) {
  if (cycle_ <= 0) {
    throw ConfigError("gate control list cycle must be positive");
  }
  Duration prev_end = 0;
  for (const auto& e : entries_) {
    if (e.length <= 0) {
      throw ConfigError("gate entry length must be positive");
    }
    if (e.offset < prev_end) {
      throw ConfigError("gate entries must be sorted and non-overlapping");
    }
    if (e.offset + e.length > cycle_) {
      throw ConfigError("gate entry exceeds cycle");
    }
    prev_end = e.offset + e.length;
  }
  for (const auto& e : entries_) {
    if (!runs_.empty() && runs_.back().offset + runs_.back().length == e.offset) {
      runs_.back().length += e.length;
    } else {
      runs_.push_back(e);
    }
  }
  if (!runs_.empty() && runs_.front().offset == 0 && runs_.back().offset + runs_.back().length == cycle_) {
    if (runs_.size() == 1) {
      always_open_ = true;
    } else {
      runs_.back().length += runs_.front().length;
      runs_.erase(runs_.begin());
    }
  }
}

GateState GateControlList::state_at(SimTime t) const {
  if (entries_.empty()) {
    return GateState::Closed;
  }
  const Duration phase = t % cycle_;
  for (const auto& e : entries_) {
    if (phase < e.offset) {
      break;
    }
    if (phase < e.offset + e.length) {
      return GateState::Open;
    }
  }
  return GateState::Closed;
}

std::optional<GateControlList::Window> GateControlList::window_at_or_after(SimTime t) const {
  if (runs_.empty()) {
    return std::nullopt;
  }
  const Duration phase = t % cycle_;
  const SimTime cycle_start = t - phase;
  if (always_open_) {
    return Window{cycle_start, std::numeric_limits<SimTime>::max() / 4};
  }
  const auto& last = runs_.back();
  if (last.offset + last.length > cycle_ && phase < last.offset + last.length - cycle_) {
    return Window{cycle_start - cycle_ + last.offset, cycle_start - cycle_ + last.offset + last.length};
  }
  for (const auto& r : runs_) {
    if (phase < r.offset + r.length) {
      return Window{cycle_start + r.offset, cycle_start + r.offset + r.length};
    }
  }
  const auto& first = runs_.front();
  return Window{cycle_start + cycle_ + first.offset, cycle_start + cycle_ + first.offset + first.length};
}

std::optional<SimTime> GateControlList::earliest_fit(SimTime t, Duration need) const {
  const bool any_fits =
      always_open_ || std::any_of(runs_.begin(), runs_.end(), [need](const GateEntry& e) { return e.length >= need; });
  if (!any_fits) {
    return std::nullopt;
  }
  SimTime probe = t;
  for (;;) {
    const auto w = window_at_or_after(probe);
    const SimTime start = std::max(probe, w->open);
    if (w->close - start >= need) {
      return start;
    }
    probe = w->close;
  }
}

std::optional<SimTime> GateControlList::next_close_after(SimTime t) const {
  const auto w = window_at_or_after(t);
  if (!w || always_open_) {
    return std::nullopt;
  }
  return w->close;
}

CreditBasedShaper::CreditBasedShaper(CbsConfig cfg, BitRate port_rate) : cfg_(cfg), port_rate_(port_rate) {
  if (cfg_.idle_slope <= 0 || cfg_.idle_slope > port_rate_) {
    throw ConfigError("idle slope must lie in (0, port rate]");
  }
}

void CreditBasedShaper::clamp() {
  if (cfg_.hi_credit_bits) {
    credit_ = std::min(credit_, bits_to_nanobits(*cfg_.hi_credit_bits));
  }
}

void CreditBasedShaper::advance(SimTime now, bool backlogged) {
  if (transmitting_ || now <= last_) {
    return;
  }
  const __int128 gain = static_cast<__int128>(cfg_.idle_slope) * (now - last_);
  if (backlogged) {
    const __int128 c = credit_ + gain;
    credit_ = c > INT64_MAX / 2 ? INT64_MAX / 2 : static_cast<Nanobits>(c);
    clamp();
  } else if (credit_ < 0) {
    const __int128 c = credit_ + gain;
    credit_ = c > 0 ? 0 : static_cast<Nanobits>(c);
  } else {
    credit_ = 0;
  }
  last_ = now;
}

void CreditBasedShaper::begin_transmission(SimTime now) {
  transmitting_ = true;
  last_ = now;
}

void CreditBasedShaper::end_transmission(SimTime now, Duration duration, bool queue_empty) {
  credit_ += (cfg_.idle_slope - port_rate_) * duration;
  transmitting_ = false;
  last_ = now;
  if (queue_empty && credit_ > 0) {
    credit_ = 0;
  }
  clamp();
}

SimTime CreditBasedShaper::zero_credit_time(SimTime now) const {
  if (credit_ >= 0) {
    return now;
  }
  return now + (-credit_ + cfg_.idle_slope - 1) / cfg_.idle_slope;
}

std::vector<QueueConfig> default_queue_layout() {
  std::vector<QueueConfig> out;
  for (int p = 7; p >= -1; --p) {
    QueueConfig q;
    q.name = to_string(priority_from_int(p));
    q.rank = p;
    q.priorities = {priority_from_int(p)};
    out.push_back(std::move(q));
  }
  return out;
}

EgressPort::EgressPort(Simulator& sim, BitRate rate, std::uint32_t framing_overhead, std::vector<QueueConfig> queues,
                       Transmit transmit)
    : sim_(sim), rate_(rate), overhead_(framing_overhead), transmit_(std::move(transmit)) {
  if (queues.empty()) {
    throw ConfigError("egress port needs at least one queue");
  }
  queues_.reserve(queues.size());
  for (auto& cfg : queues) {
    Queue q;
    if (cfg.cbs) {
      q.cbs.emplace(*cfg.cbs, rate_);
    }
    q.cfg = std::move(cfg);
    queues_.push_back(std::move(q));
  }
  order_.resize(queues_.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(),
                   [this](std::size_t a, std::size_t b) { return queues_[a].cfg.rank > queues_[b].cfg.rank; });
}

std::size_t EgressPort::queue_index_for(const Frame& frame) const {
  for (std::size_t i = 0; i < queues_.size(); ++i) {
    const auto& s = queues_[i].cfg.streams;
    if (std::find(s.begin(), s.end(), frame.stream) != s.end()) {
      return i;
    }
  }
  for (std::size_t i = 0; i < queues_.size(); ++i) {
    const auto& p = queues_[i].cfg.priorities;
    if (std::find(p.begin(), p.end(), frame.priority) != p.end()) {
      return i;
    }
  }
  throw ConfigError("no egress queue accepts priority " + to_string(frame.priority));
}

std::size_t EgressPort::backlog() const {
  std::size_t n = 0;
  for (const auto& q : queues_) {
    n += q.frames.size();
  }
  return n;
}

const CreditBasedShaper* EgressPort::shaper(std::size_t queue) const {
  const auto& q = queues_.at(queue);
  return q.cbs ? &*q.cbs : nullptr;
}

void EgressPort::advance_shapers() {
  const SimTime now = sim_.now();
  for (auto& q : queues_) {
    if (q.cbs) {
      q.cbs->advance(now, !q.frames.empty());
    }
  }
}

void EgressPort::enqueue(const Frame& frame) {
  const std::size_t idx = queue_index_for(frame);
  auto& q = queues_[idx];
  advance_shapers();
  if (q.cfg.capacity && q.frames.size() >= *q.cfg.capacity) {
    ++overflow_drops_;
    return;
  }
  q.frames.push_back(frame);
  try_transmit();
}

std::optional<SimTime> EgressPort::eligible_from(const Queue& q, SimTime now) const {
  const Duration need = transmission_duration(q.frames.front().wire_size(), rate_, overhead_);
  SimTime t = now;
  if (q.cbs && !q.cbs->permits()) {
    t = q.cbs->zero_credit_time(now);
  }
  if (q.cfg.gate) {
    return q.cfg.gate->earliest_fit(t, need);
  }
  return t;
}

void EgressPort::wake_at(SimTime t) {
  if (pending_wake_ && *pending_wake_ <= t) {
    return;
  }
  pending_wake_ = t;
  sim_.schedule(t, [this, t] {
    if (pending_wake_ == t) {
      pending_wake_.reset();
    }
    try_transmit();
  });
}

void EgressPort::try_transmit() {
  if (busy_ || (medium_busy_ && medium_busy_())) {
    return;
  }
  const SimTime now = sim_.now();
  advance_shapers();
  std::optional<SimTime> earliest;
  for (std::size_t idx : order_) {
    auto& q = queues_[idx];
    if (q.frames.empty()) {
      continue;
    }
    const auto from = eligible_from(q, now);
    if (!from) {
      continue; // head frame can never fit a window
    }
    if (*from == now) {
      const Frame frame = q.frames.front();
      q.frames.pop_front();
      const Duration d = transmission_duration(frame.wire_size(), rate_, overhead_);
      busy_ = true;
      if (q.cbs) {
        q.cbs->begin_transmission(now);
      }
      ++transmitted_;
      sim_.schedule_in(d, [this, idx, d] { finish_transmission(idx, d); });
      transmit_(frame);
      return;
    }
    earliest = earliest ? std::min(*earliest, *from) : *from;
  }
  if (earliest) {
    wake_at(*earliest);
  }
}

void EgressPort::finish_transmission(std::size_t queue, Duration duration) {
  busy_ = false;
  advance_shapers();
  auto& q = queues_[queue];
  if (q.cbs) {
    q.cbs->end_transmission(sim_.now(), duration, q.frames.empty());
  }
  try_transmit();
}

SimTime deliver(const LinkConfig& link, const Frame& frame, SimTime depart) {
  return depart + transmission_duration(frame.wire_size(), link.rate, link.framing_overhead) +
         link.propagation_delay;
}

LinkTransmitter::LinkTransmitter(Simulator& sim, LinkConfig cfg, Receive receive)
    : sim_(sim), cfg_(cfg), receive_(std::move(receive)) {}

void LinkTransmitter::send(const Frame& frame) {
  if (busy_) {
    fifo_.push_back(frame);
    return;
  }
  start(frame);
}

void LinkTransmitter::start(const Frame& frame) {
  busy_ = true;
  ++sent_;
  const SimTime now = sim_.now();
  const Duration d = transmission_duration(frame.wire_size(), cfg_.rate, cfg_.framing_overhead);
  sim_.schedule(now + d, [this] {
    busy_ = false;
    if (!fifo_.empty()) {
      Frame next = fifo_.front();
      fifo_.pop_front();
      start(next);
    } else if (on_idle_) {
      on_idle_();
    }
  });
  sim_.schedule(deliver(cfg_, frame, now), [this, frame] { receive_(frame); });
}

} // namespace ivn
