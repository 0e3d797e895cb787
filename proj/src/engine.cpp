#include "ivn/engine.hpp"

#include <bit>

namespace ivn {

void Simulator::schedule(SimTime at, Action action) {
  if (at < now_) {
    throw CausalityViolation("event at " + std::to_string(at) + " ns scheduled at clock " + std::to_string(now_));
  }
  queue_.push(Event{at, scheduled_++, std::move(action)});
}

void Simulator::run_until(SimTime end) {
  while (!queue_.empty() && queue_.top().at <= end) {
    // The action may schedule further events, so pop before running it.
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    now_ = ev.at;
    ++executed_;
    ev.action();
  }
  if (end > now_) {
    now_ = end;
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace

std::uint64_t label_hash(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::string_view label) {
  std::uint64_t x = seed ^ label_hash(label);
  for (auto& word : s_) {
    word = splitmix64(x);
  }
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) {
    throw std::invalid_argument("uniform_int: lo > hi");
  }
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span == ~0ULL) {
    return static_cast<std::int64_t>(next_u64());
  }
  const std::uint64_t range = span + 1;
  // Rejection sampling on the largest multiple of range.
  const std::uint64_t limit = ~0ULL - (~0ULL % range);
  std::uint64_t v = next_u64();
  while (v >= limit) {
    v = next_u64();
  }
  return lo + static_cast<std::int64_t>(v % range);
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  if (lo > hi) {
    throw std::invalid_argument("uniform: lo > hi");
  }
  return lo + (hi - lo) * uniform01();
}

} // namespace ivn
