#include "ivn/core.hpp"

#include <algorithm>

namespace ivn {

Priority priority_from_int(int v) {
  if (v < -1 || v > 7) {
    throw ConfigError("priority out of range: " + std::to_string(v));
  }
  return static_cast<Priority>(v);
}

std::string to_string(Priority p) {
  if (p == Priority::Untagged) {
    return "untagged";
  }
  return "P" + std::to_string(rank_of(p));
}

std::string to_string(Provenance p) {
  switch (p) {
  case Provenance::Regular: return "regular";
  case Provenance::Injected: return "injected";
  case Provenance::Manipulated: return "manipulated";
  }
  return "?";
}

std::uint32_t wire_size_of(std::uint32_t payload_size, bool tagged) {
  if (payload_size > kMaxPayload) {
    throw FrameTooLarge("payload of " + std::to_string(payload_size) + " B exceeds 1500 B");
  }
  const std::uint32_t overhead = tagged ? kTaggedOverhead : kUntaggedOverhead;
  return std::max(kMinFrame, payload_size + overhead);
}

Duration transmission_duration(std::uint32_t wire_size, BitRate link_rate, std::uint32_t framing_overhead) {
  if (link_rate <= 0) {
    throw ConfigError("link rate must be positive");
  }
  // bits * 1e9 / rate, rounded up. bits <= ~12.5k so the product fits easily.
  const std::int64_t bits = static_cast<std::int64_t>(wire_size + framing_overhead) * 8;
  const std::int64_t num = bits * 1'000'000'000LL;
  return (num + link_rate - 1) / link_rate;
}

} // namespace ivn
