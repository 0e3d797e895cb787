#pragma once

// Domain primitives shared by every module: time, identities, frames and
// Ethernet framing arithmetic.

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace ivn {

/// Simulation time in integer nanoseconds since simulation start.
using SimTime = std::int64_t;
/// Signed span of simulation time in nanoseconds.
using Duration = std::int64_t;
/// Link rate in bits per second.
using BitRate = std::int64_t;

constexpr Duration nanoseconds(std::int64_t v) { return v; }
constexpr Duration microseconds(std::int64_t v) { return v * 1'000; }
constexpr Duration milliseconds(std::int64_t v) { return v * 1'000'000; }
constexpr Duration seconds(std::int64_t v) { return v * 1'000'000'000; }

constexpr BitRate mbps(std::int64_t v) { return v * 1'000'000; }

/// Error raised for invalid scenario or component configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class FrameTooLarge : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Opaque stream identifier. Index into the scenario's stream table.
struct StreamId {
  std::uint32_t value = std::numeric_limits<std::uint32_t>::max();

  constexpr bool known() const { return value != std::numeric_limits<std::uint32_t>::max(); }
  friend constexpr auto operator<=>(StreamId, StreamId) = default;
};

inline constexpr StreamId kUnknownStream{};

using NodeId = std::int32_t;
using PortId = std::int32_t;

inline constexpr NodeId kBroadcast = -1;

/// 802.1Q priority code point, or untagged. The underlying value orders
/// strict-priority selection: P7 > ... > P0 > Untagged.
enum class Priority : std::int8_t {
  Untagged = -1,
  P0 = 0, P1, P2, P3, P4, P5, P6, P7
};

constexpr bool is_tagged(Priority p) { return p != Priority::Untagged; }
constexpr int rank_of(Priority p) { return static_cast<int>(p); }

Priority priority_from_int(int v);
std::string to_string(Priority p);

enum class Provenance : std::uint8_t { Regular, Injected, Manipulated };

std::string to_string(Provenance p);

inline constexpr std::uint32_t kMaxPayload = 1500;
inline constexpr std::uint32_t kMinFrame = 64;
inline constexpr std::uint32_t kUntaggedOverhead = 18;
inline constexpr std::uint32_t kTaggedOverhead = 22;
/// Preamble, start-of-frame delimiter and inter-frame gap.
inline constexpr std::uint32_t kDefaultFramingOverhead = 20;

/// On-wire frame size for a given payload. Throws FrameTooLarge above 1500 B.
std::uint32_t wire_size_of(std::uint32_t payload_size, bool tagged);

/// Serialization time of `wire_size` bytes plus framing overhead, rounded up
/// to whole nanoseconds.
Duration transmission_duration(std::uint32_t wire_size, BitRate link_rate,
                               std::uint32_t framing_overhead = kDefaultFramingOverhead);

/// A simulated Ethernet frame. Sequence numbers and uids are simulator
/// bookkeeping and are never consulted by the filtering pipeline.
struct Frame {
  std::uint64_t uid = 0;
  StreamId stream;
  Priority priority = Priority::Untagged;
  std::uint32_t payload_size = 0;
  std::uint64_t seq = 0;
  SimTime created_at = 0;
  NodeId src = 0;
  NodeId dst = kBroadcast;
  Provenance provenance = Provenance::Regular;

  std::uint32_t wire_size() const { return wire_size_of(payload_size, is_tagged(priority)); }
};

} // namespace ivn

template <>
struct std::hash<ivn::StreamId> {
  std::size_t operator()(ivn::StreamId s) const noexcept { return std::hash<std::uint32_t>{}(s.value); }
};
