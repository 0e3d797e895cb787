#include "ivn/matrix.hpp"

namespace ivn {

namespace {

constexpr CorruptionKind kKinds[] = {CorruptionKind::Elimination, CorruptionKind::Injection,
                                     CorruptionKind::Manipulation, CorruptionKind::Reordering,
                                     CorruptionKind::Rescheduling};

} // namespace

std::vector<MicroCase> micro_cases() {
  std::vector<MicroCase> out;
  for (auto layer : {Layer::Application, Layer::Link}) {
    for (auto pattern : {TrafficPattern::TimedControl, TrafficPattern::ShapedStream, TrafficPattern::CanTunnel}) {
      for (auto kind : kKinds) {
        out.push_back({pattern, kind, layer});
      }
    }
  }
  return out;
}

std::vector<MicroCase> micro_tdma_cases() {
  std::vector<MicroCase> out;
  for (const auto& c : micro_cases()) {
    if (c.pattern == TrafficPattern::TimedControl) {
      out.push_back(c);
    }
  }
  return out;
}

std::vector<MacroCase> macro_cases() {
  std::vector<MacroCase> out;
  for (auto attack : {TraceAttack::SshPatator, TraceAttack::WebBruteForce, TraceAttack::DosSlowloris}) {
    for (auto target : {MacroTarget::RadarControl, MacroTarget::CanTunnel, MacroTarget::CameraStream}) {
      out.push_back({attack, target});
    }
  }
  return out;
}

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

} // namespace ivn
