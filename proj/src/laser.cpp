#include "tbq/laser.hpp"

#include <limits>
#include <random>

#include "tbq/core.hpp"
#include "tbq/random.hpp"

namespace tbq {

void LaserConfig::validate() const {
  if (!(t_ss >= 0)) throw ConfigError("t_ss must be >= 0");
  if (!(t_off >= 0)) throw ConfigError("t_off must be >= 0");
  if (!(coherence_visibility >= 0 && coherence_visibility <= 1)) {
    throw ConfigError("coherence_visibility must lie in [0, 1]");
  }
}

std::vector<EmissionWindow> emission_schedule(const LaserConfig& config,
                                              std::span<const WindowRequest> requests) {
  config.validate();
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (config.mode == LaserMode::ContinuousWave) {
    return {EmissionWindow{-inf, inf, -inf, 0.0}};
  }

  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (!(requests[i].stop > requests[i].start)) {
      throw ConfigError("emission window must have stop > start");
    }
    if (i > 0) {
      const double gap = requests[i].start - requests[i - 1].stop;
      if (gap < 0) throw ConfigError("emission windows overlap or are out of order");
      if (gap < config.t_off) {
        throw InfeasibleError("insufficient cavity depletion: phases would correlate");
      }
    }
  }

  Rng rng(derive_seed(config.rng_seed, "laser:phase"));
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::vector<EmissionWindow> windows;
  windows.reserve(requests.size());
  for (const auto& r : requests) {
    windows.push_back({r.start, r.stop, r.start + config.t_ss, phase(rng)});
  }
  return windows;
}

double max_repetition_rate(const LaserConfig& config) {
  config.validate();
  const double period = config.t_ss + config.t_off;
  if (period <= 0) return std::numeric_limits<double>::infinity();
  return 1.0 / period;
}

double pairwise_visibility(const LaserConfig& config, bool same_window) {
  config.validate();
  return same_window ? config.coherence_visibility : 0.0;
}

}  // namespace tbq
