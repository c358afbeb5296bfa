// DFB laser model: continuous-wave or gain-switched emission windows, the
// settling/off-time repetition bound and a scalar coherence visibility.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tbq {

enum class LaserMode { ContinuousWave, GainSwitched };

struct LaserConfig {
  LaserMode mode = LaserMode::ContinuousWave;
  double t_ss = 0;                    // settling time to steady state, s
  double t_off = 0;                   // cavity depletion time, s
  double coherence_visibility = 1;    // intra-window pairwise visibility V_src
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// One stretch of emission sharing a single optical phase. Carving is only
/// allowed in [steady_from, stop].
struct EmissionWindow {
  double start;
  double stop;
  double steady_from;
  double global_phase;
};

struct WindowRequest {
  double start;
  double stop;
};

std::vector<EmissionWindow> emission_schedule(const LaserConfig& config,
                                              std::span<const WindowRequest> requests);

/// (t_ss + t_off)^-1, +infinity when both are zero.
double max_repetition_rate(const LaserConfig& config);

/// V_src for pulses carved from the same window, 0 across windows.
double pairwise_visibility(const LaserConfig& config, bool same_window);

}  // namespace tbq
