// Time-bin entanglement from a pumped SPDC source: joint state, post-selected
// coincidence statistics, phase scans, fringe fits and CHSH estimates.

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "tbq/analysis.hpp"
#include "tbq/core.hpp"

namespace tbq {

struct EntangledState {
  TimeBinState pump;
  std::complex<double> c_ee;
  std::complex<double> c_ll;
  double pair_rate = 0;  // pairs/s

  /// Intrinsic fringe contrast 2 |c_EE| |c_LL|.
  double contrast() const { return 2.0 * std::abs(c_ee) * std::abs(c_ll); }
  /// arg c_LL - arg c_EE.
  double phase() const { return std::arg(c_ll) - std::arg(c_ee); }
};

EntangledState spdc_from_pump(const TimeBinState& pump, double pair_rate);

/// Channel pairs in the order (0,0), (0,1), (1,0), (1,1); channel 0 is the
/// constructive uMZI output.
inline constexpr std::array<std::array<int, 2>, 4> kChannelPairs{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};

/// 1/4 (1 + s_a s_b V contrast cos(phi_a + phi_b + phase)) for one channel pair.
double coincidence_probability(const EntangledState& state, double phi_a, double phi_b,
                               double v_setup, int channel_a = 0, int channel_b = 0);

std::array<double, 4> coincidence_probabilities(const EntangledState& state, double phi_a,
                                                double phi_b, double v_setup);

struct CoincidenceModel {
  double v_setup = 1;
  double pair_efficiency = 1;   // probability both photons of a pair are detected in the middle peak
  double accidental_rate = 0;   // flat coincidences/s per channel pair
};

struct CoincidencePoint {
  double phi_a = 0;
  double phi_b = 0;
  std::array<double, 4> counts{};
};

struct CoincidenceScan {
  std::vector<CoincidencePoint> points;
  double exposure = 0;  // s per point
};

/// Poisson coincidences at arbitrary (phi_a, phi_b) pairs.
CoincidenceScan measure_settings(const EntangledState& state,
                                 const std::vector<std::array<double, 2>>& settings,
                                 double exposure, const CoincidenceModel& model, std::uint64_t seed);

/// Scan of phi_b at fixed phi_a; the grid must cover a full period.
CoincidenceScan phase_scan(const EntangledState& state, const std::vector<double>& phi_b_grid,
                           double phi_a, double exposure, const CoincidenceModel& model,
                           std::uint64_t seed);

/// Expected counts (no sampling) of the same scan.
CoincidenceScan expected_scan(const EntangledState& state, const std::vector<double>& phi_b_grid,
                              double phi_a, double exposure, const CoincidenceModel& model);

struct ScanFit {
  std::array<VisibilityResult, 4> channels;
  double visibility = 0;      // count-weighted mean over the channel pairs
  double visibility_err = 0;
};

ScanFit fit_scan(const CoincidenceScan& scan);

/// 2 sqrt(2) V.
double chsh_s(double visibility);

struct ChshAngles {
  double a = 0;
  double a2 = kPi / 2;
  double b = -kPi / 4;
  double b2 = -3 * kPi / 4;

  /// Settings shifted so the correlator peaks at the state's phase.
  static ChshAngles for_state(const EntangledState& state);
  std::vector<std::array<double, 2>> settings() const { return {{a, b}, {a, b2}, {a2, b}, {a2, b2}}; }
};

struct ChshResult {
  double s = 0;
  double error = 0;
  std::array<double, 4> correlators{};  // E(a,b), E(a,b'), E(a',b), E(a',b')
};

/// S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')| with Poisson errors.
ChshResult chsh_from_scan(const CoincidenceScan& scan, const ChshAngles& angles = {});

}  // namespace tbq
