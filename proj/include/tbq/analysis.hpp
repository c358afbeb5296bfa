// Phase-series analytics: two-port phase estimation, Allan deviation,
// random-walk references, fringe visibility and source-quality metrics.

#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "tbq/core.hpp"
#include "tbq/receiver.hpp"

namespace tbq {

struct PhaseSeries {
  double tau0 = 0;              // sample interval, s
  std::vector<double> values;   // rad
};

/// Nearest-branch continuation of a wrapped phase sequence.
std::vector<double> unwrap(const std::vector<double>& wrapped);

struct PhaseEstimate {
  double phase = 0;           // rad, wrapped to (-pi, pi]
  double uncertainty = 0;     // rad
  double contrast = 0;        // fitted fringe amplitude
  bool indeterminate = false;
};

/// Source phase from two uMZI histograms recorded at rx.phase and
/// rx.phase + pi/2. The source phase is the extra phase on the late bin,
/// so the model state with_phases({0, phi_s}) is the hypothesis being
/// inverted.
PhaseEstimate estimate_phase(const ClickHistogram& in_phase, const ClickHistogram& quadrature,
                             const TimeBinState& model, const ReceiverConfig& rx);

// Indeterminate when the propagated uncertainty exceeds this.
inline constexpr double kMaxPhaseUncertainty = 0.5;

enum class AllanScaling {
  PerTau,     // 1 / (2 tau^2) as written for the phase-drift statistic
  PerSample,  // 1 / (2 tau0^2): second differences expressed per base interval
};

struct AllanPoint {
  double tau = 0;
  double sigma = 0;
  double ci_low = 0;
  double ci_high = 0;
  std::size_t terms = 0;
};

// Minimum number of second-difference terms at the largest tau.
inline constexpr std::size_t kMinAllanTerms = 10;

/// Overlapping estimator. tau must be an integer multiple of tau0.
std::vector<AllanPoint> allan_deviation(const PhaseSeries& series, const std::vector<double>& taus,
                                        AllanScaling scaling = AllanScaling::PerTau);

/// Octave-spaced taus (tau0 * 2^k) that still leave kMinAllanTerms terms.
std::vector<double> octave_taus(const PhaseSeries& series);

PhaseSeries random_walk_reference(double step_std, double interval, std::size_t length,
                                  std::uint64_t seed);

/// Least-squares log-log slope of sigma against tau.
double loglog_slope(const std::vector<AllanPoint>& curve);

struct VisibilityResult {
  double v = 0;
  double offset = 0;
  double amplitude = 0;
  double phase = 0;         // counts ~ offset + amplitude cos(setting - phase)
  double offset_err = 0;
  double amplitude_err = 0;
  double phase_err = 0;
  double v_err = 0;
  double rms_residual = 0;
};

/// Mean photons per gate behind `clicks` out of `shots` gates: inverts the
/// saturating click law p = 1 - exp(-n) so fringes are fitted in flux.
double clicks_to_flux(double clicks, double shots);

struct ScanPoint {
  double phase;
  double counts;
};

/// Linear least-squares fit of a + b cos + c sin over >= 5 points
/// covering a full period.
VisibilityResult fringe_visibility(const std::vector<ScanPoint>& scan);

struct SourceQuality {
  double p_c = 0;
  double q = 1;
};

using QualityMapping = std::function<SourceQuality(double v_randomized, double v_coherent)>;

/// p_c = v_randomized / v_coherent, q = 1 - coefficient * p_c (clamped to [0, 1]).
QualityMapping ratio_mapping(double coefficient);

SourceQuality source_quality(double v_randomized, double v_coherent, const QualityMapping& mapping);

struct StabilityComparison {
  std::vector<AllanPoint> encoder;
  std::vector<AllanPoint> umzi;
  bool encoder_at_or_below = false;
};

StabilityComparison compare_stability(const PhaseSeries& encoder, const PhaseSeries& umzi,
                                      const std::vector<double>& taus,
                                      AllanScaling scaling = AllanScaling::PerTau);

}  // namespace tbq
