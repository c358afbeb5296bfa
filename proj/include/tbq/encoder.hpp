// Two-stage Sagnac encoder: pulse carving, pulse picking, timing
// feasibility and decoy intensity control.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "tbq/core.hpp"
#include "tbq/laser.hpp"

namespace tbq {

enum class TimingMode { General, ThreeState };

enum class TimingCondition {
  CcwAfterCw,          // every counter-clockwise component trails every clockwise one
  CcwBetweenPulses,    // each pair's components finish before the next pair starts
  ThreeStateSingleShot,
  None,
};

const char* to_string(TimingCondition c);

struct TimingVerdict {
  bool feasible = false;
  TimingCondition condition = TimingCondition::None;
  double max_rate = 0;  // Hz
  std::string report;

  bool admits(double rate) const { return feasible && rate < max_rate; }
};

// Relative tolerance for the three-state similarity condition, and the
// carving-width / asymmetry ratios below which carving is refused or warned.
inline constexpr double kThreeStateBand = 0.20;
inline constexpr double kMinCarvingRatio = 5.0;
inline constexpr double kWarnCarvingRatio = 10.0;

TimingVerdict check_timing(const ElectricalPulseTrain& train, const HardwareConfig& hw,
                           TimingMode mode);

struct CarvedPulsePair {
  double early_time;
  double late_time;
  double width;
  double weight;               // a^2 = sin^2(pi V / V_pi)
  double source_window_phase;
  double edge_skew;
};

/// sin^2(pi V / V_pi).
double carving_weight(double voltage, double v_pi);

std::vector<CarvedPulsePair> carve(const ElectricalPulseTrain& train, const HardwareConfig& hw,
                                   const EmissionWindow& window,
                                   TimingMode regime = TimingMode::General,
                                   std::vector<std::string>* warnings = nullptr);

enum class Keep { Early, Late, Neither };
enum class DriveMode { PiShiftCw, PiShiftCcw, MinusTrick };

struct PickStep {
  Keep keep = Keep::Early;
  double phase = 0;
  DriveMode drive = DriveMode::PiShiftCw;
};

struct PickSchedule {
  std::vector<PickStep> steps;

  /// Keeps the early pulse of every pair with the given phases.
  static PickSchedule keep_early(std::span<const double> phases);
  static PickSchedule keep_early(const std::vector<double>& phases) {
    return keep_early(std::span<const double>(phases));
  }
};

/// Builds the output qudit. Extinguished pulses leak weight/extinction_ratio
/// into their own time slot; a minus-trick fragment leaks 1/extinction_ratio
/// of its power into the orthogonal superposition.
TimeBinState pick(std::span<const CarvedPulsePair> pairs, const PickSchedule& schedule,
                  const HardwareConfig& hw);

/// check_timing + carve + pick. Throws InfeasibleError on a timing violation.
TimeBinState encode(const ElectricalPulseTrain& train, const PickSchedule& schedule,
                    const HardwareConfig& hw, const EmissionWindow& window,
                    TimingMode mode = TimingMode::General);

/// Single-pulse picking pattern producing (|E> - |L>)/sqrt(2) from two
/// carved pairs. Requires the three-state hardware condition and
/// rate < 1 / (5 delta_t_asymm).
PickSchedule encode_minus_fast(const HardwareConfig& hw, double rate);

/// Voltages realizing the given relative weights at mean photon number
/// `target`: V_i = (V_pi/pi) asin(sqrt(a_i^2)) with sum a_i^2 = target/kappa.
std::vector<double> set_decoy_intensity(std::span<const double> weights, double target,
                                        const HardwareConfig& hw);

}  // namespace tbq
