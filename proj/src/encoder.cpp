#include "tbq/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tbq {

const char* to_string(TimingCondition c) {
  switch (c) {
    case TimingCondition::CcwAfterCw: return "ccw-after-cw";
    case TimingCondition::CcwBetweenPulses: return "ccw-between-pulses";
    case TimingCondition::ThreeStateSingleShot: return "three-state";
    case TimingCondition::None: return "none";
  }
  return "none";
}

namespace {

bool within_band(double a, double b, double c) {
  const double mean = (a + b + c) / 3.0;
  const double tol = kThreeStateBand * mean;
  return std::abs(a - mean) <= tol && std::abs(b - mean) <= tol && std::abs(c - mean) <= tol;
}

std::string seconds(double s) {
  std::ostringstream os;
  os << s * 1e9 << " ns";
  return os.str();
}

}  // namespace

TimingVerdict check_timing(const ElectricalPulseTrain& train, const HardwareConfig& hw,
                           TimingMode mode) {
  hw.validate();
  train.validate();
  const double dt_c = train.width();
  const double dt2 = hw.delta_t_asymm2;

  TimingVerdict v;
  if (mode == TimingMode::ThreeState) {
    v.max_rate = 1.0 / (5.0 * hw.delta_t_asymm);
    if (within_band(dt2, hw.delta_t_asymm, dt_c)) {
      v.feasible = true;
      v.condition = TimingCondition::ThreeStateSingleShot;
      v.report = "three-state condition holds";
    } else {
      v.report = "three-state condition violated: delta_t_asymm2 (" + seconds(dt2) +
                 "), delta_t_asymm (" + seconds(hw.delta_t_asymm) + ") and carving width (" +
                 seconds(dt_c) + ") are not within 20% of their mean";
    }
    return v;
  }

  const auto& p = train.pulses;
  const double span = p.back().center - p.front().center;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < p.size(); ++i) min_gap = std::min(min_gap, p[i].center - p[i - 1].center);

  v.max_rate = 1.0 / (span + dt_c + dt2 + hw.delta_t_asymm);
  if (dt2 > span + dt_c) {
    v.feasible = true;
    v.condition = TimingCondition::CcwAfterCw;
    v.report = "delta_t_asymm2 > span + carving width";
  } else if (dt2 + dt_c < min_gap) {
    v.feasible = true;
    v.condition = TimingCondition::CcwBetweenPulses;
    v.report = "delta_t_asymm2 + carving width < bin spacing";
  } else {
    v.report = "infeasible: need delta_t_asymm2 (" + seconds(dt2) + ") > " + seconds(span + dt_c) +
               " or delta_t_asymm2 + carving width (" + seconds(dt2 + dt_c) + ") < " +
               seconds(min_gap);
  }
  return v;
}

double carving_weight(double voltage, double v_pi) {
  const double s = std::sin(kPi * voltage / v_pi);
  return s * s;
}

std::vector<CarvedPulsePair> carve(const ElectricalPulseTrain& train, const HardwareConfig& hw,
                                   const EmissionWindow& window, TimingMode regime,
                                   std::vector<std::string>* warnings) {
  hw.validate();
  for (std::size_t i = 1; i < train.pulses.size(); ++i) {
    if (train.pulses[i].center - train.pulses[i - 1].center <
        train.pulses[i].width - kTimeTolerance) {
      throw InfeasibleError("carving collision: pulses " + std::to_string(i - 1) + " and " +
                            std::to_string(i) + " overlap");
    }
  }
  train.validate();

  const double w = train.width();
  if (regime == TimingMode::General) {
    const double ratio = w / hw.delta_t_asymm;
    if (ratio < kMinCarvingRatio) {
      throw InfeasibleError("carving width must be at least 5x delta_t_asymm (ratio " +
                            std::to_string(ratio) + ")");
    }
    if (ratio < kWarnCarvingRatio && warnings) {
      warnings->push_back("carving width is only " + std::to_string(ratio) +
                          "x delta_t_asymm; pulse pairs may distort");
    }
  }

  std::vector<CarvedPulsePair> pairs;
  pairs.reserve(train.size());
  for (const auto& pulse : train.pulses) {
    const double lo = pulse.center - 0.5 * w;
    const double hi = pulse.center + 0.5 * w;
    if (lo < window.steady_from - kTimeTolerance || hi > window.stop + kTimeTolerance) {
      throw InfeasibleError("carving during transient: pulse at " + seconds(pulse.center) +
                            " leaves the steady-state emission window");
    }
    pairs.push_back({lo, hi, hw.delta_t_asymm, carving_weight(pulse.voltage, hw.v_pi),
                     window.global_phase, hw.rise_fall_time / w});
  }
  return pairs;
}

PickSchedule PickSchedule::keep_early(std::span<const double> phases) {
  PickSchedule s;
  for (double ph : phases) s.steps.push_back({Keep::Early, ph, DriveMode::PiShiftCw});
  return s;
}

namespace {

struct Pulse {
  double time;
  std::complex<double> amplitude;
  bool kept;
};

}  // namespace

TimeBinState pick(std::span<const CarvedPulsePair> pairs, const PickSchedule& schedule,
                  const HardwareConfig& hw) {
  hw.validate();
  if (schedule.steps.size() != pairs.size()) {
    throw ConfigError("pick schedule length differs from the number of carved pairs");
  }
  for (const auto& s : schedule.steps) {
    if (!std::isfinite(s.phase)) throw ConfigError("pick phase must be finite");
  }

  const double leak_fraction = 1.0 / hw.extinction_ratio;
  std::vector<Pulse> pulses;
  double kept_weight = 0;
  bool kept_early = false;
  bool kept_late = false;
  double max_skew = 0;

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    const auto& step = schedule.steps[i];
    const auto window = std::polar(1.0, pair.source_window_phase);
    max_skew = std::max(max_skew, pair.edge_skew);

    if (step.drive == DriveMode::MinusTrick) {
      if (i + 1 >= pairs.size() || schedule.steps[i + 1].drive != DriveMode::MinusTrick) {
        throw ConfigError("minus-trick steps come in consecutive pairs");
      }
      const auto& next = pairs[i + 1];
      if (std::abs(pair.weight - next.weight) > 1e-9) {
        throw ConfigError("minus-trick pairs need equal carving weights");
      }
      const double a = std::sqrt(pair.weight);
      const double good = std::sqrt(1.0 - leak_fraction);
      const double bad = std::sqrt(leak_fraction);
      const auto global = std::polar(1.0, -step.phase) * window;
      const double t_first = step.keep == Keep::Late ? pair.late_time : pair.early_time;
      const double t_second = schedule.steps[i + 1].keep == Keep::Late ? next.late_time : next.early_time;
      pulses.push_back({t_first, a * (good + bad) * global, true});
      pulses.push_back({t_second, a * (bad - good) * global, true});
      kept_weight += 2.0 * pair.weight;
      kept_early = true;
      ++i;
      continue;
    }

    const double a = std::sqrt(pair.weight);
    const double leak = std::sqrt(pair.weight * leak_fraction);
    const auto kept = a * std::polar(1.0, -step.phase) * window;
    switch (step.keep) {
      case Keep::Early:
        pulses.push_back({pair.early_time, kept, true});
        if (leak > 0) pulses.push_back({pair.late_time, leak * window, false});
        kept_weight += pair.weight;
        kept_early = true;
        break;
      case Keep::Late:
        pulses.push_back({pair.late_time, kept, true});
        if (leak > 0) pulses.push_back({pair.early_time, leak * window, false});
        kept_weight += pair.weight;
        kept_late = true;
        break;
      case Keep::Neither:
        if (leak > 0) {
          pulses.push_back({pair.early_time, leak * window, false});
          pulses.push_back({pair.late_time, leak * window, false});
        }
        break;
    }
  }

  std::stable_sort(pulses.begin(), pulses.end(),
                   [](const Pulse& a, const Pulse& b) { return a.time < b.time; });
  std::vector<double> times;
  std::vector<std::complex<double>> amps;
  for (const auto& p : pulses) {
    if (!times.empty() && std::abs(p.time - times.back()) <= 1e-13) {
      amps.back() += p.amplitude;
    } else {
      times.push_back(p.time);
      amps.push_back(p.amplitude);
    }
  }
  if (times.empty()) throw ConfigError("pick produced no pulses");

  double power = 0;
  for (const auto& a : amps) power += std::norm(a);
  CVec alpha(static_cast<Eigen::Index>(amps.size()));
  if (power > 0) {
    for (std::size_t i = 0; i < amps.size(); ++i) alpha(static_cast<Eigen::Index>(i)) = amps[i] / std::sqrt(power);
  } else {
    alpha.setZero();
    alpha(0) = 1.0;
  }
  const double overlap = (kept_early && kept_late) ? std::max(0.0, 1.0 - max_skew) : 1.0;
  return TimeBinState(std::move(times), std::move(alpha), hw.photon_scale * kept_weight, overlap);
}

TimeBinState encode(const ElectricalPulseTrain& train, const PickSchedule& schedule,
                    const HardwareConfig& hw, const EmissionWindow& window, TimingMode mode) {
  const auto verdict = check_timing(train, hw, mode);
  if (!verdict.feasible) throw InfeasibleError(verdict.report);
  const auto pairs = carve(train, hw, window, mode);
  return pick(pairs, schedule, hw);
}

PickSchedule encode_minus_fast(const HardwareConfig& hw, double rate) {
  hw.validate();
  if (!within_band(hw.delta_t_asymm2, hw.delta_t_asymm, hw.carving_width)) {
    throw InfeasibleError(
        "minus-trick needs delta_t_asymm2, delta_t_asymm and carving width within 20% of each other");
  }
  const double bound = 1.0 / (5.0 * hw.delta_t_asymm);
  if (!(rate < bound)) {
    throw InfeasibleError("repetition rate " + std::to_string(rate) +
                          " Hz exceeds the three-state bound " + std::to_string(bound) + " Hz");
  }
  PickSchedule s;
  s.steps.push_back({Keep::Early, 0.0, DriveMode::MinusTrick});
  s.steps.push_back({Keep::Early, kPi, DriveMode::MinusTrick});
  return s;
}

std::vector<double> set_decoy_intensity(std::span<const double> weights, double target,
                                        const HardwareConfig& hw) {
  hw.validate();
  if (!(target >= 0)) throw ConfigError("target mean photon number must be >= 0");
  std::vector<double> volts(weights.size(), 0.0);
  if (target == 0) return volts;

  double total = 0;
  double largest = 0;
  for (double w : weights) {
    if (!(w >= 0)) throw ConfigError("relative weights must be non-negative");
    total += w;
    largest = std::max(largest, w);
  }
  if (!(total > 0)) throw ConfigError("vacuum state, no normalizable amplitudes");

  const double scale = target / hw.photon_scale / total;
  if (largest * scale > 1.0 + 1e-12) {
    const double reachable = hw.photon_scale * total / largest;
    throw InfeasibleError("target <n> = " + std::to_string(target) +
                          " unreachable; max achievable is " + std::to_string(reachable));
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double a2 = std::min(1.0, weights[i] * scale);
    volts[i] = hw.v_pi / kPi * std::asin(std::sqrt(a2));
  }
  return volts;
}

}  // namespace tbq
