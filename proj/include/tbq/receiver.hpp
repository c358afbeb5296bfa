// Time-bin receivers: direct time-of-arrival tap, single unbalanced MZI,
// two-stage cascade for d = 4, the four-symbol setting sequence and a
// Poissonian click sampler.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tbq/core.hpp"

namespace tbq {

// Output pulses closer than this share a detection slot (and interfere).
inline constexpr double kSlotTolerance = 1e-12;

struct CascadeStage {
  double delay = 0;  // second-stage delay, nominally twice the first
  double phi1 = 0;   // first-stage phase
  double phi2 = 0;   // second-stage phase
};

struct ReceiverConfig {
  double delay = 2e-9;                // first uMZI delay, s
  double phase = 0;                   // fibre-stretcher phase, rad
  std::optional<CascadeStage> cascade;
  double tap_ratio = 0.1;             // fraction routed to the time-of-arrival arm
  double detector_efficiency = 1;
  double dark_count_rate = 0;         // Hz
  double time_gate = 200e-12;         // s

  void validate() const;
  double dark_probability() const;    // per gate
};

/// Expected photon numbers per (channel, output slot).
struct OutputDistribution {
  std::vector<double> slot_times;
  std::vector<std::string> channels;
  Eigen::MatrixXd mean_photons;  // channels x slots

  double total() const { return mean_photons.sum(); }
  Eigen::Index channel_index(const std::string& name) const;
  /// Slot whose time lies within `tolerance` of t, or -1.
  Eigen::Index slot_index(double t, double tolerance = kSlotTolerance) const;
  /// Sum over slots within +-half_width of t.
  double flux_near(const std::string& channel, double t, double half_width) const;
};

/// Linear slot functional: flux = Re tr(op * rho) per unit mean photon number.
struct SlotOperator {
  std::string channel;
  double time;
  CMat op;
};

/// Single-uMZI analysis with a time-of-arrival tap. `coherence` scales the
/// interference between distinct bins (V_src times the state's pulse
/// overlap is applied on top).
OutputDistribution detection_probabilities(const TimeBinState& state, const ReceiverConfig& rx,
                                           double v_src, double transmittance = 1,
                                           std::vector<std::string>* warnings = nullptr);

OutputDistribution detection_probabilities(const CMat& rho, std::span<const double> bin_times,
                                           double mean_photon, const ReceiverConfig& rx,
                                           double transmittance = 1);

/// Two cascaded uMZIs (delays rx.delay and cascade.delay) feeding two
/// detectors "det_a"/"det_b", plus the time-of-arrival tap.
OutputDistribution cascade_probabilities(const TimeBinState& state, const ReceiverConfig& rx,
                                         double v_src, double transmittance = 1);

OutputDistribution cascade_probabilities(const CMat& rho, std::span<const double> bin_times,
                                         double mean_photon, const ReceiverConfig& rx,
                                         double transmittance = 1);

/// Operators of the cascade arm (without tap, efficiency or loss scaling).
std::vector<SlotOperator> cascade_operators(std::span<const double> bin_times,
                                            const ReceiverConfig& rx);

struct MeasurementSetting {
  int id = 0;
  std::string label;
  std::vector<double> bin_phases;  // applied as exp(-i theta) before the cascade
};

struct FourSymbolSchedule {
  double source_rate = 0;
  double setting_rate = 0;
  std::array<MeasurementSetting, 4> settings;

  const MeasurementSetting& setting_for(std::uint64_t state_index) const {
    return settings[state_index % 4];
  }
  std::uint64_t states_in(double duration) const;
  std::uint64_t states_per_setting(double duration) const { return states_in(duration) / 4; }
};

/// S0 applies no phase; S_k applies `quarter_phase` to bins 0 and k.
FourSymbolSchedule four_symbol_schedule(double generation_rate, double quarter_phase = kPi / 2);

struct ClickHistogram {
  std::vector<double> slot_start;
  std::vector<double> slot_end;
  std::vector<std::string> channels;
  std::vector<std::vector<std::int64_t>> counts;  // [channel][slot]
  std::uint64_t total_states_sent = 0;

  std::int64_t count(const std::string& channel, std::size_t slot) const;
  std::int64_t total() const;
  /// Adds counts of a histogram with identical layout.
  void merge(const ClickHistogram& other);
};

/// Per slot: P(click) = 1 - exp(-flux) (1 - p_dark), counts drawn
/// independently for `shots` states.
ClickHistogram sample_clicks(const OutputDistribution& dist, std::uint64_t shots,
                             const ReceiverConfig& rx, std::uint64_t seed);

}  // namespace tbq
