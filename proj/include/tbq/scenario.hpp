// Scenario files: strict YAML parsing into validated configuration
// sections, with every applied default recorded for the run manifest.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbq/analysis.hpp"
#include "tbq/core.hpp"
#include "tbq/encoder.hpp"
#include "tbq/entanglement.hpp"
#include "tbq/laser.hpp"
#include "tbq/qkd.hpp"
#include "tbq/receiver.hpp"

namespace tbq {

struct EncodeSection {
  std::vector<double> voltages{0.25, 0.25};
  std::vector<double> phases{0.0, 0.0};
  double spacing = 2e-9;
  TimingMode mode = TimingMode::General;
  double rep_rate = 100e6;
};

struct QkdSection {
  QkdConfig config;
  double duration = 0.1;         // Monte-Carlo session length, s
};

struct SweepSection {
  SweepAxis axis = SweepAxis::RepRate;
  std::vector<double> values{100e6, 125e6, 200e6};
  double duration = 0.01;
};

struct AllanSection {
  double interval = 0.1;           // s
  std::size_t length = 4096;
  double drift_step = 5e-3;        // rad per interval for the uMZI source model
  double shots = 1e5;              // per interval and quadrature
  double mean_photon = 0.1;
  AllanScaling scaling = AllanScaling::PerTau;
};

struct RandomizationSection {
  double shots = 1e5;              // per phase point
  std::size_t phase_points = 24;
  double mean_photon = 0.1;
  double v_cw = 0.987;
  double v_gain_switched = 0.924;
  double quality_coefficient = 4;  // q = 1 - c p_c
  bool quality_mapping_set = false;
};

struct TomographySection {
  double generation_rate = 100e6;
  double shots = 1e6;              // per setting
  double mean_photon = 1.0;
  double phase_error = 0;          // rad added to every pi/2 setting phase
  double coherence = 1;            // off-diagonal scaling of the prepared states
  double overlap_shots = 1e6;
};

struct EntanglementSection {
  double pump_phase = 0;
  double pump_early_weight = 0.5;
  double pair_rate = 1e4;
  double v_setup = 0.96;
  double pair_efficiency = 1;
  double accidental_rate = 0;
  double exposure = 10;            // s per scan point
  std::size_t phase_points = 24;
  double phi_a = 0;
  double chsh_exposure = 100;      // s per CHSH setting
};

struct Scenario {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::string source;              // file path or "<string>"

  LaserConfig laser;
  HardwareConfig hardware;
  ReceiverConfig receiver;

  std::optional<EncodeSection> encode;
  std::optional<QkdSection> qkd;
  std::optional<SweepSection> sweep;
  std::optional<AllanSection> allan;
  std::optional<RandomizationSection> randomization;
  std::optional<TomographySection> tomography;
  std::optional<EntanglementSection> entanglement;

  std::vector<std::string> applied_defaults;  // dotted keys filled from the schema
  nlohmann::json resolved;                    // every field after defaults
};

/// Overrides are "section.key=value" with YAML-typed values.
Scenario parse_scenario(const std::filesystem::path& path,
                        const std::vector<std::string>& overrides = {});
Scenario parse_scenario_string(const std::string& text,
                               const std::vector<std::string>& overrides = {});

}  // namespace tbq
