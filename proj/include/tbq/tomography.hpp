// d = 4 time-bin tomography: measurement operators from the four-symbol
// cascade settings, maximum-likelihood and linear-inversion
// reconstruction, and the reduced overlap estimator.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tbq/core.hpp"
#include "tbq/receiver.hpp"

namespace tbq {

struct TomographyOutcome {
  std::string channel;
  double time = 0;
  CMat op;  // flux per shot per unit mean photon: Re tr(op rho)
};

struct SettingDefinition {
  int id = 0;
  std::string label;
  std::vector<double> bin_phases;
  std::vector<TomographyOutcome> outcomes;

  /// Sum of the outcome operators (the acceptance of this setting).
  CMat acceptance() const;
};

struct TomographyDataset {
  std::vector<SettingDefinition> settings;
  std::vector<double> shots;                 // per setting
  std::vector<std::vector<double>> counts;   // [setting][outcome]

  void validate() const;
  double total_counts() const;
};

/// Time-of-arrival projectors (tap weighted) plus every cascade slot of
/// both detectors under each setting's bin phases.
std::vector<SettingDefinition> build_operators(const FourSymbolSchedule& schedule,
                                               const ReceiverConfig& rx,
                                               std::span<const double> bin_times);

/// Single setting whose brightest cascade slot projects onto `ideal`; the
/// bin phases are solved from the receiver's cascade phases.
SettingDefinition overlap_setting(const TimeBinState& ideal, const ReceiverConfig& rx, int id = 100);

/// shots * mean_photon * Re tr(op rho) per outcome (weak-signal regime).
std::vector<std::vector<double>> expected_counts(const std::vector<SettingDefinition>& settings,
                                                 const CMat& rho, double shots, double mean_photon);

/// Poisson draw of expected_counts.
std::vector<std::vector<double>> sample_counts(const std::vector<std::vector<double>>& expected,
                                               std::uint64_t seed);

TomographyDataset make_dataset(std::vector<SettingDefinition> settings,
                               std::vector<std::vector<double>> counts, double shots);

/// Multinomial log-likelihood sum_j n_j log(p_j), p_j = N_s tr(F_j rho) / tr(G rho).
double log_likelihood(const TomographyDataset& data, const CMat& rho);

/// Rank of the outcome operators over the d^2-dimensional Hermitian space.
std::size_t operator_rank(const TomographyDataset& data);

struct MleOptions {
  std::size_t max_iterations = 10000;
  double tolerance = 1e-10;  // log-likelihood gain per count
};

struct MleResult {
  DensityMatrix rho;
  bool converged = false;
  std::size_t iterations = 0;
  double log_likelihood = 0;
  double gradient_norm = 0;
  std::vector<double> trace;  // log-likelihood after every accepted iteration
};

/// Diluted R rho R fixed-point iteration, started at I/d.
MleResult mle_reconstruct(const TomographyDataset& data, const MleOptions& options = {});

/// Least-squares inversion, clipped to the PSD cone and renormalized.
DensityMatrix linear_inversion(const TomographyDataset& data);

struct OverlapEstimate {
  double fidelity = 0;
  double error = 0;
  bool assumes_purity = false;  // set when the reference acceptance is not flat
};

/// F from the post-selected rate of the setting that projects onto `ideal`.
OverlapEstimate overlap_estimate(const TomographyDataset& data, const TimeBinState& ideal);

/// Permutes bin labels of every operator: new index perm[i] <- old index i.
TomographyDataset permute_bins(const TomographyDataset& data, const std::vector<int>& perm);

}  // namespace tbq
