// Core value types for time-bin qudits: states, density matrices, pulse
// schedules and encoder hardware parameters.
//
// State algebra is templated on the real scalar; the rest of the library
// works with the `double` aliases declared at the bottom of this file.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tbq {

// Error taxonomy. The CLI maps each class onto a distinct exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or violated precondition on user input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Physically infeasible request (timing constraints, unreachable intensity).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Not enough data to form the requested statistic.
class StatisticsError : public Error {
 public:
  using Error::Error;
};

template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Two bin times closer than this are the same physical slot.
inline constexpr double kTimeTolerance = 1e-15;

// ---------------------------------------------------------------------------
// Amplitude helpers
// ---------------------------------------------------------------------------

/// alpha_i = sqrt(w_i / sum_j w_j) with zero phase.
template <typename Real>
CVector<Real> normalize_amplitudes(std::span<const Real> weights) {
  Real total = 0;
  for (Real w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) {
      throw ConfigError("amplitude weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0)) {
    throw ConfigError("vacuum state, no normalizable amplitudes");
  }
  CVector<Real> out(static_cast<Eigen::Index>(weights.size()));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = std::complex<Real>(std::sqrt(weights[i] / total), 0);
  }
  return out;
}

template <typename Real>
CVector<Real> normalize_amplitudes(const std::vector<Real>& weights) {
  return normalize_amplitudes<Real>(std::span<const Real>(weights));
}

/// <n> = kappa * sum_i w_i.
template <typename Real>
Real mean_photon(std::span<const Real> weights, Real kappa) {
  Real total = 0;
  for (Real w : weights) {
    if (!(w >= 0)) throw ConfigError("amplitude weights must be non-negative");
    total += w;
  }
  return kappa * total;
}

// ---------------------------------------------------------------------------
// BasicTimeBinState
// ---------------------------------------------------------------------------

/// Weak-coherent time-bin qudit: normalized amplitudes on a strictly
/// increasing grid of bin times plus the mean photon number of the pulse
/// train. The global phase is fixed so the first non-zero amplitude is real
/// and non-negative.
///
/// `pulse_overlap` is the temporal-mode overlap between distinct bins (1 for
/// identical pulse shapes); receivers multiply interference contrast by it.
template <typename Real>
class BasicTimeBinState {
 public:
  BasicTimeBinState(std::vector<Real> bin_times, CVector<Real> amplitudes, Real mean_photon,
                    Real pulse_overlap = 1)
      : bin_times_(std::move(bin_times)),
        amplitudes_(std::move(amplitudes)),
        mean_photon_(mean_photon),
        pulse_overlap_(pulse_overlap) {
    if (bin_times_.empty()) throw ConfigError("time-bin state needs at least one bin");
    if (static_cast<Eigen::Index>(bin_times_.size()) != amplitudes_.size()) {
      throw ConfigError("bin_times and amplitudes differ in length");
    }
    for (std::size_t i = 1; i < bin_times_.size(); ++i) {
      if (!(bin_times_[i] > bin_times_[i - 1])) {
        throw ConfigError("bin_times must be strictly increasing");
      }
    }
    if (!(mean_photon_ >= 0) || !std::isfinite(mean_photon_)) {
      throw ConfigError("mean photon number must be finite and >= 0");
    }
    if (!(pulse_overlap_ >= 0 && pulse_overlap_ <= 1)) {
      throw ConfigError("pulse_overlap must lie in [0, 1]");
    }
    const Real norm2 = amplitudes_.squaredNorm();
    if (std::abs(norm2 - Real(1)) > Real(1e-12)) {
      throw ConfigError("amplitudes are not normalized (sum |alpha|^2 = " +
                        std::to_string(static_cast<double>(norm2)) + ")");
    }
    canonicalize();
  }

  /// Convenience: uniform grid t_i = t0 + i * spacing.
  static BasicTimeBinState on_grid(Real t0, Real spacing, CVector<Real> amplitudes,
                                   Real mean_photon = 1) {
    std::vector<Real> times(static_cast<std::size_t>(amplitudes.size()));
    for (std::size_t i = 0; i < times.size(); ++i) times[i] = t0 + static_cast<Real>(i) * spacing;
    return BasicTimeBinState(std::move(times), std::move(amplitudes), mean_photon);
  }

  std::size_t dimension() const { return bin_times_.size(); }
  const std::vector<Real>& bin_times() const { return bin_times_; }
  const CVector<Real>& amplitudes() const { return amplitudes_; }
  Real mean_photon() const { return mean_photon_; }
  Real pulse_overlap() const { return pulse_overlap_; }
  bool is_vacuum() const { return mean_photon_ == 0; }

  /// Relative phase phi_i in the exp(-i phi_i) convention, phi_0 = 0.
  Real phase(std::size_t i) const { return -std::arg(amplitudes_(static_cast<Eigen::Index>(i))); }

  BasicTimeBinState with_mean_photon(Real n) const {
    return BasicTimeBinState(bin_times_, amplitudes_, n, pulse_overlap_);
  }

  /// Multiplies bin i by exp(-i phases[i]).
  BasicTimeBinState with_phases(std::span<const Real> phases) const {
    if (phases.size() != dimension()) throw ConfigError("phase list length differs from dimension");
    CVector<Real> a = amplitudes_;
    for (std::size_t i = 0; i < phases.size(); ++i) {
      a(static_cast<Eigen::Index>(i)) *= std::polar(Real(1), -phases[i]);
    }
    return BasicTimeBinState(bin_times_, std::move(a), mean_photon_, pulse_overlap_);
  }

  /// |psi><psi| with off-diagonal coherence scaled by `coherence`.
  CMatrix<Real> density(Real coherence = 1) const {
    CMatrix<Real> rho = amplitudes_ * amplitudes_.adjoint();
    if (coherence != Real(1)) {
      for (Eigen::Index i = 0; i < rho.rows(); ++i)
        for (Eigen::Index j = 0; j < rho.cols(); ++j)
          if (i != j) rho(i, j) *= coherence;
    }
    return rho;
  }

 private:
  void canonicalize() {
    for (Eigen::Index i = 0; i < amplitudes_.size(); ++i) {
      const Real mag = std::abs(amplitudes_(i));
      if (mag > Real(1e-300)) {
        amplitudes_ *= std::conj(amplitudes_(i)) / mag;
        amplitudes_(i) = std::complex<Real>(mag, 0);
        return;
      }
    }
  }

  std::vector<Real> bin_times_;
  CVector<Real> amplitudes_;
  Real mean_photon_;
  Real pulse_overlap_;
};

template <typename Real>
bool same_grid(const BasicTimeBinState<Real>& a, const BasicTimeBinState<Real>& b) {
  if (a.dimension() != b.dimension()) return false;
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    if (std::abs(a.bin_times()[i] - b.bin_times()[i]) > Real(kTimeTolerance)) return false;
  }
  return true;
}

/// |<psi|phi>|^2 for two pure states on the same grid.
template <typename Real>
Real fidelity_pure(const BasicTimeBinState<Real>& psi, const BasicTimeBinState<Real>& phi) {
  if (psi.dimension() != phi.dimension()) throw ConfigError("fidelity: dimension mismatch");
  if (!same_grid(psi, phi)) throw ConfigError("fidelity: bin grids differ");
  const std::complex<Real> overlap = psi.amplitudes().dot(phi.amplitudes());  // conj(a) . b
  return std::clamp(std::norm(overlap), Real(0), Real(1));
}

// ---------------------------------------------------------------------------
// BasicDensityMatrix
// ---------------------------------------------------------------------------

template <typename Real>
class BasicDensityMatrix {
 public:
  static constexpr Real kTolerance = Real(1e-10);

  explicit BasicDensityMatrix(CMatrix<Real> rho) : rho_(std::move(rho)) { validate(); }

  static BasicDensityMatrix pure(const BasicTimeBinState<Real>& psi, Real coherence = 1) {
    return BasicDensityMatrix(psi.density(coherence));
  }

  static BasicDensityMatrix maximally_mixed(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    return BasicDensityMatrix(CMatrix<Real>::Identity(n, n) / static_cast<Real>(d));
  }

  std::size_t dimension() const { return static_cast<std::size_t>(rho_.rows()); }
  const CMatrix<Real>& matrix() const { return rho_; }
  std::complex<Real> operator()(Eigen::Index i, Eigen::Index j) const { return rho_(i, j); }

  Real purity() const { return (rho_ * rho_).trace().real(); }

  Eigen::Matrix<Real, Eigen::Dynamic, 1> eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(rho_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

 private:
  void validate() const {
    if (rho_.rows() == 0 || rho_.rows() != rho_.cols()) {
      throw ConfigError("density matrix must be square and non-empty");
    }
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kTolerance) {
      throw ConfigError("density matrix is not Hermitian");
    }
    if (std::abs(rho_.trace() - std::complex<Real>(1, 0)) > kTolerance) {
      throw ConfigError("density matrix trace differs from 1");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(rho_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kTolerance) {
      throw ConfigError("density matrix has a negative eigenvalue");
    }
  }

  CMatrix<Real> rho_;
};

/// <psi|rho|psi>, tiny negative residue clamped to 0.
template <typename Real>
Real fidelity_mixed(const BasicDensityMatrix<Real>& rho, const BasicTimeBinState<Real>& ideal) {
  if (rho.dimension() != ideal.dimension()) throw ConfigError("fidelity: dimension mismatch");
  const auto& a = ideal.amplitudes();
  const Real f = a.dot(rho.matrix() * a).real();
  return std::clamp(f, Real(0), Real(1));
}

// ---------------------------------------------------------------------------
// Hardware parameters and the electrical drive
// ---------------------------------------------------------------------------

template <typename Real>
struct BasicHardwareConfig {
  Real v_pi = 1;                  // V
  Real delta_t_asymm = 0.1e-9;    // carving-stage Sagnac asymmetry, s
  Real delta_t_asymm2 = 3.5e-9;   // picking-stage fibre delay, s
  Real carving_width = 1e-9;      // electrical pulse width, s
  Real extinction_ratio = 1000;   // linear power ratio
  Real insertion_loss_db = 0;
  Real photon_scale = 0.3;        // kappa in sum a_i^2 * kappa = <n>
  Real rise_fall_time = 0;        // s

  void validate() const {
    if (!(v_pi > 0)) throw ConfigError("v_pi must be > 0");
    if (!(delta_t_asymm > 0)) throw ConfigError("delta_t_asymm must be > 0");
    if (!(delta_t_asymm2 >= 0)) throw ConfigError("delta_t_asymm2 must be >= 0");
    if (!(carving_width > 0)) throw ConfigError("carving_width must be > 0");
    if (!(extinction_ratio >= 1)) throw ConfigError("extinction_ratio must be >= 1");
    if (!(insertion_loss_db >= 0)) throw ConfigError("insertion_loss_db must be >= 0");
    if (!(photon_scale > 0)) throw ConfigError("photon_scale must be > 0");
    if (!(rise_fall_time >= 0)) throw ConfigError("rise_fall_time must be >= 0");
  }
};

template <typename Real>
struct BasicElectricalPulse {
  Real center;
  Real width;
  Real voltage;
};

/// Rectangular drive train: pulse i centred at t0 + i * spacing.
template <typename Real>
struct BasicElectricalPulseTrain {
  std::vector<BasicElectricalPulse<Real>> pulses;
  Real base_offset = 0;
  Real bin_spacing = 0;

  static BasicElectricalPulseTrain uniform(std::span<const Real> voltages, Real t0, Real spacing,
                                           Real width) {
    BasicElectricalPulseTrain train;
    train.base_offset = t0;
    train.bin_spacing = spacing;
    for (std::size_t i = 0; i < voltages.size(); ++i) {
      train.pulses.push_back({t0 + static_cast<Real>(i) * spacing, width, voltages[i]});
    }
    train.validate();
    return train;
  }

  static BasicElectricalPulseTrain uniform(const std::vector<Real>& voltages, Real t0, Real spacing,
                                           Real width) {
    return uniform(std::span<const Real>(voltages), t0, spacing, width);
  }

  std::size_t size() const { return pulses.size(); }
  Real width() const { return pulses.empty() ? Real(0) : pulses.front().width; }

  void validate() const {
    if (pulses.empty()) throw ConfigError("pulse train is empty");
    const Real w = pulses.front().width;
    if (!(w > 0)) throw ConfigError("pulse width must be > 0");
    for (std::size_t i = 0; i < pulses.size(); ++i) {
      if (std::abs(pulses[i].width - w) > Real(kTimeTolerance)) {
        throw ConfigError("pulse train widths must all be equal");
      }
      if (!std::isfinite(pulses[i].voltage)) throw ConfigError("pulse voltage must be finite");
      if (i > 0 && pulses[i].center - pulses[i - 1].center < w - Real(kTimeTolerance)) {
        throw ConfigError("pulse train overlaps: centres closer than the pulse width");
      }
    }
  }
};

using TimeBinState = BasicTimeBinState<double>;
using DensityMatrix = BasicDensityMatrix<double>;
using HardwareConfig = BasicHardwareConfig<double>;
using ElectricalPulse = BasicElectricalPulse<double>;
using ElectricalPulseTrain = BasicElectricalPulseTrain<double>;
using CVec = CVector<double>;
using CMat = CMatrix<double>;

inline double db_to_transmittance(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

/// Binary entropy in bits; h(0) = h(1) = 0.
inline double binary_entropy(double p) {
  if (p <= 0 || p >= 1) return 0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

}  // namespace tbq
