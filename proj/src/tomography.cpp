#include "tbq/tomography.hpp"

#include <cmath>
#include <random>

#include "tbq/random.hpp"

namespace tbq {

CMat SettingDefinition::acceptance() const {
  if (outcomes.empty()) throw ConfigError("setting " + label + " has no outcomes");
  CMat g = CMat::Zero(outcomes.front().op.rows(), outcomes.front().op.cols());
  for (const auto& o : outcomes) g += o.op;
  return g;
}

void TomographyDataset::validate() const {
  if (settings.empty()) throw ConfigError("tomography dataset has no settings");
  if (shots.size() != settings.size() || counts.size() != settings.size()) {
    throw ConfigError("tomography dataset: settings, shots and counts differ in length");
  }
  const auto d = settings.front().outcomes.front().op.rows();
  for (std::size_t s = 0; s < settings.size(); ++s) {
    if (counts[s].size() != settings[s].outcomes.size()) {
      throw ConfigError("tomography dataset: counts do not match outcomes of " + settings[s].label);
    }
    if (!(shots[s] > 0)) throw ConfigError("tomography dataset: shots must be > 0");
    for (double n : counts[s]) {
      if (!(n >= 0)) throw ConfigError("tomography dataset: counts must be >= 0");
    }
    for (const auto& o : settings[s].outcomes) {
      if (o.op.rows() != d || o.op.cols() != d) throw ConfigError("tomography dataset: mixed dimensions");
    }
  }
}

double TomographyDataset::total_counts() const {
  double n = 0;
  for (const auto& row : counts)
    for (double c : row) n += c;
  return n;
}

namespace {

CMat phase_unitary(const std::vector<double>& phases) {
  const auto d = static_cast<Eigen::Index>(phases.size());
  CMat u = CMat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) u(i, i) = std::polar(1.0, -phases[static_cast<std::size_t>(i)]);
  return u;
}

SettingDefinition make_setting(int id, std::string label, std::vector<double> phases,
                               const ReceiverConfig& rx, std::span<const double> bin_times) {
  if (phases.size() != bin_times.size()) throw ConfigError("inconsistent phases: one per bin required");
  for (double p : phases) {
    if (!std::isfinite(p)) throw ConfigError("inconsistent phases: non-finite bin phase");
  }
  SettingDefinition s;
  s.id = id;
  s.label = std::move(label);
  s.bin_phases = std::move(phases);
  const auto d = static_cast<Eigen::Index>(bin_times.size());
  for (Eigen::Index i = 0; i < d; ++i) {
    CMat e = CMat::Zero(d, d);
    e(i, i) = rx.tap_ratio;
    s.outcomes.push_back({"toa", bin_times[static_cast<std::size_t>(i)], e});
  }
  const CMat u = phase_unitary(s.bin_phases);
  for (const auto& op : cascade_operators(bin_times, rx)) {
    s.outcomes.push_back({op.channel, op.time, (1.0 - rx.tap_ratio) * (u.adjoint() * op.op * u)});
  }
  return s;
}

Eigen::Index dim_of(const TomographyDataset& data) { return data.settings.front().outcomes.front().op.rows(); }

CMat weighted_acceptance(const TomographyDataset& data) {
  const auto d = dim_of(data);
  CMat g = CMat::Zero(d, d);
  for (std::size_t s = 0; s < data.settings.size(); ++s) g += data.shots[s] * data.settings[s].acceptance();
  return 0.5 * (g + g.adjoint());
}

// Hermitian basis: E_ii, E_ij + E_ji, i(E_ij - E_ji).
std::vector<CMat> hermitian_basis(Eigen::Index d) {
  std::vector<CMat> b;
  const std::complex<double> i1(0, 1);
  for (Eigen::Index i = 0; i < d; ++i) {
    CMat e = CMat::Zero(d, d);
    e(i, i) = 1;
    b.push_back(e);
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      CMat re = CMat::Zero(d, d);
      re(i, j) = 1;
      re(j, i) = 1;
      b.push_back(re);
      CMat im = CMat::Zero(d, d);
      im(i, j) = i1;
      im(j, i) = -i1;
      b.push_back(im);
    }
  }
  return b;
}

Eigen::MatrixXd design_matrix(const TomographyDataset& data, const std::vector<CMat>& basis) {
  Eigen::Index rows = 0;
  for (const auto& s : data.settings) rows += static_cast<Eigen::Index>(s.outcomes.size());
  Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(basis.size()));
  Eigen::Index r = 0;
  for (std::size_t s = 0; s < data.settings.size(); ++s) {
    for (const auto& o : data.settings[s].outcomes) {
      for (std::size_t k = 0; k < basis.size(); ++k) {
        a(r, static_cast<Eigen::Index>(k)) = data.shots[s] * (o.op * basis[k]).trace().real();
      }
      ++r;
    }
  }
  return a;
}

CMat hermitian_power(const CMat& m, double power) {
  Eigen::SelfAdjointEigenSolver<CMat> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::pow(std::max(ev(i), 0.0), power);
  return es.eigenvectors() * ev.cast<std::complex<double>>().asDiagonal() * es.eigenvectors().adjoint();
}

CMat normalized(const CMat& m) {
  CMat h = 0.5 * (m + m.adjoint());
  return h / h.trace().real();
}

CMat clip_to_state(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  if (!(ev.sum() > 0)) throw StatisticsError("linear inversion produced no positive eigenvalue");
  ev /= ev.sum();
  return normalized(es.eigenvectors() * ev.cast<std::complex<double>>().asDiagonal() *
                    es.eigenvectors().adjoint());
}

}  // namespace

std::vector<SettingDefinition> build_operators(const FourSymbolSchedule& schedule,
                                               const ReceiverConfig& rx,
                                               std::span<const double> bin_times) {
  rx.validate();
  if (!rx.cascade) throw ConfigError("tomography needs a cascade receiver");
  if (bin_times.size() != 4) throw ConfigError("tomography operators are defined for d = 4");
  std::vector<SettingDefinition> out;
  for (const auto& m : schedule.settings) out.push_back(make_setting(m.id, m.label, m.bin_phases, rx, bin_times));
  return out;
}

SettingDefinition overlap_setting(const TimeBinState& ideal, const ReceiverConfig& rx, int id) {
  rx.validate();
  if (!rx.cascade) throw ConfigError("overlap measurement needs a cascade receiver");
  const auto ops = cascade_operators(ideal.bin_times(), rx);
  const SlotOperator* central = nullptr;
  for (const auto& op : ops) {
    if (op.channel != "det_a") continue;
    if (!central || op.op.trace().real() > central->op.trace().real()) central = &op;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(central->op);
  const CVec w = es.eigenvectors().col(es.eigenvectors().cols() - 1);
  const auto& psi = ideal.amplitudes();
  std::vector<double> phases(ideal.dimension(), 0.0);
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (std::abs(std::abs(w(i)) - std::abs(psi(i))) > 1e-6) {
      throw ConfigError("ideal state magnitudes do not match the cascade's central projector");
    }
    if (std::abs(psi(i)) > 0) phases[static_cast<std::size_t>(i)] = std::arg(psi(i)) - std::arg(w(i));
  }
  return make_setting(id, "overlap", std::move(phases), rx, ideal.bin_times());
}

std::vector<std::vector<double>> expected_counts(const std::vector<SettingDefinition>& settings,
                                                 const CMat& rho, double shots, double mean_photon) {
  std::vector<std::vector<double>> out;
  for (const auto& s : settings) {
    std::vector<double> row;
    for (const auto& o : s.outcomes) row.push_back(shots * mean_photon * std::max(0.0, (o.op * rho).trace().real()));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<double>> sample_counts(const std::vector<std::vector<double>>& expected,
                                               std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  for (std::size_t s = 0; s < expected.size(); ++s) {
    Rng rng(derive_seed(seed, "tomography:counts", s));
    std::vector<double> row;
    for (double mean : expected[s]) {
      if (mean <= 0) {
        row.push_back(0.0);
        continue;
      }
      std::poisson_distribution<std::int64_t> draw(mean);
      row.push_back(static_cast<double>(draw(rng)));
    }
    out.push_back(std::move(row));
  }
  return out;
}

TomographyDataset make_dataset(std::vector<SettingDefinition> settings,
                               std::vector<std::vector<double>> counts, double shots) {
  TomographyDataset data;
  data.shots.assign(settings.size(), shots);
  data.settings = std::move(settings);
  data.counts = std::move(counts);
  data.validate();
  return data;
}

double log_likelihood(const TomographyDataset& data, const CMat& rho) {
  data.validate();
  const double norm = (weighted_acceptance(data) * rho).trace().real();
  double ll = 0;
  for (std::size_t s = 0; s < data.settings.size(); ++s) {
    for (std::size_t j = 0; j < data.counts[s].size(); ++j) {
      const double n = data.counts[s][j];
      if (n == 0) continue;
      const double p = data.shots[s] * (data.settings[s].outcomes[j].op * rho).trace().real() / norm;
      ll += p > 0 ? n * std::log(p) : -std::numeric_limits<double>::infinity();
    }
  }
  return ll;
}

std::size_t operator_rank(const TomographyDataset& data) {
  data.validate();
  const auto a = design_matrix(data, hermitian_basis(dim_of(data)));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  return static_cast<std::size_t>(qr.rank());
}

MleResult mle_reconstruct(const TomographyDataset& data, const MleOptions& options) {
  data.validate();
  const auto d = dim_of(data);
  if (operator_rank(data) < static_cast<std::size_t>(d * d)) {
    throw ConfigError("not informationally complete: outcome operators do not span the Hermitian space");
  }
  const double total = data.total_counts();
  if (!(total > 0)) throw StatisticsError("tomography dataset has no counts");

  // Work with sigma = G^1/2 rho G^1/2 / tr(G rho), whose outcome operators sum to I.
  const CMat g = weighted_acceptance(data);
  const CMat g_half = hermitian_power(g, 0.5);
  const CMat g_inv_half = hermitian_power(g, -0.5);
  std::vector<CMat> ops;
  std::vector<double> n;
  for (std::size_t s = 0; s < data.settings.size(); ++s) {
    for (std::size_t j = 0; j < data.counts[s].size(); ++j) {
      if (data.counts[s][j] == 0) continue;
      ops.push_back(data.shots[s] * g_inv_half * data.settings[s].outcomes[j].op * g_inv_half);
      n.push_back(data.counts[s][j]);
    }
  }
  auto loglik = [&](const CMat& sigma) {
    double ll = 0;
    for (std::size_t k = 0; k < ops.size(); ++k) {
      const double p = (ops[k] * sigma).trace().real();
      if (!(p > 0)) return -std::numeric_limits<double>::infinity();
      ll += n[k] * std::log(p);
    }
    return ll;
  };
  auto r_operator = [&](const CMat& sigma) {
    CMat r = CMat::Zero(d, d);
    for (std::size_t k = 0; k < ops.size(); ++k) r += (n[k] / (ops[k] * sigma).trace().real()) * ops[k];
    return CMat(r / total);
  };

  CMat sigma = normalized(g_half * (CMat::Identity(d, d) / static_cast<double>(d)) * g_half);
  double ll = loglik(sigma);
  MleResult res{DensityMatrix::maximally_mixed(static_cast<std::size_t>(d)), false, 0, 0, 0, {}};
  res.trace.push_back(ll);
  const CMat id = CMat::Identity(d, d);
  double eps = 1.0;

  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    const CMat r = r_operator(sigma);
    CMat next;
    double next_ll = -std::numeric_limits<double>::infinity();
    double step = std::min(1.0, 2.0 * eps);
    while (step > 1e-12) {
      const CMat m = (1.0 - step) * id + step * r;
      next = normalized(m * sigma * m.adjoint());
      next_ll = loglik(next);
      if (next_ll >= ll) break;
      step *= 0.5;
    }
    if (!(next_ll >= ll)) {
      res.converged = true;
      break;
    }
    eps = step;
    const double gain = next_ll - ll;
    sigma = next;
    ll = next_ll;
    res.trace.push_back(ll);
    if (gain / total < options.tolerance) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }

  res.gradient_norm = (r_operator(sigma) * sigma - sigma).norm();
  res.rho = DensityMatrix(clip_to_state(g_inv_half * sigma * g_inv_half));
  res.log_likelihood = log_likelihood(data, res.rho.matrix());
  return res;
}

DensityMatrix linear_inversion(const TomographyDataset& data) {
  data.validate();
  const auto d = dim_of(data);
  const auto basis = hermitian_basis(d);
  const auto a = design_matrix(data, basis);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(basis.size())) {
    throw ConfigError("not informationally complete: outcome operators do not span the Hermitian space");
  }
  Eigen::VectorXd y(a.rows());
  Eigen::Index r = 0;
  for (const auto& row : data.counts)
    for (double c : row) y(r++) = c;
  const Eigen::VectorXd x = qr.solve(y);
  CMat m = CMat::Zero(d, d);
  for (std::size_t k = 0; k < basis.size(); ++k) m += x(static_cast<Eigen::Index>(k)) * basis[k];
  return DensityMatrix(clip_to_state(m));
}

OverlapEstimate overlap_estimate(const TomographyDataset& data, const TimeBinState& ideal) {
  data.validate();
  const auto d = dim_of(data);
  if (static_cast<Eigen::Index>(ideal.dimension()) != d) throw ConfigError("overlap: dimension mismatch");
  const auto& psi = ideal.amplitudes();
  const CMat id = CMat::Identity(d, d);
  auto uniform = [&](const CMat& g) {
    const double c = g.trace().real() / static_cast<double>(d);
    return c > 0 && (g - c * id).norm() <= 1e-9 * c;
  };

  for (std::size_t s = 0; s < data.settings.size(); ++s) {
    const auto& setting = data.settings[s];
    for (std::size_t j = 0; j < setting.outcomes.size(); ++j) {
      const CMat& op = setting.outcomes[j].op;
      const double lambda = op.trace().real();
      if (!(lambda > 1e-12)) continue;
      // Rank-one operator aligned with the ideal state.
      if (std::abs(psi.dot(op * psi).real() - lambda) > 1e-9 * lambda) continue;

      const double n_c = data.counts[s][j];
      // Normalize by the time-of-arrival tap when its acceptance is flat:
      // that reference is independent of rho.
      CMat g_ref = CMat::Zero(d, d);
      double n_ref = 0;
      for (std::size_t k = 0; k < setting.outcomes.size(); ++k) {
        if (setting.outcomes[k].channel != "toa") continue;
        g_ref += setting.outcomes[k].op;
        n_ref += data.counts[s][k];
      }
      OverlapEstimate est;
      double c = 0;
      if (uniform(g_ref)) {
        c = g_ref.trace().real() / static_cast<double>(d);
      } else {
        g_ref = setting.acceptance();
        n_ref = 0;
        for (double n : data.counts[s]) n_ref += n;
        if (uniform(g_ref)) {
          c = g_ref.trace().real() / static_cast<double>(d);
        } else {
          // Non-flat acceptance: tr(G rho) ~ <psi|G|psi> only near the ideal state.
          c = psi.dot(g_ref * psi).real();
          est.assumes_purity = true;
        }
      }
      if (!(n_ref > 0)) throw StatisticsError("overlap setting recorded no reference counts");
      const double ratio = n_c / n_ref;
      est.fidelity = std::clamp(ratio * c / lambda, 0.0, 1.0);
      const double rel2 = (n_c > 0 ? 1.0 / n_c : 1.0) + 1.0 / n_ref;
      est.error = ratio * c / lambda * std::sqrt(rel2);
      return est;
    }
  }
  throw ConfigError("missing setting: no outcome projects onto the ideal state");
}

TomographyDataset permute_bins(const TomographyDataset& data, const std::vector<int>& perm) {
  data.validate();
  const auto d = dim_of(data);
  if (static_cast<Eigen::Index>(perm.size()) != d) throw ConfigError("permutation size differs from d");
  CMat p = CMat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) p(perm[static_cast<std::size_t>(i)], i) = 1.0;
  TomographyDataset out = data;
  for (auto& s : out.settings)
    for (auto& o : s.outcomes) o.op = p * o.op * p.transpose();
  return out;
}

}  // namespace tbq
