#include <doctest.h>

#include <random>

#include "tbq/tomography.hpp"

using namespace tbq;

namespace {

const std::vector<double> kBins{0, 2e-9, 4e-9, 6e-9};

ReceiverConfig cascade_rx() {
  ReceiverConfig rx;
  rx.delay = 2e-9;
  rx.cascade = CascadeStage{4e-9, 0, 0};
  return rx;
}

TimeBinState psi4(const std::vector<double>& phases) {
  return TimeBinState(kBins, CVec::Constant(4, 0.5), 1.0).with_phases(phases);
}

std::vector<SettingDefinition> settings(double quarter = kPi / 2) {
  return build_operators(four_symbol_schedule(100e6, quarter), cascade_rx(), kBins);
}

TomographyDataset dataset(const CMat& rho, double shots, std::uint64_t seed, double quarter = kPi / 2) {
  const auto counts = sample_counts(expected_counts(settings(quarter), rho, shots, 1.0), seed);
  return make_dataset(settings(), counts, shots);
}

CVec random_pure(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVec v(4);
  for (int i = 0; i < 4; ++i) v(i) = {g(rng), g(rng)};
  return v / v.norm();
}

}  // namespace

TEST_SUITE("tomography") {

TEST_CASE("operator set") {
  const auto ops = settings();
  REQUIRE(ops.size() == 4);
  for (const auto& s : ops) {
    CMat toa = CMat::Zero(4, 4);
    for (const auto& o : s.outcomes) {
      Eigen::SelfAdjointEigenSolver<CMat> es(o.op);
      CHECK(es.eigenvalues().minCoeff() > -1e-12);
      CHECK(es.eigenvalues().maxCoeff() < 1 + 1e-12);
      if (o.channel == "toa") toa += o.op;
    }
    CHECK((toa - 0.1 * CMat::Identity(4, 4)).norm() < 1e-15);
    // post-selected outcomes of a setting never exceed the identity
    Eigen::SelfAdjointEigenSolver<CMat> acc(s.acceptance());
    CHECK(acc.eigenvalues().maxCoeff() < 1 + 1e-12);
  }
  CHECK_THROWS_AS(build_operators(four_symbol_schedule(100e6), ReceiverConfig{}, kBins), ConfigError);
}

TEST_CASE("central slot of S0 projects onto the uniform superposition") {
  const auto s0 = settings()[0];
  const TomographyOutcome* central = nullptr;
  for (const auto& o : s0.outcomes)
    if (o.channel == "det_a" && std::abs(o.time - 6e-9) < 1e-12) central = &o;
  REQUIRE(central != nullptr);
  const auto psi0 = psi4({0, 0, 0, 0});
  const double best = psi0.amplitudes().dot(central->op * psi0.amplitudes()).real();
  Eigen::SelfAdjointEigenSolver<CMat> es(central->op);
  CHECK(best == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-12));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const CVec v = random_pure(rng);
    CHECK(v.dot(central->op * v).real() <= best + 1e-12);
  }
}

TEST_CASE("informational completeness") {
  const auto data = dataset(psi4({0, 0, 0, 0}).density(), 1e4, 3);
  CHECK(operator_rank(data) == 16);
  auto partial = data;
  partial.settings.resize(1);
  partial.counts.resize(1);
  partial.shots.resize(1);
  CHECK(operator_rank(partial) < 16);
  CHECK_THROWS_WITH_AS(mle_reconstruct(partial), doctest::Contains("not informationally complete"), ConfigError);
}

TEST_CASE("noiseless closed loop") {
  const auto psi0 = psi4({0, 0, 0, 0});
  const auto data = make_dataset(settings(), expected_counts(settings(), psi0.density(), 1e6, 1.0), 1e6);
  const auto mle = mle_reconstruct(data);
  CHECK(fidelity_mixed(mle.rho, psi0) >= 0.995);
  for (std::size_t i = 1; i < mle.trace.size(); ++i) CHECK(mle.trace[i] >= mle.trace[i - 1]);
}

TEST_CASE("sampled closed loop and phase error") {
  const auto psi0 = psi4({0, 0, 0, 0});
  const auto mle = mle_reconstruct(dataset(psi0.density(), 1e6, 7));
  CHECK(mle.converged);
  const double f = fidelity_mixed(mle.rho, psi0);
  CHECK(f >= 0.995);
  for (std::size_t i = 1; i < mle.trace.size(); ++i) CHECK(mle.trace[i] >= mle.trace[i - 1]);
  CHECK(mle.log_likelihood >= log_likelihood(dataset(psi0.density(), 1e6, 7), linear_inversion(dataset(psi0.density(), 1e6, 7)).matrix()));

  const auto skewed = mle_reconstruct(dataset(psi0.density(), 1e6, 7, kPi / 2 + 0.1));
  CHECK(fidelity_mixed(skewed.rho, psi0) < f);
}

TEST_CASE("maximally mixed input") {
  const auto mle = mle_reconstruct(dataset(CMat::Identity(4, 4) / 4.0, 1e6, 11));
  CHECK((mle.rho.matrix() - CMat::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("likelihood of the MLE dominates linear inversion") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    const CVec v = random_pure(rng);
    const CMat rho = 0.8 * v * v.adjoint() + 0.05 * CMat::Identity(4, 4);
    const auto data = dataset(rho, 2e4, 100 + trial);
    const auto mle = mle_reconstruct(data);
    CHECK(mle.log_likelihood >= log_likelihood(data, linear_inversion(data).matrix()) - 1e-9);
    CHECK(mle.log_likelihood == doctest::Approx(log_likelihood(data, mle.rho.matrix())));
  }
}

TEST_CASE("MLE is the argmax over a two-parameter family") {
  // rho(p, theta): p |phi_theta><phi_theta| + (1 - p) I/4 around the MLE
  const auto psi = psi4({0, 0.3, 0, 0});
  const auto data = dataset(0.9 * psi.density() + 0.025 * CMat::Identity(4, 4), 1e4, 23);
  const auto mle = mle_reconstruct(data);
  for (double p = 0.5; p <= 1.0; p += 0.05) {
    for (double th = -0.5; th <= 1.1; th += 0.1) {
      const CMat rho = p * psi4({0, th, 0, 0}).density() + (1 - p) / 4 * CMat::Identity(4, 4);
      CHECK(log_likelihood(data, rho) <= mle.log_likelihood + 1e-6);
    }
  }
}

TEST_CASE("permutation covariance") {
  std::mt19937_64 rng(29);
  const CVec v = random_pure(rng);
  const auto data = dataset(0.9 * v * v.adjoint() + 0.025 * CMat::Identity(4, 4), 1e5, 31);
  const std::vector<int> perm{2, 0, 3, 1};
  const auto a = mle_reconstruct(data).rho.matrix();
  const auto b = mle_reconstruct(permute_bins(data, perm)).rho.matrix();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::abs(b(perm[i], perm[j]) - a(i, j)) < 1e-9);
}

TEST_CASE("overlap estimator") {
  const auto rx = cascade_rx();
  const auto psi1 = psi4({0, kPi / 3, 2 * kPi / 3, kPi});
  const std::vector<SettingDefinition> ov{overlap_setting(psi1, rx)};

  const auto ideal = overlap_estimate(make_dataset(ov, sample_counts(expected_counts(ov, psi1.density(), 1e6, 1), 3), 1e6), psi1);
  CHECK(std::abs(ideal.fidelity - 1) < 3 * ideal.error);
  CHECK_FALSE(ideal.assumes_purity);

  const CMat mixed = CMat::Identity(4, 4) / 4.0;
  const auto flat = overlap_estimate(make_dataset(ov, expected_counts(ov, mixed, 1e6, 1), 1e6), psi1);
  CHECK(flat.fidelity == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(flat.fidelity == doctest::Approx(fidelity_mixed(DensityMatrix(mixed), psi1)).epsilon(1e-9));
  // the same number is read as |<psi|phi>|^2 only under purity; the state here has purity 1/4
  CHECK(DensityMatrix(mixed).purity() == doctest::Approx(0.25));

  const auto s0 = settings();
  const auto no_overlap = make_dataset({s0[1]}, expected_counts({s0[1]}, mixed, 1e6, 1), 1e6);
  CHECK_THROWS_WITH_AS(overlap_estimate(no_overlap, psi1), doctest::Contains("missing setting"), ConfigError);
}

TEST_CASE("fidelity converges with shots") {
  std::mt19937_64 rng(41);
  std::vector<double> log_n, log_inf;
  for (double shots : {1e3, 1e4, 1e5, 1e6}) {
    double infid = 0;
    std::mt19937_64 states(43);
    for (int k = 0; k < 16; ++k) {
      const CVec v = random_pure(states);
      const auto psi = TimeBinState(kBins, v, 1.0);
      const auto mle = mle_reconstruct(dataset(psi.density(), shots, rng()));
      infid += 1 - fidelity_mixed(mle.rho, psi);
    }
    log_n.push_back(std::log(shots));
    log_inf.push_back(std::log(infid / 16));
  }
  const double slope = (log_inf.back() - log_inf.front()) / (log_n.back() - log_n.front());
  // fixed measurements on near-pure states give infidelity ~ N^-1/2
  CHECK(slope < -0.35);
  CHECK(slope > -1.2);
}

}  // TEST_SUITE
