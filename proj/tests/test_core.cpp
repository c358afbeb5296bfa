#include <doctest.h>

#include <random>

#include "tbq/core.hpp"
#include "tbq/random.hpp"

using namespace tbq;

namespace {

CVec random_state(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  CVec v(d);
  for (int i = 0; i < d; ++i) v(i) = {g(rng), g(rng)};
  return v / v.norm();
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("normalize_amplitudes on fixed weights") {
  const auto a = normalize_amplitudes(std::vector<double>{1, 1});
  CHECK(a(0).real() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(a(1).real() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));

  const auto b = normalize_amplitudes(std::vector<double>{1, 0, 0, 0});
  CHECK(b(0) == std::complex<double>(1, 0));
  CHECK(std::abs(b(1)) == 0.0);

  const auto c = normalize_amplitudes(std::vector<double>{1, 3});
  CHECK(std::norm(c(0)) == doctest::Approx(0.25));
  CHECK(std::norm(c(1)) == doctest::Approx(0.75));

  CHECK_THROWS_WITH_AS(normalize_amplitudes(std::vector<double>{0, 0}),
                       "vacuum state, no normalizable amplitudes", ConfigError);
  CHECK_THROWS_AS(normalize_amplitudes(std::vector<double>{1, -1}), ConfigError);
}

TEST_CASE("normalize_amplitudes always has unit norm") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> w(1 + trial % 8);
    for (auto& x : w) x = u(rng);
    CHECK(normalize_amplitudes(w).squaredNorm() == doctest::Approx(1).epsilon(1e-12));
  }
}

TEST_CASE("mean_photon is kappa times the weight sum") {
  const std::vector<double> zero{0, 0};
  CHECK(mean_photon<double>(zero, 0.3) == 0.0);
  const std::vector<double> ones{1, 1};
  CHECK(mean_photon<double>(ones, 0.3) == doctest::Approx(0.6));
  CHECK(mean_photon<double>(ones, 0.1) == doctest::Approx(0.2));

  // linear in each weight, homogeneous in kappa
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 2);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> w{u(rng), u(rng), u(rng)};
    const double k = u(rng) + 0.01;
    const double base = mean_photon<double>(w, k);
    auto w2 = w;
    w2[1] *= 3;
    CHECK(mean_photon<double>(w2, k) == doctest::Approx(base + 2 * k * w[1]));
    CHECK(mean_photon<double>(w, 2 * k) == doctest::Approx(2 * base));
  }
}

TEST_CASE("TimeBinState invariants") {
  CHECK_THROWS_AS(TimeBinState({0.0, 1.0}, CVec::Ones(2), 1.0), ConfigError);  // not normalized
  CHECK_THROWS_AS(TimeBinState({1.0, 0.0}, CVec::Ones(2) / std::sqrt(2.0), 1.0), ConfigError);
  CHECK_THROWS_AS(TimeBinState({0.0}, CVec::Ones(1), -1.0), ConfigError);
  const TimeBinState vac({0.0}, CVec::Ones(1), 0.0);
  CHECK(vac.is_vacuum());

  // alpha_0 is made real and non-negative
  CVec a(2);
  a << std::polar(std::sqrt(0.5), 1.0), std::polar(std::sqrt(0.5), 2.5);
  const TimeBinState s({0.0, 2e-9}, a, 0.5);
  CHECK(s.amplitudes()(0).imag() == doctest::Approx(0).epsilon(1e-15));
  CHECK(s.amplitudes()(0).real() > 0);
  CHECK(std::arg(s.amplitudes()(1)) == doctest::Approx(1.5));
}

TEST_CASE("fidelity_pure") {
  std::mt19937_64 rng(3);
  const auto psi = TimeBinState::on_grid(0, 1e-9, random_state(rng, 4));
  CHECK(fidelity_pure(psi, psi) == doctest::Approx(1));

  CVec e0 = CVec::Zero(2), e1 = CVec::Zero(2);
  e0(0) = 1;
  e1(1) = 1;
  CHECK(fidelity_pure(TimeBinState::on_grid(0, 1e-9, e0), TimeBinState::on_grid(0, 1e-9, e1)) == 0.0);

  // psi_1^4 against itself with an extra global phase
  const CVec u = CVec::Constant(4, 0.5);
  const auto p1 = TimeBinState::on_grid(0, 2e-9, u).with_phases(std::vector<double>{0, kPi / 3, 2 * kPi / 3, kPi});
  const auto shifted = TimeBinState::on_grid(0, 2e-9, CVec(p1.amplitudes() * std::polar(1.0, 0.7)));
  CHECK(fidelity_pure(p1, shifted) == doctest::Approx(1).epsilon(1e-12));

  CHECK_THROWS_AS(fidelity_pure(psi, TimeBinState::on_grid(0, 1e-9, e0)), ConfigError);
  CHECK_THROWS_AS(fidelity_pure(psi, TimeBinState::on_grid(0, 2e-9, random_state(rng, 4))), ConfigError);
}

TEST_CASE("fidelity symmetry and pure/mixed agreement") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ph(-kPi, kPi);
  for (int i = 0; i < 300; ++i) {
    const int d = 2 + i % 5;
    const auto a = TimeBinState::on_grid(0, 1e-9, random_state(rng, d));
    const auto b = TimeBinState::on_grid(0, 1e-9, random_state(rng, d));
    const auto b_rot = TimeBinState::on_grid(0, 1e-9, CVec(b.amplitudes() * std::polar(1.0, ph(rng))));
    const double f = fidelity_pure(a, b);
    CHECK(fidelity_pure(b, a) == doctest::Approx(f).epsilon(1e-12));
    CHECK(fidelity_pure(a, b_rot) == doctest::Approx(f).epsilon(1e-12));
    CHECK(fidelity_mixed(DensityMatrix::pure(a), b) == doctest::Approx(f).epsilon(1e-12));
  }
}

TEST_CASE("fidelity_mixed of the maximally mixed state") {
  std::mt19937_64 rng(23);
  const auto phi = TimeBinState::on_grid(0, 1e-9, random_state(rng, 4));
  CHECK(fidelity_mixed(DensityMatrix::maximally_mixed(4), phi) == doctest::Approx(0.25));
}

TEST_CASE("DensityMatrix invariants") {
  CMat bad = CMat::Identity(2, 2);
  CHECK_THROWS_AS(DensityMatrix{bad}, ConfigError);  // trace 2
  CMat nh = CMat::Identity(2, 2) / 2.0;
  nh(0, 1) = 0.3;
  CHECK_THROWS_AS(DensityMatrix{nh}, ConfigError);
  CMat neg = CMat::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(DensityMatrix{neg}, ConfigError);
}

TEST_CASE("pulse train invariants") {
  CHECK_THROWS_AS(ElectricalPulseTrain::uniform(std::vector<double>{}, 0.0, 2e-9, 1e-9), ConfigError);
  CHECK_THROWS_AS(ElectricalPulseTrain::uniform(std::vector<double>{0.5, 0.5}, 0.0, 0.5e-9, 1e-9), ConfigError);
  ElectricalPulseTrain t;
  t.pulses = {{0, 1e-9, 0.5}, {2e-9, 2e-9, 0.5}};
  CHECK_THROWS_AS(t.validate(), ConfigError);
  HardwareConfig hw;
  hw.v_pi = 0;
  CHECK_THROWS_AS(hw.validate(), ConfigError);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, "a:b") == derive_seed(1, "a:b"));
  CHECK(derive_seed(1, "a:b") != derive_seed(2, "a:b"));
  CHECK(derive_seed(1, "a:b") != derive_seed(1, "a:c"));
  CHECK(derive_seed(1, "x", 0) != derive_seed(1, "x", 1));
}

TEST_CASE("float scalar instantiation") {
  const std::vector<float> w{1.0f, 3.0f};
  const auto a = normalize_amplitudes(w);
  CHECK(std::norm(a(1)) == doctest::Approx(0.75f));
  BasicHardwareConfig<float> hw;
  hw.validate();
}

}  // TEST_SUITE
