#include <doctest.h>

#include <random>

#include <boost/math/distributions/binomial.hpp>

#include "stats.hpp"
#include "tbq/receiver.hpp"

using namespace tbq;

namespace {

TimeBinState two_bin(double phase, double n = 1.0) {
  const std::vector<double> ph{0.0, phase};
  return TimeBinState::on_grid(0, 2e-9, CVec::Constant(2, std::sqrt(0.5)), n).with_phases(ph);
}

ReceiverConfig plain_rx() {
  ReceiverConfig rx;
  rx.delay = 2e-9;
  return rx;
}

}  // namespace

TEST_SUITE("receiver") {

TEST_CASE("interference at the central slot") {
  const auto rx = plain_rx();
  const auto minus = two_bin(kPi);
  const auto d = detection_probabilities(minus, rx, 1.0);
  CHECK(d.flux_near("port0", 2e-9, 1e-12) == doctest::Approx(0).epsilon(1e-15));
  CHECK(d.flux_near("port1", 2e-9, 1e-12) == doctest::Approx(0.9 * 0.5));
  const auto plus = detection_probabilities(two_bin(0), rx, 1.0);
  CHECK(plus.flux_near("port1", 2e-9, 1e-12) == 0.0);
  // satellites carry a quarter of each bin
  CHECK(plus.flux_near("port0", 0.0, 1e-12) == doctest::Approx(0.9 * 0.125));
  CHECK(plus.flux_near("toa", 0.0, 1e-12) == doctest::Approx(0.1 * 0.5));
}

TEST_CASE("fringe contrast equals the source visibility") {
  for (double v : {1.0, 0.987, 0.924, 0.5, 0.0}) {
    double lo = 1e9, hi = -1;
    for (int k = 0; k < 64; ++k) {
      auto rx = plain_rx();
      rx.phase = kTwoPi * k / 64.0;
      const double f = detection_probabilities(two_bin(0), rx, v).flux_near("port0", 2e-9, 1e-12);
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    CHECK((hi - lo) / (hi + lo) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("flux is conserved through the single interferometer") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 5;
    CVec a(d);
    for (int i = 0; i < d; ++i) a(i) = {g(rng), g(rng)};
    a /= a.norm();
    const auto psi = TimeBinState::on_grid(0, 2e-9, a, 0.3 + u(rng));
    auto rx = plain_rx();
    rx.phase = 6 * u(rng);
    rx.detector_efficiency = 0.5 + 0.5 * u(rng);
    const double t = 0.1 + 0.9 * u(rng);
    const auto dist = detection_probabilities(psi, rx, u(rng), t);
    CHECK(dist.total() == doctest::Approx(psi.mean_photon() * rx.detector_efficiency * t).epsilon(1e-12));
  }
}

TEST_CASE("missing cascade and mismatched delays") {
  auto rx = plain_rx();
  const auto psi = TimeBinState::on_grid(0, 2e-9, CVec::Constant(4, 0.5));
  CHECK_THROWS_AS(cascade_probabilities(psi, rx, 1.0), ConfigError);
  rx.delay = 3e-9;
  std::vector<std::string> warnings;
  detection_probabilities(two_bin(0), rx, 1.0, 1.0, &warnings);
  CHECK(warnings.size() == 1);
}

TEST_CASE("cascade projects onto the uniform state") {
  auto rx = plain_rx();
  rx.cascade = CascadeStage{4e-9, 0, 0};
  const auto psi = TimeBinState::on_grid(0, 2e-9, CVec::Constant(4, 0.5));
  const auto dist = cascade_probabilities(psi, rx, 1.0);
  // all four bins meet at 6 ns
  CHECK(dist.flux_near("det_a", 6e-9, 1e-12) == doctest::Approx(0.9 * 0.25));
  CHECK(dist.flux_near("det_b", 6e-9, 1e-12) == doctest::Approx(0).epsilon(1e-15));
}

TEST_CASE("four-symbol schedule") {
  const auto s = four_symbol_schedule(100e6);
  CHECK(s.setting_rate == 25e6);
  CHECK(s.settings[0].bin_phases == std::vector<double>{0, 0, 0, 0});
  CHECK(s.settings[2].bin_phases == std::vector<double>{kPi / 2, 0, kPi / 2, 0});
  CHECK(s.setting_for(7).id == 3);
  CHECK(s.states_per_setting(1e-3) == 25000);
  CHECK_THROWS_AS(four_symbol_schedule(1e8 + 1), ConfigError);
}

TEST_CASE("dark counts alone") {
  auto rx = plain_rx();
  rx.dark_count_rate = 5e6;  // 1e-3 per 200 ps gate
  const auto dist = detection_probabilities(two_bin(0), rx, 1.0, 0.0);
  const auto h = sample_clicks(dist, 1000000, rx, 5);
  const double c = static_cast<double>(h.count("toa", 0));
  CHECK(std::abs(c - 1000) < 3 * std::sqrt(1000.0));
}

TEST_CASE("click counts follow the binomial law") {
  auto rx = plain_rx();
  rx.dark_count_rate = 1e5;
  const auto dist = detection_probabilities(two_bin(0, 0.2), rx, 1.0);
  const auto slot = dist.slot_index(2e-9);
  const double flux = dist.mean_photons(dist.channel_index("port0"), slot);
  const double p = 1 - std::exp(-flux) * (1 - rx.dark_probability());
  const std::uint64_t shots = 200;
  boost::math::binomial law(static_cast<double>(shots), p);

  std::vector<double> observed(shots + 1, 0.0);
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    const auto h = sample_clicks(dist, shots, rx, 1000 + r);
    observed[static_cast<std::size_t>(h.count("port0", static_cast<std::size_t>(slot)))] += 1;
  }
  // pool sparse tails into neighbouring cells
  std::vector<double> obs, exp;
  double o_acc = 0, e_acc = 0;
  for (std::size_t k = 0; k <= shots; ++k) {
    o_acc += observed[k];
    e_acc += reps * boost::math::pdf(law, static_cast<double>(k));
    if (e_acc >= 5) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
      o_acc = e_acc = 0;
    }
  }
  obs.back() += o_acc;
  exp.back() += e_acc;
  CHECK(test::chi_square_pvalue(obs, exp) > 0.01);
}

TEST_CASE("histogram merge") {
  const auto rx = plain_rx();
  const auto dist = detection_probabilities(two_bin(0), rx, 1.0);
  auto a = sample_clicks(dist, 1000, rx, 1);
  const auto b = sample_clicks(dist, 1000, rx, 2);
  const auto total = a.total() + b.total();
  a.merge(b);
  CHECK(a.total() == total);
  CHECK(a.total_states_sent == 2000);
}

}  // TEST_SUITE
