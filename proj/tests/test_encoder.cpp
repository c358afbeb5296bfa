#include <doctest.h>

#include <random>

#include "oracles/timing_oracle.hpp"
#include "tbq/encoder.hpp"
#include "tbq/receiver.hpp"

using namespace tbq;

namespace {

const EmissionWindow kCw{-1e9, 1e9, -1e9, 0.0};

HardwareConfig ideal_hw() {
  HardwareConfig hw;
  hw.extinction_ratio = std::numeric_limits<double>::infinity();
  hw.photon_scale = 0.3;
  return hw;
}

std::vector<CarvedPulsePair> carve_equal(std::size_t n, double v, const HardwareConfig& hw) {
  const auto train = ElectricalPulseTrain::uniform(std::vector<double>(n, v), 1e-9, 5e-9, 1e-9);
  return carve(train, hw, kCw);
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("carving amplitude law") {
  const auto hw = ideal_hw();
  CHECK(carving_weight(0.5, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(carving_weight(1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(carving_weight(1.0, 1.0)) < 1e-12);
  CHECK(carving_weight(0.25, 1.0) == doctest::Approx(0.5).epsilon(1e-15));

  const auto pairs = carve_equal(3, 0.25, hw);
  REQUIRE(pairs.size() == 3);
  for (const auto& p : pairs) {
    CHECK(p.late_time - p.early_time == doctest::Approx(1e-9).epsilon(1e-6));
    CHECK(p.width == hw.delta_t_asymm);
    CHECK(p.edge_skew == 0.0);
  }
}

TEST_CASE("carving preconditions") {
  auto hw = ideal_hw();
  hw.delta_t_asymm = 0.3e-9;  // ratio 3.3 < 5
  CHECK_THROWS_AS(carve_equal(2, 0.5, hw), InfeasibleError);
  hw.delta_t_asymm = 0.15e-9;  // ratio 6.7 warns
  std::vector<std::string> warnings;
  const auto train = ElectricalPulseTrain::uniform(std::vector<double>{0.5, 0.5}, 1e-9, 5e-9, 1e-9);
  carve(train, hw, kCw, TimingMode::General, &warnings);
  CHECK(warnings.size() == 1);

  const EmissionWindow gs{0, 20e-9, 2e-9, 0.3};
  CHECK_THROWS_WITH_AS(carve(train, ideal_hw(), gs), doctest::Contains("carving during transient"), InfeasibleError);

  ElectricalPulseTrain overlap;
  overlap.pulses = {{1e-9, 1e-9, 0.5}, {1.5e-9, 1e-9, 0.5}};
  CHECK_THROWS_WITH_AS(carve(overlap, ideal_hw(), kCw), doctest::Contains("carving collision"), InfeasibleError);

  auto skewed = ideal_hw();
  skewed.rise_fall_time = 0.1e-9;
  CHECK(carve(train, skewed, kCw)[0].edge_skew == doctest::Approx(0.1));
}

TEST_CASE("pick builds the reported states") {
  const auto hw = ideal_hw();
  // |-> from two pairs, phases (0, pi)
  const auto minus = pick(carve_equal(2, 0.5, hw), PickSchedule::keep_early(std::vector<double>{0, kPi}), hw);
  REQUIRE(minus.dimension() == 2);
  CHECK(minus.amplitudes()(0).real() == doctest::Approx(std::sqrt(0.5)));
  CHECK(minus.amplitudes()(1).real() == doctest::Approx(-std::sqrt(0.5)));
  CHECK(minus.mean_photon() == doctest::Approx(0.6));

  const auto e = pick(carve_equal(1, 0.5, hw), PickSchedule::keep_early(std::vector<double>{0}), hw);
  CHECK(e.dimension() == 1);
  CHECK(std::abs(e.amplitudes()(0)) == doctest::Approx(1));

  const std::vector<double> ph{0, kPi / 3, 2 * kPi / 3, kPi};
  const auto psi41 = pick(carve_equal(4, 0.5, hw), PickSchedule::keep_early(ph), hw);
  const auto ideal = TimeBinState(psi41.bin_times(), CVec::Constant(4, 0.5), 1).with_phases(ph);
  CHECK(fidelity_pure(psi41, ideal) == doctest::Approx(1).epsilon(1e-12));
}

TEST_CASE("finite extinction leaks weight into the discarded bin") {
  auto hw = ideal_hw();
  hw.extinction_ratio = 1000;
  const auto s = pick(carve_equal(1, 0.5, hw), PickSchedule::keep_early(std::vector<double>{0}), hw);
  REQUIRE(s.dimension() == 2);
  CHECK(std::norm(s.amplitudes()(1)) == doctest::Approx(1e-3 / (1 + 1e-3)));
}

TEST_CASE("pick normalization over random schedules") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> v(0.05, 0.5), ph(-kPi, kPi), er(10, 1e5);
  std::uniform_int_distribution<int> keep(0, 2), n(1, 6);
  for (int trial = 0; trial < 300; ++trial) {
    auto hw = ideal_hw();
    hw.extinction_ratio = er(rng);
    const int d = n(rng);
    std::vector<double> volts(d);
    for (auto& x : volts) x = v(rng);
    const auto pairs = carve(ElectricalPulseTrain::uniform(volts, 1e-9, 5e-9, 1e-9), hw, kCw);
    PickSchedule s;
    for (int i = 0; i < d; ++i) s.steps.push_back({static_cast<Keep>(keep(rng)), ph(rng), DriveMode::PiShiftCw});
    s.steps[0].keep = Keep::Early;
    const auto psi = pick(pairs, s, hw);
    CHECK(psi.amplitudes().squaredNorm() == doctest::Approx(1).epsilon(1e-12));
  }
}

TEST_CASE("decoy intensity control") {
  const auto hw = ideal_hw();
  const std::vector<double> eq{1, 1};
  auto v = set_decoy_intensity(eq, 0.6, hw);
  CHECK(v[0] == doctest::Approx(0.5));
  CHECK(v[1] == doctest::Approx(0.5));
  v = set_decoy_intensity(eq, 0.2, hw);
  CHECK(carving_weight(v[0], hw.v_pi) == doctest::Approx(1.0 / 3));
  v = set_decoy_intensity(eq, 0.0, hw);
  CHECK(v[0] == 0.0);
  CHECK_THROWS_AS(set_decoy_intensity(eq, 0.7, hw), InfeasibleError);

  // round trip through carve, and ratio invariance of the normalized state
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> w(0.1, 1.0), t(0.01, 0.3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> rel{w(rng), w(rng), w(rng)};
    const double target = t(rng);
    const auto volts = set_decoy_intensity(rel, target, hw);
    const auto pairs = carve(ElectricalPulseTrain::uniform(volts, 1e-9, 5e-9, 1e-9), hw, kCw);
    const double sum = rel[0] + rel[1] + rel[2];
    for (int i = 0; i < 3; ++i) CHECK(pairs[i].weight == doctest::Approx(rel[i] / sum * target / hw.photon_scale).epsilon(1e-9));
    const auto sched = PickSchedule::keep_early(std::vector<double>{0, 0, 0});
    const auto a = pick(pairs, sched, hw);
    const auto volts2 = set_decoy_intensity(rel, target / 2, hw);
    const auto b = pick(carve(ElectricalPulseTrain::uniform(volts2, 1e-9, 5e-9, 1e-9), hw, kCw), sched, hw);
    CHECK(b.mean_photon() == doctest::Approx(a.mean_photon() / 2));
    for (int i = 0; i < 3; ++i) CHECK(std::norm(a.amplitudes()(i)) == doctest::Approx(std::norm(b.amplitudes()(i))).epsilon(1e-12));
  }
}

TEST_CASE("check_timing worked examples") {
  HardwareConfig hw;
  hw.delta_t_asymm2 = 10e-9;
  const auto two = ElectricalPulseTrain::uniform(std::vector<double>{0.5, 0.5}, 0.0, 2e-9, 1e-9);
  auto v = check_timing(two, hw, TimingMode::General);
  CHECK(v.feasible);
  CHECK(v.condition == TimingCondition::CcwAfterCw);
  CHECK(v.max_rate == doctest::Approx(1.0 / (2e-9 + 1e-9 + 10e-9 + hw.delta_t_asymm)));

  hw.delta_t_asymm2 = 0.5e-9;
  const auto narrow = ElectricalPulseTrain::uniform(std::vector<double>{0.5, 0.5}, 0.0, 2e-9, 0.4e-9);
  v = check_timing(narrow, hw, TimingMode::General);
  CHECK(v.feasible);
  CHECK(v.condition == TimingCondition::CcwBetweenPulses);

  hw.delta_t_asymm2 = 2.5e-9;
  v = check_timing(two, hw, TimingMode::General);
  CHECK_FALSE(v.feasible);
  CHECK(v.report.find("infeasible") != std::string::npos);

  HardwareConfig three;
  three.delta_t_asymm = 1e-9;
  three.delta_t_asymm2 = 1.05e-9;
  const auto one = ElectricalPulseTrain::uniform(std::vector<double>{0.5, 0.5}, 0.0, 2e-9, 0.95e-9);
  v = check_timing(one, three, TimingMode::ThreeState);
  CHECK(v.feasible);
  CHECK(v.max_rate == doctest::Approx(200e6));
}

TEST_CASE("check_timing agrees with the interval oracle") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> width(0.2e-9, 3e-9), extra(0, 4e-9), dt2(0, 20e-9), frac(0.01, 0.5);
  std::uniform_int_distribution<int> count(1, 6);
  int feasible = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    HardwareConfig hw;
    const double w = width(rng);
    hw.delta_t_asymm = frac(rng) * w;
    hw.delta_t_asymm2 = dt2(rng);
    ElectricalPulseTrain train;
    double t = 0;
    for (int i = 0, n = count(rng); i < n; ++i) {
      train.pulses.push_back({t, w, 0.5});
      t += w + extra(rng);
    }
    const auto v = check_timing(train, hw, TimingMode::General);
    const auto o = oracle::general_verdict(train, hw);
    CHECK(v.feasible == o.feasible);
    CHECK(v.max_rate == doctest::Approx(1.0 / o.frame_length).epsilon(1e-12));
    CHECK(v.admits(0.5 * v.max_rate) == o.feasible);
    CHECK_FALSE(v.admits(v.max_rate));
    if (o.feasible) ++feasible;
  }
  CHECK(feasible > 1000);
  CHECK(feasible < 9000);
}

TEST_CASE("three-state condition agrees with the oracle") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> d(0.5e-9, 1.5e-9);
  const auto train = ElectricalPulseTrain::uniform(std::vector<double>{0.5, 0.5}, 0.0, 5e-9, 1e-9);
  int feasible = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    HardwareConfig hw;
    hw.delta_t_asymm = d(rng);
    hw.delta_t_asymm2 = d(rng);
    const double w = d(rng);
    auto t = train;
    for (auto& p : t.pulses) p.width = w;
    const auto v = check_timing(t, hw, TimingMode::ThreeState);
    CHECK(v.feasible == oracle::three_state_similar(hw.delta_t_asymm2, hw.delta_t_asymm, w));
    CHECK(v.max_rate == doctest::Approx(0.2 / hw.delta_t_asymm));
    feasible += v.feasible;
  }
  CHECK(feasible > 100);
}

TEST_CASE("minus trick") {
  HardwareConfig hw;
  hw.delta_t_asymm = 1e-9;
  hw.delta_t_asymm2 = 1e-9;
  hw.carving_width = 1e-9;
  hw.extinction_ratio = std::numeric_limits<double>::infinity();
  const auto sched = encode_minus_fast(hw, 150e6);
  const auto train = ElectricalPulseTrain::uniform(std::vector<double>{0.5, 0.5}, 0.0, 1e-9, 1e-9);
  const auto psi = pick(carve(train, hw, kCw, TimingMode::ThreeState), sched, hw);
  CVec m(2);
  m << std::sqrt(0.5), -std::sqrt(0.5);
  REQUIRE(psi.dimension() == 2);
  CHECK(fidelity_pure(psi, TimeBinState(psi.bin_times(), m, 1)) == doctest::Approx(1).epsilon(1e-12));

  CHECK_THROWS_AS(encode_minus_fast(hw, 200e6), InfeasibleError);
  auto off = hw;
  off.delta_t_asymm2 = 3e-9;
  CHECK_THROWS_AS(encode_minus_fast(off, 100e6), InfeasibleError);

  // 20 dB extinction: 1% of the power lands in the orthogonal superposition,
  // which is the X-basis error floor seen by a receiver at phase 0.
  hw.extinction_ratio = 100;
  const auto leaky = pick(carve(train, hw, kCw, TimingMode::ThreeState), sched, hw);
  ReceiverConfig rx;
  rx.delay = 1e-9;
  const auto dist = detection_probabilities(leaky, rx, 1.0);
  const double t = leaky.bin_times()[0] + rx.delay;
  const double p0 = dist.flux_near("port0", t, 0.1e-9);
  const double p1 = dist.flux_near("port1", t, 0.1e-9);
  CHECK(std::min(p0, p1) / (p0 + p1) == doctest::Approx(0.01).epsilon(1e-9));
}

}  // TEST_SUITE
