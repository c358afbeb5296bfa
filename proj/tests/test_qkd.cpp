#include <doctest.h>

#include <random>

#include "oracles/decoy_oracle.hpp"
#include "tbq/qkd.hpp"
#include "tbq/scenario.hpp"

using namespace tbq;

namespace {

struct Setup {
  QkdConfig cfg;
  HardwareConfig hw;
  LaserConfig laser;
  ReceiverConfig rx;
};

Setup replica() {
  const auto s = parse_scenario(TBQ_SCENARIO_DIR "/paper_replica.yaml");
  return {s.qkd->config, s.hardware, s.laser, s.receiver};
}

Setup ideal() {
  Setup s;
  s.hw.extinction_ratio = std::numeric_limits<double>::infinity();
  s.hw.photon_scale = 1.0;
  s.laser.coherence_visibility = 1.0;
  s.rx.dark_count_rate = 0;
  s.cfg.channel_loss_db = 10;
  return s;
}

}  // namespace

TEST_SUITE("qkd") {

TEST_CASE("sequence generation") {
  QkdConfig cfg;
  cfg.seed = 42;
  const auto a = generate_sequence(cfg);
  CHECK(a == generate_sequence(cfg));
  REQUIRE(a.size() == 512);
  double x = 0;
  for (const auto& s : a) x += s.basis() == Basis::X;
  // binomial expectation 66.6 with sigma 7.6
  CHECK(std::abs(x - 512 * 0.13) < 4 * std::sqrt(512 * 0.13 * 0.87));

  cfg.p_z = 1;
  cfg.p_x = 0;
  for (const auto& s : generate_sequence(cfg)) CHECK(s.basis() == Basis::Z);
  cfg.p_z = 0.8;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("binomial estimator") {
  const auto e = binomial_estimate(10, 1000);
  CHECK(e.value == doctest::Approx(0.01));
  CHECK(e.error == doctest::Approx(std::sqrt(0.01 * 0.99 / 1000)));
  CHECK(std::isnan(binomial_estimate(0, 0).value));

  std::mt19937_64 rng(3);
  std::bernoulli_distribution flip(0.03);
  int outside = 0;
  for (int rep = 0; rep < 200; ++rep) {
    double m = 0;
    for (int i = 0; i < 100000; ++i) m += flip(rng);
    const auto est = binomial_estimate(m, 100000);
    outside += std::abs(est.value - 0.03) > 3 * est.error;
  }
  CHECK(outside <= 3);
}

TEST_CASE("ideal hardware gives zero QBER") {
  const auto s = ideal();
  const auto r = expected_session(s.cfg, s.hw, s.laser, s.rx, 1e9);
  CHECK(r.qber_z.value == 0.0);
  CHECK(r.qber_x.value == 0.0);
  const auto mc = run_session(s.cfg, s.hw, s.laser, s.rx, 1e-3);
  CHECK(mc.counts.m(Basis::Z) == 0.0);
  CHECK(mc.counts.m(Basis::X) == 0.0);
  CHECK(mc.counts.n(Basis::X) > 0);
}

TEST_CASE("dark counts alone give QBER one half") {
  auto s = ideal();
  s.rx.dark_count_rate = 1e5;
  s.cfg.channel_loss_db = 300;
  const auto r = expected_session(s.cfg, s.hw, s.laser, s.rx, 1e9);
  CHECK(r.qber_z.value == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.qber_x.value == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("sifting conservation") {
  const auto s = replica();
  const auto r = run_session(s.cfg, s.hw, s.laser, s.rx, 2e-3);
  CHECK(r.sifted_z + r.sifted_x + r.discarded == r.total_detections);
  CHECK(r.sifted_z == r.counts.n(Basis::Z));
  const auto e = expected_session(s.cfg, s.hw, s.laser, s.rx, 1e9);
  CHECK(e.sifted_z + e.sifted_x + e.discarded == doctest::Approx(e.total_detections).epsilon(1e-12));
}

TEST_CASE("replica operating point") {
  const auto s = replica();
  const auto r = expected_session(s.cfg, s.hw, s.laser, s.rx, s.cfg.block_size);
  CHECK(r.qber_z.value < 0.01);
  CHECK(r.qber_x.value < 0.02);
  REQUIRE(r.skr.has_value());
  CHECK(*r.skr > 101.66e3 / 3);
  CHECK(*r.skr < 101.66e3 * 3);
}

TEST_CASE("finite key approaches the asymptotic oracle") {
  const auto s = replica();
  const auto r = expected_session(s.cfg, s.hw, s.laser, s.rx, 1e12);
  const double finite = finite_key_analysis(r.counts, s.cfg, r.duration).skr;
  const double asym = oracle::asymptotic_key(r.counts, s.cfg, r.duration).rate;
  REQUIRE(asym > 0);
  CHECK(finite <= asym);

  // the relative gap falls like 1/sqrt(block); at this operating point the
  // sparse X basis keeps it above 1% until past 1e12
  auto gap = [&](double block) {
    const auto r = expected_session(s.cfg, s.hw, s.laser, s.rx, block);
    return 1 - finite_key_analysis(r.counts, s.cfg, r.duration).skr /
                   oracle::asymptotic_key(r.counts, s.cfg, r.duration).rate;
  };
  CHECK(gap(1e12) == doctest::Approx(std::abs(finite - asym) / asym));
  const double g13 = gap(1e13), g14 = gap(1e14);
  CHECK(g13 < 0.01);
  CHECK(g13 / g14 == doctest::Approx(std::sqrt(10.0)).epsilon(0.05));
  CHECK(gap(1e10) > gap(1e11));
}

TEST_CASE("key rate is monotone in loss and phase error") {
  auto s = replica();
  double last = std::numeric_limits<double>::infinity();
  for (double loss = 0; loss <= 30; loss += 2.5) {
    s.cfg.channel_loss_db = loss;
    const auto r = expected_session(s.cfg, s.hw, s.laser, s.rx, 1e11);
    const double k = finite_key_analysis(r.counts, s.cfg, r.duration).skr;
    CHECK(k <= last * (1 + 1e-12));
    last = k;
  }

  s = replica();
  const auto base = expected_session(s.cfg, s.hw, s.laser, s.rx, 1e11);
  last = std::numeric_limits<double>::infinity();
  for (double extra = 0; extra <= 0.3; extra += 0.01) {
    auto c = base.counts;
    for (auto i : {Intensity::Signal, Intensity::Decoy}) c.at(Basis::X, i).m += extra * c.at(Basis::X, i).n;
    const auto fk = finite_key_analysis(c, s.cfg, base.duration);
    CHECK(fk.skr <= last * (1 + 1e-12));
    last = fk.skr;
  }
  CHECK(last == 0.0);
}

TEST_CASE("empty cells are rejected") {
  const auto s = replica();
  auto r = expected_session(s.cfg, s.hw, s.laser, s.rx, 1e9);
  r.counts.at(Basis::X, Intensity::Decoy).n = 0;
  CHECK_THROWS_WITH_AS(finite_key_analysis(r.counts, s.cfg, r.duration),
                       "insufficient statistics: no sifted X decoy detections", StatisticsError);

  auto z_only = s;
  z_only.cfg.p_z = 1;
  z_only.cfg.p_x = 0;
  const auto zr = expected_session(z_only.cfg, z_only.hw, z_only.laser, z_only.rx, 1e9);
  CHECK_FALSE(zr.skr.has_value());
  CHECK_FALSE(zr.skr_note.empty());
}

TEST_CASE("patterning table") {
  auto s = replica();
  s.cfg.patterning_coupling = 0;
  const auto r = run_session(s.cfg, s.hw, s.laser, s.rx, 5e-3);
  REQUIRE(r.patterning.size() == 16);
  std::size_t total = 0;
  for (const auto& c : r.patterning) {
    total += c.occurrences;
    CHECK(c.absent == (c.occurrences == 0));
    if (c.occurrences == 1) {
      CHECK(c.low_statistics);
      CHECK(c.std_qber == 0.0);
    }
  }
  CHECK(total == 512);

  // hand-built outcomes: (+ after -) once, (+ after +) never
  std::vector<PositionOutcome> pos{{{QkdState::Minus}, 10, 1}, {{QkdState::Plus}, 10, 2},
                                   {{QkdState::E}, 10, 0}, {{QkdState::E}, 10, 1}};
  const auto t = patterning_analysis(Protocol::FourState, pos);
  for (const auto& c : t) {
    if (c.current == QkdState::Plus && c.previous == QkdState::Minus) {
      CHECK(c.occurrences == 1);
      CHECK(c.low_statistics);
      CHECK(c.mean_qber == doctest::Approx(0.2));
    }
    if (c.current == QkdState::Plus && c.previous == QkdState::Plus) CHECK(c.absent);
  }
}

TEST_CASE("coupling makes the preceding symbol matter") {
  auto s = replica();
  s.cfg.patterning_coupling = 0.05;
  const auto r = expected_session(s.cfg, s.hw, s.laser, s.rx, 1e9);
  double after_l = 0, after_e = 0;
  for (const auto& c : r.patterning) {
    if (c.current != QkdState::L || c.occurrences == 0) continue;
    if (c.previous == QkdState::L) after_l = c.mean_qber;
    if (c.previous == QkdState::E) after_e = c.mean_qber;
  }
  CHECK(after_l > 2 * after_e);
  CHECK(after_l > 0);
}

TEST_CASE("parameter sweeps") {
  auto s = replica();
  const auto sweep = parameter_sweep(s.cfg, s.hw, s.laser, s.rx, SweepAxis::RepRate, {100e6, 200e6}, 1e-3);
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[0].feasible);
  CHECK_FALSE(sweep[1].feasible);
  CHECK_FALSE(sweep[1].reason.empty());

  const auto single = parameter_sweep(s.cfg, s.hw, s.laser, s.rx, SweepAxis::RepRate, {s.cfg.rep_rate}, 1e-3);
  const auto direct = run_session(s.cfg, s.hw, s.laser, s.rx, 1e-3);
  CHECK(single[0].result->counts.n(Basis::Z) == direct.counts.n(Basis::Z));
  CHECK(single[0].result->counts.m(Basis::X) == direct.counts.m(Basis::X));

  // alignment error scales as jitter / bin spacing
  s.cfg.alignment_jitter = 20e-12;
  s.cfg.rep_rate = 50e6;
  s.laser.mode = LaserMode::ContinuousWave;
  s.hw.delta_t_asymm2 = 12e-9;
  double last = 1;
  for (double dt : {1e-9, 2e-9, 4e-9}) {
    auto c = s.cfg;
    auto rx = s.rx;
    c.bin_spacing = dt;
    rx.delay = dt;
    const auto r = expected_session(c, s.hw, s.laser, rx, 1e9);
    CHECK(r.qber_z.value < last);
    last = r.qber_z.value;
  }
}

}  // TEST_SUITE
