#include "tbq/qkd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <limits>
#include <random>

#include "tbq/random.hpp"

namespace tbq {

const char* to_string(QkdState s) {
  switch (s) {
    case QkdState::E: return "E";
    case QkdState::L: return "L";
    case QkdState::Plus: return "+";
    case QkdState::Minus: return "-";
  }
  return "?";
}

const char* to_string(Protocol p) {
  return p == Protocol::ThreeState ? "three-state" : "four-state";
}

void QkdConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0 && p <= 1)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
  };
  if (!(rep_rate > 0) || !std::isfinite(rep_rate)) throw ConfigError("rep_rate must be > 0");
  if (!(bin_spacing > 0)) throw ConfigError("bin_spacing must be > 0");
  if (!(mu > nu && nu >= 0)) throw ConfigError("intensities must satisfy mu > nu >= 0");
  prob(p_mu, "p_mu");
  prob(p_nu, "p_nu");
  prob(p_z, "p_z");
  prob(p_x, "p_x");
  if (std::abs(p_mu + p_nu - 1) > 1e-9) throw ConfigError("p_mu + p_nu must equal 1");
  if (std::abs(p_z + p_x - 1) > 1e-9) throw ConfigError("p_z + p_x must equal 1");
  if (!(epsilon_sec > 0 && epsilon_sec < 1)) throw ConfigError("epsilon_sec must lie in (0, 1)");
  if (!(epsilon_cor > 0 && epsilon_cor < 1)) throw ConfigError("epsilon_cor must lie in (0, 1)");
  if (!(ec_efficiency >= 1)) throw ConfigError("ec_efficiency must be >= 1");
  if (!(channel_loss_db >= 0)) throw ConfigError("channel_loss_db must be >= 0");
  if (!(block_size > 0)) throw ConfigError("block_size must be > 0");
  if (sequence_length == 0) throw ConfigError("sequence_length must be > 0");
  if (!(alignment_jitter >= 0)) throw ConfigError("alignment_jitter must be >= 0");
  if (!(patterning_coupling >= 0 && patterning_coupling <= 1)) {
    throw ConfigError("patterning_coupling must lie in [0, 1]");
  }
  if (qber_windows == 0) throw ConfigError("qber_windows must be > 0");
}

std::vector<QkdSymbol> generate_sequence(const QkdConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "qkd:sequence"));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<QkdSymbol> seq(cfg.sequence_length);
  for (auto& s : seq) {
    const bool z = u(rng) < cfg.p_z;
    const bool second = u(rng) < 0.5;
    if (z) {
      s.state = second ? QkdState::L : QkdState::E;
    } else if (cfg.protocol == Protocol::ThreeState) {
      s.state = QkdState::Minus;
    } else {
      s.state = second ? QkdState::Minus : QkdState::Plus;
    }
    s.intensity = u(rng) < cfg.p_mu ? Intensity::Signal : Intensity::Decoy;
  }
  return seq;
}

Estimate binomial_estimate(double errors, double n) {
  if (!(n > 0)) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double p = errors / n;
  return {p, std::sqrt(std::max(0.0, p * (1 - p)) / n)};
}

namespace {

EmissionWindow symbol_window(const QkdConfig& cfg, const LaserConfig& laser) {
  const double period = 1.0 / cfg.rep_rate;
  const double stop = period - (laser.mode == LaserMode::GainSwitched ? laser.t_off : 0.0);
  if (!(stop > 0)) throw InfeasibleError("laser off-time leaves no emission window at this rate");
  const WindowRequest req{0.0, stop};
  return emission_schedule(laser, std::span<const WindowRequest>(&req, 1)).front();
}

double first_center(const EmissionWindow& w, const HardwareConfig& hw) {
  const double start = std::isfinite(w.steady_from) ? w.steady_from : 0.0;
  return start + 0.5 * hw.carving_width;
}

ElectricalPulseTrain symbol_train(const QkdConfig& cfg, const HardwareConfig& hw, double t0,
                                  const std::vector<double>& volts) {
  return ElectricalPulseTrain::uniform(volts, t0, cfg.bin_spacing, hw.carving_width);
}

TimingMode timing_mode(const QkdConfig& cfg) {
  return cfg.protocol == Protocol::ThreeState ? TimingMode::ThreeState : TimingMode::General;
}

// Bob's passive basis split follows Alice's basis bias.
ReceiverConfig qkd_receiver(const QkdConfig& cfg, ReceiverConfig rx) {
  rx.tap_ratio = std::clamp(cfg.p_z, 1e-9, 1.0 - 1e-9);
  return rx;
}

struct ClickProbs {
  std::array<double, 4> p{};  // z_early, z_late, x_port0, x_port1
};

ClickProbs click_probs(const GateFlux& f, const GateFlux& prev, double coupling, double p_dark) {
  const double fl[4] = {f.z_early + coupling * prev.z_late, f.z_late, f.x_port0, f.x_port1};
  ClickProbs c;
  for (int i = 0; i < 4; ++i) c.p[static_cast<std::size_t>(i)] = 1.0 - std::exp(-fl[i]) * (1.0 - p_dark);
  return c;
}

int symbol_index(const QkdSymbol& s) {
  return static_cast<int>(s.state) * 2 + static_cast<int>(s.intensity);
}

const GateFlux& flux_of(const std::array<std::array<GateFlux, 2>, 4>& table, const QkdSymbol& s) {
  return table[static_cast<std::size_t>(s.state)][static_cast<std::size_t>(s.intensity)];
}

void finish_estimates(SessionResult& r) {
  r.sifted_z = r.counts.n(Basis::Z);
  r.sifted_x = r.counts.n(Basis::X);
  r.qber_z = binomial_estimate(r.counts.m(Basis::Z), r.sifted_z);
  r.qber_x = binomial_estimate(r.counts.m(Basis::X), r.sifted_x);
  for (auto& w : r.windows) {
    w.qber_z = binomial_estimate(w.counts.m(Basis::Z), w.counts.n(Basis::Z));
    w.qber_x = binomial_estimate(w.counts.m(Basis::X), w.counts.n(Basis::X));
    w.flagged = !(w.counts.n(Basis::Z) > 0) || !(w.counts.n(Basis::X) > 0);
  }
}

void attach_key_rates(SessionResult& r, const QkdConfig& cfg) {
  try {
    r.skr = finite_key_skr(r, cfg);
  } catch (const StatisticsError& e) {
    r.skr.reset();
    r.skr_note = e.what();
  }
  for (auto& w : r.windows) {
    try {
      w.skr = finite_key_analysis(w.counts, cfg, w.t_end - w.t_start).skr;
    } catch (const StatisticsError&) {
      w.skr.reset();
    }
  }
}

std::vector<QberWindow> make_windows(const QkdConfig& cfg, double duration) {
  std::vector<QberWindow> ws(cfg.qber_windows);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    ws[i].t_start = duration * static_cast<double>(i) / static_cast<double>(ws.size());
    ws[i].t_end = duration * static_cast<double>(i + 1) / static_cast<double>(ws.size());
  }
  return ws;
}

}  // namespace

void check_session_timing(const QkdConfig& cfg, const HardwareConfig& hw, const LaserConfig& laser) {
  cfg.validate();
  hw.validate();
  laser.validate();
  if (laser.mode == LaserMode::GainSwitched && !(cfg.rep_rate < max_repetition_rate(laser))) {
    throw InfeasibleError("repetition rate exceeds the gain-switching bound 1/(t_ss + t_off)");
  }
  const auto window = symbol_window(cfg, laser);
  const std::vector<double> volts(2, 0.5 * hw.v_pi);
  const auto train = symbol_train(cfg, hw, first_center(window, hw), volts);
  const auto verdict = check_timing(train, hw, timing_mode(cfg));
  if (!verdict.feasible) throw InfeasibleError(verdict.report);
  if (!verdict.admits(cfg.rep_rate)) {
    std::ostringstream os;
    os << "repetition rate " << cfg.rep_rate << " Hz exceeds the timing bound " << verdict.max_rate << " Hz";
    throw InfeasibleError(os.str());
  }
  const double last_end = train.pulses.back().center + 0.5 * hw.carving_width;
  if (last_end > window.stop + kTimeTolerance) {
    throw InfeasibleError("symbol does not fit inside the emission window at this rate");
  }
}

TimeBinState encode_symbol(const QkdConfig& cfg, const HardwareConfig& hw, const LaserConfig& laser,
                           QkdState state, Intensity intensity) {
  const auto window = symbol_window(cfg, laser);
  const double target = intensity == Intensity::Signal ? cfg.mu : cfg.nu;

  std::vector<double> weights{1.0, 1.0};
  if (state == QkdState::E) weights[1] = 0.0;
  if (state == QkdState::L) weights[0] = 0.0;
  const auto volts = set_decoy_intensity(weights, target, hw);
  const auto train = symbol_train(cfg, hw, first_center(window, hw), volts);

  PickSchedule schedule;
  if (state == QkdState::Minus && cfg.protocol == Protocol::ThreeState) {
    schedule = encode_minus_fast(hw, cfg.rep_rate);
  } else {
    const std::vector<double> phases{0.0, state == QkdState::Minus ? kPi : 0.0};
    schedule = PickSchedule::keep_early(phases);
  }
  return encode(train, schedule, hw, window, timing_mode(cfg));
}

std::array<std::array<GateFlux, 2>, 4> symbol_fluxes(const QkdConfig& cfg, const HardwareConfig& hw,
                                                     const LaserConfig& laser,
                                                     const ReceiverConfig& rx_in) {
  check_session_timing(cfg, hw, laser);
  const auto rx = qkd_receiver(cfg, rx_in);
  rx.validate();
  const auto window = symbol_window(cfg, laser);
  const double t_early = first_center(window, hw) - 0.5 * hw.carving_width;
  const double t_late = t_early + cfg.bin_spacing;
  const double half = 0.5 * rx.time_gate;
  const double transmittance = db_to_transmittance(cfg.channel_loss_db + hw.insertion_loss_db);
  const double v_src = pairwise_visibility(laser, true);
  const double misalign = std::min(0.5, cfg.alignment_jitter / cfg.bin_spacing);

  std::array<std::array<GateFlux, 2>, 4> table{};
  for (int s = 0; s < 4; ++s) {
    const auto state = static_cast<QkdState>(s);
    if (cfg.protocol == Protocol::ThreeState && state == QkdState::Plus) continue;
    for (int i = 0; i < 2; ++i) {
      const auto psi = encode_symbol(cfg, hw, laser, state, static_cast<Intensity>(i));
      const auto dist = detection_probabilities(psi, rx, v_src, transmittance);
      GateFlux f{dist.flux_near("toa", t_early, half), dist.flux_near("toa", t_late, half),
                 dist.flux_near("port0", t_late, half), dist.flux_near("port1", t_late, half)};
      GateFlux g = f;
      g.z_early = (1 - misalign) * f.z_early + misalign * f.z_late;
      g.z_late = (1 - misalign) * f.z_late + misalign * f.z_early;
      g.x_port0 = (1 - misalign) * f.x_port0 + misalign * f.x_port1;
      g.x_port1 = (1 - misalign) * f.x_port1 + misalign * f.x_port0;
      table[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] = g;
    }
  }
  return table;
}

SessionResult run_session(const QkdConfig& cfg, const HardwareConfig& hw, const LaserConfig& laser,
                          const ReceiverConfig& rx, double duration) {
  if (!(duration > 0)) throw ConfigError("session duration must be > 0");
  const auto table = symbol_fluxes(cfg, hw, laser, rx);
  const double p_dark = rx.dark_probability();

  SessionResult r;
  r.duration = duration;
  r.sequence = generate_sequence(cfg);
  const std::size_t len = r.sequence.size();
  const auto states = static_cast<std::uint64_t>(std::llround(cfg.rep_rate * duration));
  r.states_sent = static_cast<double>(states);
  r.windows = make_windows(cfg, duration);
  r.positions.resize(len);
  for (std::size_t j = 0; j < len; ++j) r.positions[j].symbol = r.sequence[j];

  std::array<std::array<ClickProbs, 8>, 8> probs{};
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      const QkdSymbol cur{static_cast<QkdState>(a / 2), static_cast<Intensity>(a % 2)};
      const QkdSymbol prev{static_cast<QkdState>(b / 2), static_cast<Intensity>(b % 2)};
      probs[a][b] = click_probs(flux_of(table, cur), flux_of(table, prev), cfg.patterning_coupling, p_dark);
    }
  }
  std::vector<int> idx(len);
  for (std::size_t j = 0; j < len; ++j) idx[j] = symbol_index(r.sequence[j]);

  Rng rng(derive_seed(cfg.seed, "qkd:session"));
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double nwin = static_cast<double>(r.windows.size());

  for (std::uint64_t k = 0; k < states; ++k) {
    const std::size_t j = static_cast<std::size_t>(k % len);
    const std::size_t jp = (j + len - 1) % len;
    const auto& cp = probs[static_cast<std::size_t>(idx[j])][static_cast<std::size_t>(idx[jp])].p;
    const bool e = uniform() < cp[0];
    const bool l = uniform() < cp[1];
    const bool x0 = uniform() < cp[2];
    const bool x1 = uniform() < cp[3];
    const bool zc = e || l;
    const bool xc = x0 || x1;
    if (!zc && !xc) continue;
    r.total_detections += 1;

    Basis bob = zc ? Basis::Z : Basis::X;
    if (zc && xc) bob = uniform() < 0.5 ? Basis::Z : Basis::X;
    int bit;
    if (bob == Basis::Z) {
      bit = (e && l) ? (uniform() < 0.5 ? 0 : 1) : (e ? 0 : 1);
    } else {
      bit = (x0 && x1) ? (uniform() < 0.5 ? 0 : 1) : (x0 ? 0 : 1);
    }
    const auto& sym = r.sequence[j];
    if (bob != sym.basis()) {
      r.discarded += 1;
      continue;
    }
    const double err = bit != bit_of(sym.state) ? 1.0 : 0.0;
    auto& cell = r.counts.at(bob, sym.intensity);
    cell.n += 1;
    cell.m += err;
    auto w = static_cast<std::size_t>(static_cast<double>(k) * nwin / static_cast<double>(states));
    auto& wc = r.windows[std::min(w, r.windows.size() - 1)].counts.at(bob, sym.intensity);
    wc.n += 1;
    wc.m += err;
    r.positions[j].sifted += 1;
    r.positions[j].errors += err;
  }

  finish_estimates(r);
  r.patterning = patterning_analysis(cfg.protocol, r.positions);
  attach_key_rates(r, cfg);
  return r;
}

SessionResult expected_session(const QkdConfig& cfg, const HardwareConfig& hw,
                               const LaserConfig& laser, const ReceiverConfig& rx, double states) {
  if (!(states > 0)) throw ConfigError("number of states must be > 0");
  const auto table = symbol_fluxes(cfg, hw, laser, rx);
  const double p_dark = rx.dark_probability();

  SessionResult r;
  r.duration = states / cfg.rep_rate;
  r.states_sent = states;
  r.sequence = generate_sequence(cfg);
  const std::size_t len = r.sequence.size();
  const double per_position = states / static_cast<double>(len);
  r.windows = make_windows(cfg, r.duration);
  r.positions.resize(len);

  for (std::size_t j = 0; j < len; ++j) {
    const auto& sym = r.sequence[j];
    const auto& prev = r.sequence[(j + len - 1) % len];
    const auto cp = click_probs(flux_of(table, sym), flux_of(table, prev), cfg.patterning_coupling, p_dark).p;
    const double qz = 1 - (1 - cp[0]) * (1 - cp[1]);
    const double qx = 1 - (1 - cp[2]) * (1 - cp[3]);
    const double any = 1 - (1 - qz) * (1 - qx);
    const double wz = 1 - 0.5 * qx;
    const double wx = 1 - 0.5 * qz;
    // P(Bob basis, bit) under random assignment of double clicks.
    const double z0 = wz * (cp[0] * (1 - cp[1]) + 0.5 * cp[0] * cp[1]);
    const double z1 = wz * (cp[1] * (1 - cp[0]) + 0.5 * cp[0] * cp[1]);
    const double x0 = wx * (cp[2] * (1 - cp[3]) + 0.5 * cp[2] * cp[3]);
    const double x1 = wx * (cp[3] * (1 - cp[2]) + 0.5 * cp[2] * cp[3]);

    const bool z = sym.basis() == Basis::Z;
    const double sifted = z ? z0 + z1 : x0 + x1;
    const double wrong = bit_of(sym.state) == 0 ? (z ? z1 : x1) : (z ? z0 : x0);

    r.total_detections += per_position * any;
    r.discarded += per_position * (any - sifted);
    auto& cell = r.counts.at(sym.basis(), sym.intensity);
    cell.n += per_position * sifted;
    cell.m += per_position * wrong;
    r.positions[j] = {sym, per_position * sifted, per_position * wrong};
  }
  for (auto& w : r.windows) {
    for (int b = 0; b < 2; ++b) {
      for (int i = 0; i < 2; ++i) {
        w.counts.cell[b][i].n = r.counts.cell[b][i].n / static_cast<double>(r.windows.size());
        w.counts.cell[b][i].m = r.counts.cell[b][i].m / static_cast<double>(r.windows.size());
      }
    }
  }

  finish_estimates(r);
  r.patterning = patterning_analysis(cfg.protocol, r.positions);
  attach_key_rates(r, cfg);
  return r;
}

namespace {

double hoeffding(double n, double eps) { return std::sqrt(0.5 * n * std::log(21.0 / eps)); }

double gamma_correction(double eps, double phi, double c, double d) {
  if (!(phi > 0 && phi < 1)) return 0.0;
  const double a = (c + d) * (1 - phi) * phi / (c * d * std::log(2.0));
  const double b = (c + d) / (c * d * (1 - phi) * phi) * (21.0 * 21.0) / (eps * eps);
  return std::sqrt(a * std::log2(b));
}

struct BasisBounds {
  double s0_lower = 0;
  double s0_upper = 0;
  double s1_lower = 0;
};

// Vacuum and single-photon bounds for one basis from the two intensities.
BasisBounds decoy_bounds(const SiftedCounts& c, Basis b, const QkdConfig& cfg, double tau0,
                         double tau1) {
  const double mu = cfg.mu;
  const double nu = cfg.nu;
  const double n_total = c.n(b);
  const double m_total = c.m(b);
  const double dn = hoeffding(n_total, cfg.epsilon_sec);
  const double dm = hoeffding(m_total, cfg.epsilon_sec);
  const double n_mu = c.at(b, Intensity::Signal).n;
  const double n_nu = c.at(b, Intensity::Decoy).n;
  const double m_nu = c.at(b, Intensity::Decoy).m;

  const double n_mu_plus = std::exp(mu) / cfg.p_mu * (n_mu + dn);
  const double n_nu_minus = std::exp(nu) / cfg.p_nu * (n_nu - dn);

  BasisBounds out;
  out.s0_lower = std::max(0.0, tau0 / (mu - nu) * (mu * n_nu_minus - nu * n_mu_plus));
  out.s0_upper = 2.0 * (tau0 * std::exp(nu) / cfg.p_nu * m_nu + dm);
  out.s0_upper = std::min(out.s0_upper, n_total);
  out.s1_lower = tau1 * mu / (nu * (mu - nu)) *
                 (n_nu_minus - (nu * nu) / (mu * mu) * n_mu_plus -
                  (mu * mu - nu * nu) / (mu * mu) * out.s0_upper / tau0);
  return out;
}

}  // namespace

FiniteKeyBreakdown finite_key_analysis(const SiftedCounts& counts, const QkdConfig& cfg,
                                       double duration) {
  cfg.validate();
  if (!(duration > 0)) throw ConfigError("duration must be > 0");
  const char* names[2][2] = {{"Z signal", "Z decoy"}, {"X signal", "X decoy"}};
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 2; ++i) {
      if (!(counts.cell[b][i].n > 0)) {
        throw StatisticsError(std::string("insufficient statistics: no sifted ") + names[b][i] +
                              " detections");
      }
    }
  }

  const double mu = cfg.mu;
  const double nu = cfg.nu;
  const double tau0 = cfg.p_mu * std::exp(-mu) + cfg.p_nu * std::exp(-nu);
  const double tau1 = cfg.p_mu * std::exp(-mu) * mu + cfg.p_nu * std::exp(-nu) * nu;

  const auto z = decoy_bounds(counts, Basis::Z, cfg, tau0, tau1);
  const auto x = decoy_bounds(counts, Basis::X, cfg, tau0, tau1);

  FiniteKeyBreakdown out;
  out.s_z0 = z.s0_lower;
  out.s_z1 = z.s1_lower;
  out.s_x1 = x.s1_lower;

  const double dm = hoeffding(counts.m(Basis::X), cfg.epsilon_sec);
  const double m_mu_plus = std::exp(mu) / cfg.p_mu * (counts.at(Basis::X, Intensity::Signal).m + dm);
  const double m_nu_minus = std::exp(nu) / cfg.p_nu * (counts.at(Basis::X, Intensity::Decoy).m - dm);
  out.v_x1 = std::max(0.0, tau1 / (mu - nu) * (m_mu_plus - m_nu_minus));

  const double qz = counts.m(Basis::Z) / counts.n(Basis::Z);
  out.leak_ec = cfg.ec_efficiency * counts.n(Basis::Z) * binary_entropy(qz);

  if (!(out.s_z1 > 0) || !(out.s_x1 > 0)) {
    out.phase_error = 0.5;
    return out;
  }
  const double ratio = out.v_x1 / out.s_x1;
  out.phase_error = std::min(0.5, ratio + gamma_correction(cfg.epsilon_sec, ratio, out.s_z1, out.s_x1));
  out.key_length = out.s_z0 + out.s_z1 * (1 - binary_entropy(out.phase_error)) - out.leak_ec -
                   6 * std::log2(21.0 / cfg.epsilon_sec) - std::log2(2.0 / cfg.epsilon_cor);
  out.skr = std::max(0.0, out.key_length) / duration;
  return out;
}

double finite_key_skr(const SessionResult& result, const QkdConfig& cfg) {
  return finite_key_analysis(result.counts, cfg, result.duration).skr;
}

std::vector<PatterningCell> patterning_analysis(Protocol protocol,
                                                const std::vector<PositionOutcome>& positions) {
  std::vector<QkdState> alphabet{QkdState::E, QkdState::L, QkdState::Plus, QkdState::Minus};
  if (protocol == Protocol::ThreeState) alphabet = {QkdState::E, QkdState::L, QkdState::Minus};
  const std::size_t len = positions.size();

  std::vector<PatterningCell> table;
  for (auto cur : alphabet) {
    for (auto prev : alphabet) {
      PatterningCell cell;
      cell.current = cur;
      cell.previous = prev;
      std::vector<double> q;
      for (std::size_t j = 0; j < len; ++j) {
        if (positions[j].symbol.state != cur) continue;
        if (positions[(j + len - 1) % len].symbol.state != prev) continue;
        ++cell.occurrences;
        if (positions[j].sifted > 0) q.push_back(positions[j].errors / positions[j].sifted);
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      cell.absent = cell.occurrences == 0;
      cell.low_statistics = q.size() < 2;
      if (q.empty()) {
        cell.mean_qber = nan;
        cell.std_qber = nan;
      } else {
        double mean = 0;
        for (double v : q) mean += v;
        mean /= static_cast<double>(q.size());
        double var = 0;
        for (double v : q) var += (v - mean) * (v - mean);
        cell.mean_qber = mean;
        cell.std_qber = q.size() > 1 ? std::sqrt(var / static_cast<double>(q.size() - 1)) : 0.0;
      }
      table.push_back(cell);
    }
  }
  return table;
}

std::vector<SweepPoint> parameter_sweep(const QkdConfig& cfg, const HardwareConfig& hw,
                                        const LaserConfig& laser, const ReceiverConfig& rx,
                                        SweepAxis axis, const std::vector<double>& values,
                                        double duration) {
  std::vector<SweepPoint> out;
  for (double v : values) {
    SweepPoint pt;
    pt.axis = axis;
    pt.value = v;
    QkdConfig c = cfg;
    ReceiverConfig r = rx;
    if (axis == SweepAxis::RepRate) {
      c.rep_rate = v;
    } else {
      c.bin_spacing = v;
      r.delay = v;
    }
    try {
      pt.result = run_session(c, hw, laser, r, duration);
      pt.feasible = true;
    } catch (const InfeasibleError& e) {
      pt.reason = e.what();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace tbq
