#include "tbq/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>

#include "tbq/analysis.hpp"
#include "tbq/encoder.hpp"
#include "tbq/entanglement.hpp"
#include "tbq/io.hpp"
#include "tbq/qkd.hpp"
#include "tbq/random.hpp"
#include "tbq/receiver.hpp"
#include "tbq/tomography.hpp"

#ifndef TBQ_VERSION
#define TBQ_VERSION "dev"
#endif

namespace tbq::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"encode", "check-timing", "qkd",  "sweep",
                                              "allan",  "randomization", "tomo", "entangle"};
  return names;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InfeasibleError*>(&e)) return kExitInfeasible;
  if (dynamic_cast<const StatisticsError*>(&e)) return kExitStatistics;
  return kExitConfig;
}

namespace {

template <typename T>
const T& need(const std::optional<T>& section, const char* name) {
  if (!section) throw ConfigError(std::string("missing section '") + name + "' in scenario");
  return *section;
}

struct Artifacts {
  fs::path dir;
  std::vector<std::string> names;

  void csv(const std::string& name, const CsvTable& t) {
    t.write(dir / name);
    names.push_back(name);
  }
  void json_file(const std::string& name, const json& j) {
    write_json(dir / name, j);
    names.push_back(name);
  }
};

std::vector<double> full_period_grid(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
  return g;
}

json estimate_json(const Estimate& e) { return {{"value", json_number(e.value)}, {"error", json_number(e.error)}}; }

json counts_json(const SiftedCounts& c) {
  json j;
  const char* b[2] = {"z", "x"};
  const char* i[2] = {"signal", "decoy"};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) j[b[x]][i[y]] = {{"sifted", c.cell[x][y].n}, {"errors", c.cell[x][y].m}};
  return j;
}

ElectricalPulseTrain encode_train(const Scenario& sc, const EncodeSection& e, EmissionWindow* window_out) {
  const double period = 1.0 / e.rep_rate;
  const double stop = period - (sc.laser.mode == LaserMode::GainSwitched ? sc.laser.t_off : 0.0);
  if (!(stop > 0)) throw InfeasibleError("laser off-time leaves no emission window at this rate");
  const WindowRequest req{0.0, stop};
  const auto window = emission_schedule(sc.laser, std::span<const WindowRequest>(&req, 1)).front();
  if (window_out) *window_out = window;
  const double start = std::isfinite(window.steady_from) ? window.steady_from : 0.0;
  return ElectricalPulseTrain::uniform(e.voltages, start + 0.5 * sc.hardware.carving_width, e.spacing,
                                       sc.hardware.carving_width);
}

json verdict_json(const TimingVerdict& v, double rate) {
  return {{"feasible", v.feasible},
          {"condition", to_string(v.condition)},
          {"max_rate_hz", json_number(v.max_rate)},
          {"rep_rate_hz", rate},
          {"admits_rep_rate", v.admits(rate)},
          {"report", v.report}};
}

void cmd_check_timing(const Scenario& sc, Artifacts& out, std::ostream& log) {
  const auto& e = need(sc.encode, "encode");
  const auto train = encode_train(sc, e, nullptr);
  const auto v = check_timing(train, sc.hardware, e.mode);
  out.json_file("timing.json", verdict_json(v, e.rep_rate));
  log << "timing: " << v.report << "\n";
  if (!v.feasible) throw InfeasibleError(v.report);
  if (!v.admits(e.rep_rate)) {
    throw InfeasibleError("repetition rate " + format_number(e.rep_rate) + " Hz exceeds the bound " +
                          format_number(v.max_rate) + " Hz set by the pulse span and delays");
  }
}

void cmd_encode(const Scenario& sc, Artifacts& out, std::ostream& log) {
  const auto& e = need(sc.encode, "encode");
  EmissionWindow window{};
  const auto train = encode_train(sc, e, &window);
  const auto v = check_timing(train, sc.hardware, e.mode);
  out.json_file("timing.json", verdict_json(v, e.rep_rate));
  if (!v.feasible) throw InfeasibleError(v.report);

  std::vector<std::string> warnings;
  const auto pairs = carve(train, sc.hardware, window, e.mode, &warnings);
  CsvTable t({"index", "early_time", "late_time", "width", "weight", "edge_skew"});
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    t.row(cells(i, pairs[i].early_time, pairs[i].late_time, pairs[i].width, pairs[i].weight, pairs[i].edge_skew));
  }
  out.csv("carved_pairs.csv", t);
  const auto psi = pick(pairs, PickSchedule::keep_early(e.phases), sc.hardware);
  json j = state_json(psi);
  j["warnings"] = warnings;
  out.json_file("state.json", j);
  for (const auto& w : warnings) log << "warning: " << w << "\n";
  log << "encoded d=" << psi.dimension() << " state with <n> = " << psi.mean_photon() << "\n";
}

void write_patterning(const std::vector<PatterningCell>& table, Artifacts& out) {
  std::vector<QkdState> order;
  for (const auto& c : table) {
    if (std::find(order.begin(), order.end(), c.current) == order.end()) order.push_back(c.current);
  }
  std::vector<std::string> header{"current"};
  for (auto s : order) header.push_back(std::string("after ") + to_string(s));
  CsvTable matrix(header);
  for (auto cur : order) {
    std::vector<std::string> row{to_string(cur)};
    for (auto prev : order) {
      for (const auto& c : table) {
        if (c.current == cur && c.previous == prev) row.push_back(c.absent ? "absent" : format_number(c.mean_qber));
      }
    }
    matrix.row(row);
  }
  out.csv("patterning.csv", matrix);

  CsvTable detail({"current", "previous", "mean_qber", "std_qber", "occurrences", "low_statistics", "absent"});
  for (const auto& c : table) {
    detail.row(cells(to_string(c.current), to_string(c.previous), c.mean_qber, c.std_qber, c.occurrences,
                     c.low_statistics, c.absent));
  }
  out.csv("patterning_detail.csv", detail);
}

json session_json(const SessionResult& r) {
  json j{{"duration_s", r.duration},
         {"states_sent", r.states_sent},
         {"total_detections", r.total_detections},
         {"sifted_z", r.sifted_z},
         {"sifted_x", r.sifted_x},
         {"discarded", r.discarded},
         {"qber_z", estimate_json(r.qber_z)},
         {"qber_x", estimate_json(r.qber_x)},
         {"counts", counts_json(r.counts)}};
  j["skr_bps"] = r.skr ? json(*r.skr) : json(nullptr);
  if (!r.skr_note.empty()) j["skr_note"] = r.skr_note;
  return j;
}

void cmd_qkd(const Scenario& sc, Artifacts& out, std::ostream& log) {
  const auto& q = need(sc.qkd, "qkd");
  const auto mc = run_session(q.config, sc.hardware, sc.laser, sc.receiver, q.duration);
  const auto ex = expected_session(q.config, sc.hardware, sc.laser, sc.receiver, q.config.block_size);

  CsvTable series({"time_window", "t_start", "t_end", "sifted_z", "sifted_x", "qber_z", "qber_z_err", "qber_x",
                   "qber_x_err", "flagged", "skr"});
  for (std::size_t i = 0; i < mc.windows.size(); ++i) {
    const auto& w = mc.windows[i];
    series.row(cells(i, w.t_start, w.t_end, w.counts.n(Basis::Z), w.counts.n(Basis::X), w.qber_z.value,
                     w.qber_z.error, w.qber_x.value, w.qber_x.error, w.flagged,
                     w.skr ? format_number(*w.skr) : std::string()));
  }
  out.csv("qber_timeseries.csv", series);
  write_patterning(mc.patterning, out);

  json summary{{"protocol", to_string(q.config.protocol)},
               {"monte_carlo", session_json(mc)},
               {"analytic", session_json(ex)}};
  try {
    const auto fk = finite_key_analysis(ex.counts, q.config, ex.duration);
    summary["analytic"]["finite_key"] = {{"s_z0", fk.s_z0},       {"s_z1", fk.s_z1},
                                         {"s_x1", fk.s_x1},       {"v_x1", fk.v_x1},
                                         {"phase_error", fk.phase_error}, {"leak_ec", fk.leak_ec},
                                         {"key_length", fk.key_length}};
  } catch (const StatisticsError& e) {
    summary["analytic"]["finite_key"] = {{"error", e.what()}};
  }
  out.json_file("skr_summary.json", summary);
  log << "QBER_Z = " << format_number(mc.qber_z.value) << ", QBER_X = " << format_number(mc.qber_x.value)
      << ", analytic SKR = " << (ex.skr ? format_number(*ex.skr) : std::string("n/a")) << " b/s\n";
}

void cmd_sweep(const Scenario& sc, Artifacts& out, std::ostream& log) {
  const auto& q = need(sc.qkd, "qkd");
  const auto& s = need(sc.sweep, "sweep");
  const auto points = parameter_sweep(q.config, sc.hardware, sc.laser, sc.receiver, s.axis, s.values, s.duration);
  CsvTable t({"axis", "value", "feasible", "reason", "qber_z", "qber_z_err", "qber_x", "qber_x_err", "sifted_z",
              "sifted_x"});
  const char* axis = s.axis == SweepAxis::RepRate ? "rep_rate" : "bin_spacing";
  for (const auto& p : points) {
    if (p.result) {
      const auto& r = *p.result;
      t.row(cells(axis, p.value, true, "", r.qber_z.value, r.qber_z.error, r.qber_x.value, r.qber_x.error,
                  r.sifted_z, r.sifted_x));
    } else {
      t.row(cells(axis, p.value, false, p.reason, "", "", "", "", "", ""));
      log << "infeasible sweep point " << format_number(p.value) << ": " << p.reason << "\n";
    }
  }
  out.csv("sweep.csv", t);
}

// Phase series recovered from two-quadrature uMZI histograms per interval.
PhaseSeries measured_series(const Scenario& sc, const AllanSection& a, const std::vector<double>& drift,
                            const std::string& label) {
  const CVec plus = CVec::Constant(2, std::complex<double>(std::sqrt(0.5), 0));
  const auto model = TimeBinState::on_grid(0.0, sc.receiver.delay, plus, a.mean_photon);
  ReceiverConfig rq = sc.receiver;
  rq.phase += kPi / 2;
  const auto shots = static_cast<std::uint64_t>(std::llround(a.shots));
  std::vector<double> wrapped(drift.size());
  for (std::size_t n = 0; n < drift.size(); ++n) {
    const std::vector<double> ph{0.0, drift[n]};
    const auto psi = model.with_phases(ph);
    const auto hi = sample_clicks(detection_probabilities(psi, sc.receiver, 1.0), shots, sc.receiver,
                                  derive_seed(sc.seed, "allan:" + label + ":i", n));
    const auto hq = sample_clicks(detection_probabilities(psi, rq, 1.0), shots, rq,
                                  derive_seed(sc.seed, "allan:" + label + ":q", n));
    wrapped[n] = estimate_phase(hi, hq, model, sc.receiver).phase;
  }
  return {a.interval, unwrap(wrapped)};
}

void cmd_allan(const Scenario& sc, Artifacts& out, std::ostream& log) {
  const auto& a = need(sc.allan, "allan");
  const auto walk = random_walk_reference(a.drift_step, a.interval, a.length, derive_seed(sc.seed, "allan:drift"));
  const std::vector<double> still(a.length, 0.0);
  const auto encoder = measured_series(sc, a, still, "encoder");
  const auto umzi = measured_series(sc, a, walk.values, "umzi");
  const auto taus = octave_taus(encoder);
  const auto cmp = compare_stability(encoder, umzi, taus, a.scaling);
  const auto reference = allan_deviation(walk, taus, a.scaling);

  CsvTable t({"series", "tau", "sigma", "ci_low", "ci_high", "terms"});
  auto add = [&t](const char* name, const std::vector<AllanPoint>& curve) {
    for (const auto& p : curve) t.row(cells(name, p.tau, p.sigma, p.ci_low, p.ci_high, p.terms));
  };
  add("encoder", cmp.encoder);
  add("umzi", cmp.umzi);
  add("reference", reference);
  out.csv("allan.csv", t);
  out.json_file("allan_summary.json",
                {{"scaling", a.scaling == AllanScaling::PerTau ? "per-tau" : "per-sample"},
                 {"encoder_at_or_below_umzi", cmp.encoder_at_or_below},
                 {"reference_loglog_slope", loglog_slope(reference)}});
  log << "encoder at or below uMZI for all tau: " << (cmp.encoder_at_or_below ? "yes" : "no") << "\n";
}

// Port-0 flux at the central slot as a function of the early/late relative
// phase d: a + b cos d + c sin d.
struct FringeCoefficients {
  double a, b, c;
  double at(double d) const { return a + b * std::cos(d) + c * std::sin(d); }
};

FringeCoefficients central_fringe(const TimeBinState& psi, const ReceiverConfig& rx, double v_src) {
  auto flux = [&](double d) {
    const std::vector<double> ph{0.0, d};
    return detection_probabilities(psi.with_phases(ph), rx, v_src).flux_near("port0", rx.delay, kSlotTolerance);
  };
  const double f0 = flux(0), fq = flux(kPi / 2), fpi = flux(kPi);
  const double a = 0.5 * (f0 + fpi);
  return {a, 0.5 * (f0 - fpi), fq - a};
}

// Clicks at one scan point when early and late bins come from separate
// gain-switched windows: every shot draws its own relative phase from the
// laser model.
double randomized_clicks(const Scenario& sc, const LaserConfig& gs, const FringeCoefficients& fringe,
                         std::uint64_t shots, std::uint64_t seed) {
  LaserConfig laser = gs;
  laser.rng_seed = seed;
  const double length = laser.t_ss + 2 * sc.receiver.delay;
  const double period = length + 2 * std::max(laser.t_off, 1e-9);
  std::vector<WindowRequest> requests(2 * shots);
  for (std::size_t k = 0; k < requests.size(); ++k) {
    const double start = static_cast<double>(k) * period;
    requests[k] = {start, start + length};
  }
  const auto windows = emission_schedule(laser, requests);
  const double no_dark = 1.0 - sc.receiver.dark_probability();
  Rng rng(derive_seed(seed, "randomization:clicks"));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double clicks = 0;
  for (std::uint64_t k = 0; k < shots; ++k) {
    const double d = windows[2 * k + 1].global_phase - windows[2 * k].global_phase;
    const double p = 1.0 - std::exp(-fringe.at(d)) * no_dark;
    clicks += u(rng) < p ? 1.0 : 0.0;
  }
  return clicks;
}

VisibilityResult scan_visibility(const Scenario& sc, const RandomizationSection& r, double v_src,
                                 const std::string& label, CsvTable& t,
                                 const LaserConfig* randomizing = nullptr) {
  const CVec plus = CVec::Constant(2, std::complex<double>(std::sqrt(0.5), 0));
  const auto psi = TimeBinState::on_grid(0.0, sc.receiver.delay, plus, r.mean_photon);
  const double t_mid = sc.receiver.delay;
  const auto shots = static_cast<std::uint64_t>(std::llround(r.shots));
  std::vector<ScanPoint> scan;
  std::vector<double> clicks_col;
  const auto grid = full_period_grid(r.phase_points);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ReceiverConfig rx = sc.receiver;
    rx.phase = grid[i];
    const auto seed = derive_seed(sc.seed, "randomization:" + label, i);
    double clicks = 0;
    if (randomizing) {
      clicks = randomized_clicks(sc, *randomizing, central_fringe(psi, rx, v_src), shots, seed);
    } else {
      const auto dist = detection_probabilities(psi, rx, v_src);
      const auto h = sample_clicks(dist, shots, rx, seed);
      clicks = static_cast<double>(h.count("port0", static_cast<std::size_t>(dist.slot_index(t_mid))));
    }
    clicks_col.push_back(clicks);
    scan.push_back({grid[i], static_cast<double>(shots) * clicks_to_flux(clicks, static_cast<double>(shots))});
  }
  const auto fit = fringe_visibility(scan);
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const auto& p = scan[i];
    t.row(cells(label, p.phase, clicks_col[i], p.counts, fit.offset + fit.amplitude * std::cos(p.phase - fit.phase)));
  }
  return fit;
}

void cmd_randomization(const Scenario& sc, Artifacts& out, std::ostream& log) {
  const auto& r = need(sc.randomization, "randomization");
  LaserConfig cw = sc.laser;
  cw.mode = LaserMode::ContinuousWave;
  cw.coherence_visibility = r.v_cw;
  LaserConfig gs = sc.laser;
  gs.mode = LaserMode::GainSwitched;
  gs.coherence_visibility = r.v_gain_switched;

  CsvTable t({"case", "phase", "clicks", "flux_counts", "fit"});
  const auto v_cw = scan_visibility(sc, r, pairwise_visibility(cw, true), "cw-same-window", t);
  const auto v_gs = scan_visibility(sc, r, pairwise_visibility(gs, true), "gain-switched-same-window", t);
  // Across windows the pair keeps the intra-window coherence but the
  // relative phase is redrawn by the laser for every shot.
  const auto v_x = scan_visibility(sc, r, pairwise_visibility(gs, true), "gain-switched-cross-window", t, &gs);
  out.csv("randomization.csv", t);

  if (!r.quality_mapping_set) {
    throw ConfigError("randomization.quality_mapping is not configured; the visibility-to-correlation mapping must be explicit");
  }
  const auto q = source_quality(v_x.v, v_gs.v, ratio_mapping(r.quality_coefficient));
  out.json_file("randomization.json", {{"v_cw", v_cw.v},
                                       {"v_cw_err", v_cw.v_err},
                                       {"v_gain_switched", v_gs.v},
                                       {"v_gain_switched_err", v_gs.v_err},
                                       {"v_cross_window", v_x.v},
                                       {"v_cross_window_err", v_x.v_err},
                                       {"p_c", q.p_c},
                                       {"q", q.q}});
  log << "V_pr = " << format_number(v_x.v) << ", V_npr = " << format_number(v_gs.v) << ", p_c = "
      << format_number(q.p_c) << ", q = " << format_number(q.q) << "\n";
}

std::vector<double> tomo_bins(const Scenario& sc) {
  const double dt = sc.receiver.delay;
  return {0.0, dt, 2 * dt, 3 * dt};
}

TimeBinState psi4(const std::vector<double>& bins, const std::vector<double>& phases) {
  const CVec uniform = CVec::Constant(4, std::complex<double>(0.5, 0));
  return TimeBinState(bins, uniform, 1.0).with_phases(phases);
}

void cmd_tomo(const Scenario& sc, Artifacts& out, std::ostream& log) {
  const auto& t = need(sc.tomography, "tomography");
  if (!sc.receiver.cascade) throw ConfigError("missing section 'receiver.cascade' for tomography");
  const auto bins = tomo_bins(sc);
  const auto psi0 = psi4(bins, {0, 0, 0, 0});
  const auto psi1 = psi4(bins, {0, kPi / 3, 2 * kPi / 3, kPi});

  const auto model_schedule = four_symbol_schedule(t.generation_rate, kPi / 2);
  const auto true_schedule = four_symbol_schedule(t.generation_rate, kPi / 2 + t.phase_error);
  const auto model_ops = build_operators(model_schedule, sc.receiver, bins);
  const auto true_ops = build_operators(true_schedule, sc.receiver, bins);
  const CMat rho0 = psi0.density(t.coherence);
  const auto counts = sample_counts(expected_counts(true_ops, rho0, t.shots, t.mean_photon),
                                    derive_seed(sc.seed, "tomo:counts"));
  const auto data = make_dataset(model_ops, counts, t.shots);
  const auto mle = mle_reconstruct(data);
  const double f_mle = fidelity_mixed(mle.rho, psi0);

  const auto ov_setting = overlap_setting(psi1, sc.receiver);
  const std::vector<SettingDefinition> ov_ops{ov_setting};
  const auto ov_counts = sample_counts(expected_counts(ov_ops, psi1.density(t.coherence), t.overlap_shots, t.mean_photon),
                                       derive_seed(sc.seed, "tomo:overlap"));
  const auto ov = overlap_estimate(make_dataset(ov_ops, ov_counts, t.overlap_shots), psi1);

  CsvTable table({"setting", "channel", "slot_time", "count"});
  for (std::size_t s = 0; s < data.settings.size(); ++s) {
    for (std::size_t j = 0; j < data.settings[s].outcomes.size(); ++j) {
      const auto& o = data.settings[s].outcomes[j];
      table.row(cells(data.settings[s].label, o.channel, o.time, data.counts[s][j]));
    }
  }
  for (std::size_t j = 0; j < ov_setting.outcomes.size(); ++j) {
    table.row(cells(ov_setting.label, ov_setting.outcomes[j].channel, ov_setting.outcomes[j].time, ov_counts[0][j]));
  }
  out.csv("tomo_counts.csv", table);
  out.json_file("rho.json", density_json(mle.rho.matrix()));
  out.json_file("tomo_summary.json", {{"mle_fidelity_psi0", f_mle},
                                      {"mle_converged", mle.converged},
                                      {"mle_iterations", mle.iterations},
                                      {"mle_log_likelihood", mle.log_likelihood},
                                      {"mle_gradient_norm", mle.gradient_norm},
                                      {"purity", mle.rho.purity()},
                                      {"overlap_fidelity_psi1", ov.fidelity},
                                      {"overlap_error", ov.error},
                                      {"overlap_assumes_purity", ov.assumes_purity}});
  log << "MLE fidelity " << format_number(f_mle) << ", overlap fidelity " << format_number(ov.fidelity) << " +- "
      << format_number(ov.error) << (mle.converged ? "" : " (MLE not converged)") << "\n";
}

void cmd_entangle(const Scenario& sc, Artifacts& out, std::ostream& log) {
  const auto& e = need(sc.entanglement, "entanglement");
  CVec amps(2);
  amps(0) = std::sqrt(e.pump_early_weight);
  amps(1) = std::polar(std::sqrt(1 - e.pump_early_weight), e.pump_phase);
  const auto pump = TimeBinState::on_grid(0.0, sc.receiver.delay, amps, 1.0);
  const auto state = spdc_from_pump(pump, e.pair_rate);
  const CoincidenceModel model{e.v_setup, e.pair_efficiency, e.accidental_rate};

  const auto grid = full_period_grid(e.phase_points);
  const auto scan = phase_scan(state, grid, e.phi_a, e.exposure, model, derive_seed(sc.seed, "entangle:scan"));
  const auto fit = fit_scan(scan);
  const auto angles = ChshAngles::for_state(state);
  const auto chsh_scan = measure_settings(state, angles.settings(), e.chsh_exposure, model,
                                          derive_seed(sc.seed, "entangle:chsh"));
  const auto chsh = chsh_from_scan(chsh_scan, angles);

  CsvTable t({"phi_a", "phi_b", "channel_pair", "counts", "fit"});
  for (const auto& p : scan.points) {
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& f = fit.channels[k];
      const std::string pair = std::to_string(kChannelPairs[k][0]) + std::to_string(kChannelPairs[k][1]);
      t.row(cells(p.phi_a, p.phi_b, pair, p.counts[k], f.offset + f.amplitude * std::cos(p.phi_b - f.phase)));
    }
  }
  out.csv("entangle_scan.csv", t);
  json phases = json::array();
  for (const auto& f : fit.channels) phases.push_back(f.phase);
  out.json_file("entangle_summary.json", {{"visibility", fit.visibility},
                                          {"visibility_err", fit.visibility_err},
                                          {"s_from_visibility", chsh_s(std::min(1.0, fit.visibility))},
                                          {"chsh_s", chsh.s},
                                          {"chsh_error", chsh.error},
                                          {"correlators", chsh.correlators},
                                          {"channel_phases", phases}});
  log << "V = " << format_number(fit.visibility) << ", S = " << format_number(chsh.s) << " +- "
      << format_number(chsh.error) << "\n";
}

}  // namespace

std::vector<std::string> run_scenario(const std::string& subcommand, const Scenario& sc,
                                      const fs::path& output_dir, std::ostream& log) {
  Artifacts out{output_dir, {}};
  fs::create_directories(output_dir);
  if (subcommand == "encode") cmd_encode(sc, out, log);
  else if (subcommand == "check-timing") cmd_check_timing(sc, out, log);
  else if (subcommand == "qkd") cmd_qkd(sc, out, log);
  else if (subcommand == "sweep") cmd_sweep(sc, out, log);
  else if (subcommand == "allan") cmd_allan(sc, out, log);
  else if (subcommand == "randomization") cmd_randomization(sc, out, log);
  else if (subcommand == "tomo") cmd_tomo(sc, out, log);
  else if (subcommand == "entangle") cmd_entangle(sc, out, log);
  else throw ConfigError("unknown subcommand '" + subcommand + "'");
  return out.names;
}

RunOutcome run(const RunRequest& request, std::ostream& log) {
  RunOutcome outcome;
  const auto started = std::chrono::steady_clock::now();
  std::optional<Scenario> sc;
  try {
    sc = parse_scenario(request.scenario, request.overrides);
    outcome.output_dir = request.output_dir ? *request.output_dir : fs::path(sc->output_dir);
    outcome.artifacts = run_scenario(request.subcommand, *sc, outcome.output_dir, log);
  } catch (const std::exception& e) {
    outcome.exit_code = exit_code_for(e);
    outcome.message = e.what();
    log << "error: " << e.what() << "\n";
  }
  if (!sc) return outcome;

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json manifest{{"tool", "tbq"},
                {"version", TBQ_VERSION},
                {"subcommand", request.subcommand},
                {"scenario", request.scenario.string()},
                {"overrides", request.overrides},
                {"seed", sc->seed},
                {"resolved_config", sc->resolved},
                {"applied_defaults", sc->applied_defaults},
                {"artifacts", outcome.artifacts},
                {"exit_code", outcome.exit_code},
                {"wall_time_s", wall}};
  if (!outcome.message.empty()) manifest["error"] = outcome.message;
  try {
    write_json(outcome.output_dir / "manifest.json", manifest);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    if (outcome.exit_code == kExitOk) outcome.exit_code = kExitConfig;
  }
  return outcome;
}

}  // namespace tbq::cli
