#include "tbq/entanglement.hpp"

#include <cmath>
#include <random>

#include "tbq/random.hpp"

namespace tbq {

EntangledState spdc_from_pump(const TimeBinState& pump, double pair_rate) {
  if (pump.dimension() != 2) throw ConfigError("SPDC pump must be a d = 2 time-bin state");
  if (!(pair_rate >= 0)) throw ConfigError("pair_rate must be >= 0");
  return {pump, pump.amplitudes()(0), pump.amplitudes()(1), pair_rate};
}

double coincidence_probability(const EntangledState& state, double phi_a, double phi_b,
                               double v_setup, int channel_a, int channel_b) {
  if (!(v_setup >= 0 && v_setup <= 1)) throw ConfigError("v_setup must lie in [0, 1]");
  if ((channel_a != 0 && channel_a != 1) || (channel_b != 0 && channel_b != 1)) {
    throw ConfigError("channel index must be 0 or 1");
  }
  const double sign = channel_a == channel_b ? 1.0 : -1.0;
  return 0.25 * (1.0 + sign * v_setup * state.contrast() * std::cos(phi_a + phi_b + state.phase()));
}

std::array<double, 4> coincidence_probabilities(const EntangledState& state, double phi_a,
                                                double phi_b, double v_setup) {
  std::array<double, 4> p{};
  for (std::size_t k = 0; k < 4; ++k) {
    p[k] = coincidence_probability(state, phi_a, phi_b, v_setup, kChannelPairs[k][0], kChannelPairs[k][1]);
  }
  return p;
}

namespace {

void check_model(const CoincidenceModel& m, double exposure) {
  if (!(m.pair_efficiency >= 0 && m.pair_efficiency <= 1)) throw ConfigError("pair_efficiency must lie in [0, 1]");
  if (!(m.accidental_rate >= 0)) throw ConfigError("accidental_rate must be >= 0");
  if (!(exposure > 0)) throw ConfigError("exposure must be > 0");
}

void check_grid(const std::vector<double>& grid) {
  if (grid.size() < 5) throw ConfigError("phase scan needs at least 5 points");
  const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
  const double coverage = (*hi - *lo) * static_cast<double>(grid.size()) / static_cast<double>(grid.size() - 1);
  if (coverage < kTwoPi - 1e-9) throw ConfigError("phase scan grid must cover a full 2 pi period");
}

std::array<double, 4> mean_counts(const EntangledState& state, double phi_a, double phi_b,
                                  double exposure, const CoincidenceModel& model) {
  const auto p = coincidence_probabilities(state, phi_a, phi_b, model.v_setup);
  std::array<double, 4> mean{};
  for (std::size_t k = 0; k < 4; ++k) {
    mean[k] = (state.pair_rate * model.pair_efficiency * p[k] + model.accidental_rate) * exposure;
  }
  return mean;
}

}  // namespace

CoincidenceScan measure_settings(const EntangledState& state,
                                 const std::vector<std::array<double, 2>>& settings,
                                 double exposure, const CoincidenceModel& model, std::uint64_t seed) {
  check_model(model, exposure);
  CoincidenceScan scan;
  scan.exposure = exposure;
  for (std::size_t i = 0; i < settings.size(); ++i) {
    Rng rng(derive_seed(seed, "entanglement:coincidences", i));
    CoincidencePoint pt{settings[i][0], settings[i][1], {}};
    const auto mean = mean_counts(state, pt.phi_a, pt.phi_b, exposure, model);
    for (std::size_t k = 0; k < 4; ++k) {
      if (mean[k] > 0) {
        std::poisson_distribution<std::int64_t> draw(mean[k]);
        pt.counts[k] = static_cast<double>(draw(rng));
      }
    }
    scan.points.push_back(pt);
  }
  return scan;
}

CoincidenceScan phase_scan(const EntangledState& state, const std::vector<double>& phi_b_grid,
                           double phi_a, double exposure, const CoincidenceModel& model,
                           std::uint64_t seed) {
  check_grid(phi_b_grid);
  std::vector<std::array<double, 2>> settings;
  for (double b : phi_b_grid) settings.push_back({phi_a, b});
  return measure_settings(state, settings, exposure, model, seed);
}

CoincidenceScan expected_scan(const EntangledState& state, const std::vector<double>& phi_b_grid,
                              double phi_a, double exposure, const CoincidenceModel& model) {
  check_grid(phi_b_grid);
  check_model(model, exposure);
  CoincidenceScan scan;
  scan.exposure = exposure;
  for (double b : phi_b_grid) scan.points.push_back({phi_a, b, mean_counts(state, phi_a, b, exposure, model)});
  return scan;
}

ScanFit fit_scan(const CoincidenceScan& scan) {
  ScanFit fit;
  double weight = 0, acc = 0, var = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<ScanPoint> pts;
    double total = 0;
    for (const auto& p : scan.points) {
      pts.push_back({p.phi_b, p.counts[k]});
      total += p.counts[k];
    }
    fit.channels[k] = fringe_visibility(pts);
    acc += total * fit.channels[k].v;
    var += total * total * fit.channels[k].v_err * fit.channels[k].v_err;
    weight += total;
  }
  if (!(weight > 0)) throw StatisticsError("phase scan recorded no coincidences");
  fit.visibility = acc / weight;
  fit.visibility_err = std::sqrt(var) / weight;
  return fit;
}

double chsh_s(double visibility) {
  if (!(visibility >= 0 && visibility <= 1)) throw ConfigError("visibility must lie in [0, 1]");
  return 2.0 * std::numbers::sqrt2 * visibility;
}

ChshAngles ChshAngles::for_state(const EntangledState& state) {
  ChshAngles a;
  a.b -= state.phase();
  a.b2 -= state.phase();
  return a;
}

ChshResult chsh_from_scan(const CoincidenceScan& scan, const ChshAngles& angles) {
  ChshResult r;
  const auto wanted = angles.settings();
  double var = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const CoincidencePoint* hit = nullptr;
    for (const auto& p : scan.points) {
      if (std::abs(std::remainder(p.phi_a - wanted[i][0], kTwoPi)) < 1e-9 &&
          std::abs(std::remainder(p.phi_b - wanted[i][1], kTwoPi)) < 1e-9) {
        hit = &p;
        break;
      }
    }
    if (!hit) throw ConfigError("missing angle settings for the CHSH estimate");
    const auto& c = hit->counts;
    const double n = c[0] + c[1] + c[2] + c[3];
    if (!(n > 0)) throw StatisticsError("CHSH setting recorded no coincidences");
    const double e = (c[0] + c[3] - c[1] - c[2]) / n;
    r.correlators[i] = e;
    var += (1 - e * e) / n;
  }
  r.s = std::abs(r.correlators[0] - r.correlators[1] + r.correlators[2] + r.correlators[3]);
  r.error = std::sqrt(var);
  return r;
}

}  // namespace tbq
