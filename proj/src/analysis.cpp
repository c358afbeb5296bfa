#include "tbq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tbq/random.hpp"

namespace tbq {

namespace {

double wrap_pi(double x) {
  x = std::remainder(x, kTwoPi);
  return x <= -kPi ? x + kTwoPi : x;
}

struct PortCounts {
  double n0 = 0;
  double n1 = 0;
};

PortCounts central_counts(const ClickHistogram& h, double t) {
  PortCounts out;
  bool found = false;
  for (std::size_t s = 0; s < h.slot_start.size(); ++s) {
    if (t < h.slot_start[s] || t > h.slot_end[s]) continue;
    out.n0 += static_cast<double>(h.count("port0", s));
    out.n1 += static_cast<double>(h.count("port1", s));
    found = true;
  }
  if (!found) throw StatisticsError("histogram has no slot at the interfering time");
  return out;
}

double contrast(double a, double b) { return (a + b) > 0 ? (a - b) / (a + b) : 0.0; }

}  // namespace

std::vector<double> unwrap(const std::vector<double>& wrapped) {
  std::vector<double> out(wrapped.size());
  for (std::size_t i = 0; i < wrapped.size(); ++i) {
    out[i] = i == 0 ? wrapped[0] : out[i - 1] + wrap_pi(wrapped[i] - wrapped[i - 1]);
  }
  return out;
}

PhaseEstimate estimate_phase(const ClickHistogram& in_phase, const ClickHistogram& quadrature,
                             const TimeBinState& model, const ReceiverConfig& rx) {
  if (model.dimension() < 2) throw ConfigError("phase estimation needs a superposition model");
  const double t = model.bin_times()[0] + rx.delay;
  const double half = 0.5 * rx.time_gate;

  ReceiverConfig rq = rx;
  rq.phase += kPi / 2;
  const auto mi = detection_probabilities(model, rx, 1.0);
  const auto mq = detection_probabilities(model, rq, 1.0);
  const double model_i = contrast(mi.flux_near("port0", t, half), mi.flux_near("port1", t, half));
  const double model_q = contrast(mq.flux_near("port0", t, half), mq.flux_near("port1", t, half));
  if (std::hypot(model_i, model_q) < 1e-12) throw ConfigError("model state shows no fringe");
  const double theta = std::atan2(-model_q, model_i);

  const auto ci = central_counts(in_phase, t);
  const auto cq = central_counts(quadrature, t);
  PhaseEstimate est;
  const double ni = ci.n0 + ci.n1;
  const double nq = cq.n0 + cq.n1;
  if (!(ni > 0) || !(nq > 0)) {
    est.indeterminate = true;
    est.uncertainty = kPi;
    return est;
  }
  const double c_i = contrast(ci.n0, ci.n1);
  const double c_q = contrast(cq.n0, cq.n1);
  const double var_i = std::max(1.0 - c_i * c_i, 1.0 / ni) / ni;
  const double var_q = std::max(1.0 - c_q * c_q, 1.0 / nq) / nq;
  const double r2 = c_i * c_i + c_q * c_q;
  est.contrast = std::sqrt(r2);
  if (r2 <= 0) {
    est.indeterminate = true;
    est.uncertainty = kPi;
    return est;
  }
  est.phase = wrap_pi(std::atan2(-c_q, c_i) - theta);
  est.uncertainty = std::sqrt(c_i * c_i * var_q + c_q * c_q * var_i) / r2;
  est.indeterminate = est.uncertainty > kMaxPhaseUncertainty;
  return est;
}

std::vector<AllanPoint> allan_deviation(const PhaseSeries& series, const std::vector<double>& taus,
                                        AllanScaling scaling) {
  if (!(series.tau0 > 0)) throw ConfigError("sample interval must be > 0");
  const auto& x = series.values;
  if (x.size() < 3) throw StatisticsError("Allan analysis needs at least 3 samples");
  std::vector<AllanPoint> out;
  for (double tau : taus) {
    const double ratio = tau / series.tau0;
    const double m_real = std::round(ratio);
    if (!(m_real >= 1) || std::abs(ratio - m_real) > 1e-6 * std::max(1.0, ratio)) {
      throw ConfigError("tau must be a positive integer multiple of the sample interval");
    }
    const auto m = static_cast<std::size_t>(m_real);
    if (x.size() < 2 * m + kMinAllanTerms) {
      std::ostringstream os;
      os << "series too short for tau = " << tau << " s: " << x.size() << " samples give "
         << (x.size() > 2 * m ? x.size() - 2 * m : 0) << " terms, need " << kMinAllanTerms;
      throw StatisticsError(os.str());
    }
    const std::size_t terms = x.size() - 2 * m;
    double acc = 0;
    for (std::size_t n = 0; n < terms; ++n) {
      const double d2 = x[n + 2 * m] - 2 * x[n + m] + x[n];
      acc += d2 * d2;
    }
    const double norm = scaling == AllanScaling::PerTau ? tau : series.tau0;
    const double var = acc / static_cast<double>(terms) / (2 * norm * norm);
    AllanPoint p;
    p.tau = tau;
    p.sigma = std::sqrt(var);
    p.terms = terms;
    // Overlapping terms are correlated over ~m samples.
    const double edf = std::max(1.0, static_cast<double>(terms) / static_cast<double>(m));
    const double rel = 1.0 / std::sqrt(2.0 * edf);
    p.ci_low = p.sigma * std::max(0.0, 1.0 - rel);
    p.ci_high = p.sigma * (1.0 + rel);
    out.push_back(p);
  }
  return out;
}

std::vector<double> octave_taus(const PhaseSeries& series) {
  std::vector<double> taus;
  for (std::size_t m = 1; series.values.size() >= 2 * m + kMinAllanTerms; m *= 2) {
    taus.push_back(series.tau0 * static_cast<double>(m));
  }
  return taus;
}

PhaseSeries random_walk_reference(double step_std, double interval, std::size_t length,
                                  std::uint64_t seed) {
  if (!(step_std >= 0)) throw ConfigError("step_std must be >= 0");
  if (!(interval > 0)) throw ConfigError("interval must be > 0");
  PhaseSeries s;
  s.tau0 = interval;
  s.values.assign(length, 0.0);
  if (step_std == 0 || length == 0) return s;
  Rng rng(derive_seed(seed, "analysis:random-walk"));
  std::normal_distribution<double> step(0.0, step_std);
  for (std::size_t i = 1; i < length; ++i) s.values[i] = s.values[i - 1] + step(rng);
  return s;
}

double loglog_slope(const std::vector<AllanPoint>& curve) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = 0;
  for (const auto& p : curve) {
    if (!(p.sigma > 0)) continue;
    const double lx = std::log(p.tau);
    const double ly = std::log(p.sigma);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    n += 1;
  }
  if (n < 2) throw StatisticsError("slope needs two non-zero points");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double clicks_to_flux(double clicks, double shots) {
  if (!(shots > 0)) throw ConfigError("shots must be > 0");
  if (!(clicks >= 0)) throw ConfigError("clicks must be >= 0");
  if (clicks >= shots) throw StatisticsError("every gate clicked; flux is unbounded");
  return -std::log1p(-clicks / shots);
}

VisibilityResult fringe_visibility(const std::vector<ScanPoint>& scan) {
  const auto n = static_cast<Eigen::Index>(scan.size());
  if (n < 5) throw ConfigError("fringe fit needs at least 5 phase points");
  double lo = scan.front().phase, hi = scan.front().phase;
  for (const auto& p : scan) {
    lo = std::min(lo, p.phase);
    hi = std::max(hi, p.phase);
  }
  const double coverage = (hi - lo) * static_cast<double>(n) / static_cast<double>(n - 1);
  if (coverage < kTwoPi - 1e-9) throw ConfigError("phase scan must cover a full 2 pi period");

  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ph = scan[static_cast<std::size_t>(i)].phase;
    a(i, 0) = 1.0;
    a(i, 1) = std::cos(ph);
    a(i, 2) = std::sin(ph);
    y(i) = scan[static_cast<std::size_t>(i)].counts;
  }
  const Eigen::Matrix3d ata = a.transpose() * a;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
  if (lu.rank() < 3) throw StatisticsError("fringe fit is singular for these phase settings");
  const Eigen::Vector3d beta = lu.solve(a.transpose() * y);
  const Eigen::VectorXd resid = y - a * beta;
  const double rss = resid.squaredNorm();
  const double s2 = n > 3 ? rss / static_cast<double>(n - 3) : 0.0;
  const Eigen::Matrix3d cov = s2 * lu.inverse();

  VisibilityResult r;
  r.offset = beta(0);
  r.amplitude = std::hypot(beta(1), beta(2));
  r.phase = std::atan2(beta(2), beta(1));
  r.rms_residual = std::sqrt(rss / static_cast<double>(n));
  if (!(r.offset > 0)) {
    std::ostringstream os;
    os << "fringe fit failed: non-positive offset " << r.offset << ", rms residual " << r.rms_residual;
    throw StatisticsError(os.str());
  }
  r.offset_err = std::sqrt(std::max(0.0, cov(0, 0)));
  if (r.amplitude > 0) {
    const double b = beta(1), c = beta(2), a2 = r.amplitude * r.amplitude;
    r.amplitude_err = std::sqrt(std::max(0.0, (b * b * cov(1, 1) + c * c * cov(2, 2) + 2 * b * c * cov(1, 2)) / a2));
    r.phase_err = std::sqrt(std::max(0.0, (c * c * cov(1, 1) + b * b * cov(2, 2) - 2 * b * c * cov(1, 2)) / (a2 * a2)));
  }
  const double v = r.amplitude / r.offset;
  r.v = std::clamp(v, 0.0, 1.0);
  r.v_err = v * std::sqrt(std::pow(r.amplitude > 0 ? r.amplitude_err / r.amplitude : 0.0, 2) +
                          std::pow(r.offset_err / r.offset, 2));
  return r;
}

QualityMapping ratio_mapping(double coefficient) {
  if (!(coefficient >= 0)) throw ConfigError("source-quality coefficient must be >= 0");
  return [coefficient](double v_randomized, double v_coherent) {
    if (!(v_coherent > 0)) throw ConfigError("coherent visibility must be > 0");
    SourceQuality s;
    s.p_c = std::min(1.0, v_randomized / v_coherent);
    s.q = std::clamp(1.0 - coefficient * s.p_c, 0.0, 1.0);
    return s;
  };
}

SourceQuality source_quality(double v_randomized, double v_coherent, const QualityMapping& mapping) {
  if (!mapping) {
    throw ConfigError("no visibility-to-correlation mapping configured; set analysis.quality_mapping");
  }
  if (!(v_randomized >= 0 && v_randomized <= 1) || !(v_coherent >= 0 && v_coherent <= 1)) {
    throw ConfigError("visibilities must lie in [0, 1]");
  }
  return mapping(v_randomized, v_coherent);
}

StabilityComparison compare_stability(const PhaseSeries& encoder, const PhaseSeries& umzi,
                                      const std::vector<double>& taus, AllanScaling scaling) {
  StabilityComparison c;
  c.encoder = allan_deviation(encoder, taus, scaling);
  c.umzi = allan_deviation(umzi, taus, scaling);
  c.encoder_at_or_below = true;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (c.encoder[i].sigma > c.umzi[i].sigma) c.encoder_at_or_below = false;
  }
  return c;
}

}  // namespace tbq
