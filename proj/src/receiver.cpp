#include "tbq/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tbq/random.hpp"

namespace tbq {

void ReceiverConfig::validate() const {
  if (!(delay > 0)) throw ConfigError("receiver delay must be > 0");
  if (!(tap_ratio > 0 && tap_ratio < 1)) throw ConfigError("tap_ratio must lie in (0, 1)");
  if (!(detector_efficiency >= 0 && detector_efficiency <= 1)) {
    throw ConfigError("detector_efficiency must lie in [0, 1]");
  }
  if (!(dark_count_rate >= 0)) throw ConfigError("dark_count_rate must be >= 0");
  if (!(time_gate > 0)) throw ConfigError("time_gate must be > 0");
  if (cascade && !(cascade->delay > 0)) throw ConfigError("cascade delay must be > 0");
}

double ReceiverConfig::dark_probability() const {
  return std::min(1.0, dark_count_rate * time_gate);
}

Eigen::Index OutputDistribution::channel_index(const std::string& name) const {
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i] == name) return static_cast<Eigen::Index>(i);
  }
  return -1;
}

Eigen::Index OutputDistribution::slot_index(double t, double tolerance) const {
  for (std::size_t i = 0; i < slot_times.size(); ++i) {
    if (std::abs(slot_times[i] - t) <= tolerance) return static_cast<Eigen::Index>(i);
  }
  return -1;
}

double OutputDistribution::flux_near(const std::string& channel, double t, double half_width) const {
  const auto c = channel_index(channel);
  if (c < 0) throw ConfigError("unknown channel " + channel);
  double sum = 0;
  for (std::size_t i = 0; i < slot_times.size(); ++i) {
    if (std::abs(slot_times[i] - t) <= half_width) sum += mean_photons(c, static_cast<Eigen::Index>(i));
  }
  return sum;
}

namespace {

struct Path {
  double delay;
  std::complex<double> coef;
};

struct ChannelPaths {
  std::string name;
  std::vector<Path> paths;
};

struct Contribution {
  double time;
  std::size_t bin;
  std::complex<double> coef;
};

// Groups every (bin, path) arrival of each channel into slots and returns
// the rank-one slot operators conj(v) v^T.
std::vector<SlotOperator> build_operators(std::span<const double> bin_times,
                                          const std::vector<ChannelPaths>& channels,
                                          int* interfering_slots = nullptr) {
  const auto d = static_cast<Eigen::Index>(bin_times.size());
  std::vector<SlotOperator> out;
  if (interfering_slots) *interfering_slots = 0;
  for (const auto& ch : channels) {
    std::vector<Contribution> arrivals;
    for (std::size_t i = 0; i < bin_times.size(); ++i) {
      for (const auto& p : ch.paths) arrivals.push_back({bin_times[i] + p.delay, i, p.coef});
    }
    std::stable_sort(arrivals.begin(), arrivals.end(),
                     [](const Contribution& a, const Contribution& b) { return a.time < b.time; });
    std::size_t k = 0;
    while (k < arrivals.size()) {
      const double t0 = arrivals[k].time;
      CVec v = CVec::Zero(d);
      int members = 0;
      while (k < arrivals.size() && arrivals[k].time - t0 <= kSlotTolerance) {
        v(static_cast<Eigen::Index>(arrivals[k].bin)) += arrivals[k].coef;
        ++members;
        ++k;
      }
      if (members > 1 && interfering_slots) ++*interfering_slots;
      out.push_back({ch.name, t0, v.conjugate() * v.transpose()});
    }
  }
  return out;
}

OutputDistribution assemble(const std::vector<SlotOperator>& ops, const std::vector<std::string>& names,
                            const CMat& rho, double scale) {
  OutputDistribution dist;
  dist.channels = names;
  std::vector<double> times;
  for (const auto& op : ops) times.push_back(op.time);
  std::sort(times.begin(), times.end());
  for (double t : times) {
    if (dist.slot_times.empty() || t - dist.slot_times.back() > kSlotTolerance) dist.slot_times.push_back(t);
  }
  dist.mean_photons = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(names.size()),
                                            static_cast<Eigen::Index>(dist.slot_times.size()));
  for (const auto& op : ops) {
    const auto c = dist.channel_index(op.channel);
    const auto s = dist.slot_index(op.time);
    const double flux = (op.op * rho).trace().real();
    dist.mean_photons(c, s) += scale * std::max(0.0, flux);
  }
  return dist;
}

std::vector<SlotOperator> tap_operators(std::span<const double> bin_times, double tap) {
  std::vector<SlotOperator> ops;
  const auto d = static_cast<Eigen::Index>(bin_times.size());
  for (std::size_t i = 0; i < bin_times.size(); ++i) {
    CMat e = CMat::Zero(d, d);
    e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = tap;
    ops.push_back({"toa", bin_times[i], e});
  }
  return ops;
}

void scale_ops(std::vector<SlotOperator>& ops, double factor) {
  for (auto& op : ops) op.op *= factor;
}

std::vector<ChannelPaths> single_umzi_paths(const ReceiverConfig& rx) {
  const auto lp = std::polar(0.5, rx.phase);
  return {{"port0", {{0.0, 0.5}, {rx.delay, lp}}}, {"port1", {{0.0, 0.5}, {rx.delay, -lp}}}};
}

std::vector<ChannelPaths> cascade_paths(const ReceiverConfig& rx) {
  const auto& c = *rx.cascade;
  std::vector<ChannelPaths> ch{{"det_a", {}}, {"det_b", {}}};
  for (int s = 0; s < 2; ++s) {
    for (int u = 0; u < 2; ++u) {
      const double delay = s * rx.delay + u * c.delay;
      const auto coef = 0.25 * std::polar(1.0, s * c.phi1 + u * c.phi2);
      ch[0].paths.push_back({delay, coef});
      ch[1].paths.push_back({delay, u ? -coef : coef});
    }
  }
  return ch;
}

void check_rho(const CMat& rho, std::span<const double> bin_times) {
  if (rho.rows() != rho.cols() || rho.rows() != static_cast<Eigen::Index>(bin_times.size())) {
    throw ConfigError("density matrix dimension differs from the number of bins");
  }
}

}  // namespace

OutputDistribution detection_probabilities(const CMat& rho, std::span<const double> bin_times,
                                           double mean_photon, const ReceiverConfig& rx,
                                           double transmittance) {
  rx.validate();
  check_rho(rho, bin_times);
  auto ops = tap_operators(bin_times, rx.tap_ratio);
  auto arm = build_operators(bin_times, single_umzi_paths(rx));
  scale_ops(arm, 1.0 - rx.tap_ratio);
  ops.insert(ops.end(), arm.begin(), arm.end());
  return assemble(ops, {"toa", "port0", "port1"}, rho,
                  mean_photon * rx.detector_efficiency * transmittance);
}

OutputDistribution detection_probabilities(const TimeBinState& state, const ReceiverConfig& rx,
                                           double v_src, double transmittance,
                                           std::vector<std::string>* warnings) {
  if (!(v_src >= 0 && v_src <= 1)) throw ConfigError("v_src must lie in [0, 1]");
  if (warnings && state.dimension() > 1) {
    int interfering = 0;
    build_operators(state.bin_times(), single_umzi_paths(rx), &interfering);
    if (interfering == 0) {
      warnings->push_back("receiver delay matches no bin separation within 1 ps; fringes wash out");
    }
  }
  return detection_probabilities(state.density(v_src * state.pulse_overlap()), state.bin_times(),
                                 state.mean_photon(), rx, transmittance);
}

std::vector<SlotOperator> cascade_operators(std::span<const double> bin_times,
                                            const ReceiverConfig& rx) {
  rx.validate();
  if (!rx.cascade) throw ConfigError("cascade stage missing from receiver configuration");
  return build_operators(bin_times, cascade_paths(rx));
}

OutputDistribution cascade_probabilities(const CMat& rho, std::span<const double> bin_times,
                                         double mean_photon, const ReceiverConfig& rx,
                                         double transmittance) {
  auto arm = cascade_operators(bin_times, rx);
  check_rho(rho, bin_times);
  scale_ops(arm, 1.0 - rx.tap_ratio);
  auto ops = tap_operators(bin_times, rx.tap_ratio);
  ops.insert(ops.end(), arm.begin(), arm.end());
  return assemble(ops, {"toa", "det_a", "det_b"}, rho,
                  mean_photon * rx.detector_efficiency * transmittance);
}

OutputDistribution cascade_probabilities(const TimeBinState& state, const ReceiverConfig& rx,
                                         double v_src, double transmittance) {
  if (state.dimension() != 4) throw ConfigError("cascade analysis expects a d = 4 state");
  if (!(v_src >= 0 && v_src <= 1)) throw ConfigError("v_src must lie in [0, 1]");
  return cascade_probabilities(state.density(v_src * state.pulse_overlap()), state.bin_times(),
                               state.mean_photon(), rx, transmittance);
}

std::uint64_t FourSymbolSchedule::states_in(double duration) const {
  return static_cast<std::uint64_t>(std::llround(source_rate * duration));
}

FourSymbolSchedule four_symbol_schedule(double generation_rate, double quarter_phase) {
  if (!(generation_rate > 0) || !std::isfinite(generation_rate)) {
    throw ConfigError("generation rate must be positive");
  }
  if (std::fmod(generation_rate, 4.0) != 0.0) {
    throw ConfigError("generation rate must split into four equal setting slots");
  }
  FourSymbolSchedule s;
  s.source_rate = generation_rate;
  s.setting_rate = generation_rate / 4.0;
  for (int k = 0; k < 4; ++k) {
    auto& m = s.settings[static_cast<std::size_t>(k)];
    m.id = k;
    m.label = "S" + std::to_string(k);
    m.bin_phases.assign(4, 0.0);
    if (k > 0) {
      m.bin_phases[0] = quarter_phase;
      m.bin_phases[static_cast<std::size_t>(k)] = quarter_phase;
    }
  }
  return s;
}

std::int64_t ClickHistogram::count(const std::string& channel, std::size_t slot) const {
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c] == channel) return counts[c].at(slot);
  }
  throw ConfigError("unknown channel " + channel);
}

std::int64_t ClickHistogram::total() const {
  std::int64_t sum = 0;
  for (const auto& row : counts)
    for (auto n : row) sum += n;
  return sum;
}

void ClickHistogram::merge(const ClickHistogram& other) {
  if (other.channels != channels || other.slot_start.size() != slot_start.size()) {
    throw ConfigError("cannot merge histograms with different layouts");
  }
  for (std::size_t c = 0; c < counts.size(); ++c)
    for (std::size_t s = 0; s < counts[c].size(); ++s) counts[c][s] += other.counts[c][s];
  total_states_sent += other.total_states_sent;
}

ClickHistogram sample_clicks(const OutputDistribution& dist, std::uint64_t shots,
                             const ReceiverConfig& rx, std::uint64_t seed) {
  rx.validate();
  Rng rng(derive_seed(seed, "receiver:clicks"));
  const double no_dark = 1.0 - rx.dark_probability();

  ClickHistogram h;
  h.channels = dist.channels;
  h.total_states_sent = shots;
  for (double t : dist.slot_times) {
    h.slot_start.push_back(t - 0.5 * rx.time_gate);
    h.slot_end.push_back(t + 0.5 * rx.time_gate);
  }
  h.counts.assign(dist.channels.size(), std::vector<std::int64_t>(dist.slot_times.size(), 0));
  for (Eigen::Index c = 0; c < dist.mean_photons.rows(); ++c) {
    for (Eigen::Index s = 0; s < dist.mean_photons.cols(); ++s) {
      const double p = 1.0 - std::exp(-dist.mean_photons(c, s)) * no_dark;
      if (p <= 0) continue;
      std::binomial_distribution<std::int64_t> draw(static_cast<std::int64_t>(shots), std::min(1.0, p));
      h.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)] = draw(rng);
    }
  }
  return h;
}

}  // namespace tbq
