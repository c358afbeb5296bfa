#include "tbq/scenario.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace tbq {

namespace {

enum class Check { Any, Positive, NonNegative, Probability, AtLeastOne };

std::string where(const std::string& source, const YAML::Mark& m) {
  if (m.is_null()) return source;
  return source + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

// One mapping section; records defaults and rejects unknown keys on finish().
class Section {
 public:
  Section(YAML::Node node, std::string name, Scenario& sc)
      : node_(std::move(node)), name_(std::move(name)), sc_(sc) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ConfigError(where(sc_.source, node_.Mark()) + ": section '" + name_ + "' must be a mapping");
    }
  }

  double number(const std::string& key, double def, Check check = Check::Any) {
    const double v = fetch<double>(key, def, "a number");
    validate(key, v, check);
    record(key, v);
    return v;
  }

  std::size_t count(const std::string& key, std::size_t def) {
    const auto v = fetch<long long>(key, static_cast<long long>(def), "an integer");
    if (v < 1) fail(key, "must be a positive integer");
    record(key, v);
    return static_cast<std::size_t>(v);
  }

  std::uint64_t seed(const std::string& key, std::uint64_t def) {
    const auto v = fetch<std::uint64_t>(key, def, "a non-negative integer");
    record(key, v);
    return v;
  }

  bool flag(const std::string& key, bool def) {
    const bool v = fetch<bool>(key, def, "a boolean");
    record(key, v);
    return v;
  }

  std::string text(const std::string& key, const std::string& def) {
    const auto v = fetch<std::string>(key, def, "a string");
    record(key, v);
    return v;
  }

  std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
    const auto v = fetch<std::string>(key, def, "a string");
    bool ok = false;
    for (const auto& a : allowed) ok = ok || a == v;
    if (!ok) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(key, "must be one of: " + list);
    }
    record(key, v);
    return v;
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def, Check check = Check::Any) {
    std::vector<double> v = def;
    const auto n = lookup(key);
    if (!n) {
      sc_.applied_defaults.push_back(name_ + "." + key);
    } else {
      if (!n.IsSequence() || n.size() == 0) fail(key, "expects a non-empty list of numbers", n.Mark());
      v.clear();
      for (const auto& e : n) {
        try {
          v.push_back(e.as<double>());
        } catch (const YAML::Exception&) {
          fail(key, "expects a list of numbers", e.Mark());
        }
      }
    }
    for (double x : v) validate(key, x, check);
    record(key, v);
    return v;
  }

  bool has(const std::string& key) const { return static_cast<bool>(lookup(key)); }

  /// Marks a nested sub-section as known; it is parsed separately.
  void nested(const std::string& key) { used_.insert(key); }

  void finish() {
    if (!node_ || node_.IsNull()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) {
        throw ConfigError(where(sc_.source, kv.first.Mark()) + ": unknown key '" + name_ + "." + key + "'");
      }
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg, YAML::Mark mark = YAML::Mark::null_mark()) const {
    if (mark.is_null()) {
      const auto n = lookup(key);
      if (n) mark = n.Mark();
    }
    throw ConfigError(where(sc_.source, mark) + ": field '" + name_ + "." + key + "' " + msg);
  }

 private:
  YAML::Node lookup(const std::string& key) const {
    if (!node_ || node_.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
    const YAML::Node n = node_[key];
    return n;
  }

  template <typename T>
  T fetch(const std::string& key, T def, const char* expected) {
    used_.insert(key);
    const auto n = lookup(key);
    if (!n) {
      sc_.applied_defaults.push_back(name_ + "." + key);
      return def;
    }
    if (!n.IsScalar()) fail(key, std::string("expects ") + expected, n.Mark());
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(key, std::string("expects ") + expected, n.Mark());
    }
  }

  void validate(const std::string& key, double v, Check check) {
    used_.insert(key);
    if (std::isnan(v)) fail(key, "must not be NaN");
    switch (check) {
      case Check::Any: break;
      case Check::Positive:
        if (!(v > 0)) fail(key, "must be > 0");
        break;
      case Check::NonNegative:
        if (!(v >= 0)) fail(key, "must be >= 0");
        break;
      case Check::Probability:
        if (!(v >= 0 && v <= 1)) fail(key, "must lie in [0, 1]");
        break;
      case Check::AtLeastOne:
        if (!(v >= 1)) fail(key, "must be >= 1");
        break;
    }
  }

  template <typename T>
  void record(const std::string& key, const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
      sc_.resolved[name_][key] = json_value(v);
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      nlohmann::json arr = nlohmann::json::array();
      for (double x : v) arr.push_back(json_value(x));
      sc_.resolved[name_][key] = arr;
    } else {
      sc_.resolved[name_][key] = v;
    }
  }

  static nlohmann::json json_value(double x) {
    if (std::isinf(x)) return x > 0 ? ".inf" : "-.inf";
    return x;
  }

  YAML::Node node_;
  std::string name_;
  Scenario& sc_;
  std::set<std::string> used_;
};

void apply_override(YAML::Node& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + spec + "' must look like section.key=value");
  const std::string path = spec.substr(0, eq);
  const std::string value = spec.substr(eq + 1);
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ConfigError("override '" + spec + "' has an empty key component");
    parts.push_back(p);
  }
  YAML::Node parsed;
  try {
    parsed = YAML::Load(value);
  } catch (const YAML::Exception& e) {
    throw ConfigError("override '" + spec + "': " + e.msg);
  }
  // Copy-construct fresh handles: assigning to an existing yaml-cpp node
  // rewrites the tree instead of rebinding.
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node parent = chain.back();
    if (!parent[parts[i]] || parent[parts[i]].IsNull()) parent[parts[i]] = YAML::Node(YAML::NodeType::Map);
    YAML::Node child = parent[parts[i]];
    if (!child.IsMap()) throw ConfigError("override '" + spec + "': '" + parts[i] + "' is not a section");
    chain.push_back(child);
  }
  chain.back()[parts.back()] = parsed;
}

LaserConfig read_laser(Section s) {
  LaserConfig c;
  c.mode = s.choice("mode", "continuous-wave", {"continuous-wave", "gain-switched"}) == "gain-switched"
               ? LaserMode::GainSwitched
               : LaserMode::ContinuousWave;
  c.t_ss = s.number("t_ss", 0, Check::NonNegative);
  c.t_off = s.number("t_off", 0, Check::NonNegative);
  c.coherence_visibility = s.number("coherence_visibility", 1, Check::Probability);
  s.finish();
  return c;
}

HardwareConfig read_hardware(Section s) {
  HardwareConfig h;
  h.v_pi = s.number("v_pi", h.v_pi, Check::Positive);
  h.delta_t_asymm = s.number("delta_t_asymm", h.delta_t_asymm, Check::Positive);
  h.delta_t_asymm2 = s.number("delta_t_asymm2", h.delta_t_asymm2, Check::NonNegative);
  h.carving_width = s.number("carving_width", h.carving_width, Check::Positive);
  const double er_db = s.number("extinction_ratio_db", 30.0, Check::NonNegative);
  h.extinction_ratio = std::pow(10.0, er_db / 10.0);
  h.insertion_loss_db = s.number("insertion_loss_db", h.insertion_loss_db, Check::NonNegative);
  h.photon_scale = s.number("photon_scale", h.photon_scale, Check::Positive);
  h.rise_fall_time = s.number("rise_fall_time", h.rise_fall_time, Check::NonNegative);
  s.finish();
  h.validate();
  return h;
}

ReceiverConfig read_receiver(Section s, YAML::Node cascade_node, Scenario& sc) {
  ReceiverConfig r;
  r.delay = s.number("delay", r.delay, Check::Positive);
  r.phase = s.number("phase", r.phase);
  r.tap_ratio = s.number("tap_ratio", r.tap_ratio, Check::Probability);
  if (!(r.tap_ratio > 0 && r.tap_ratio < 1)) s.fail("tap_ratio", "must lie strictly between 0 and 1");
  r.detector_efficiency = s.number("detector_efficiency", r.detector_efficiency, Check::Probability);
  r.dark_count_rate = s.number("dark_count_rate", r.dark_count_rate, Check::NonNegative);
  r.time_gate = s.number("time_gate", r.time_gate, Check::Positive);
  const bool has_cascade = s.has("cascade");
  s.nested("cascade");
  if (has_cascade) {
    Section c(cascade_node, "receiver.cascade", sc);
    CascadeStage st;
    st.delay = c.number("delay", 2 * r.delay, Check::Positive);
    st.phi1 = c.number("phi1", 0);
    st.phi2 = c.number("phi2", 0);
    c.finish();
    r.cascade = st;
  }
  s.finish();
  return r;
}

QkdSection read_qkd(Section s) {
  QkdSection q;
  auto& c = q.config;
  c.protocol = s.choice("protocol", "four-state", {"three-state", "four-state"}) == "three-state"
                   ? Protocol::ThreeState
                   : Protocol::FourState;
  c.rep_rate = s.number("rep_rate", c.rep_rate, Check::Positive);
  c.bin_spacing = s.number("bin_spacing", c.bin_spacing, Check::Positive);
  c.mu = s.number("mu", c.mu, Check::Positive);
  c.nu = s.number("nu", c.nu, Check::NonNegative);
  if (!(c.nu < c.mu)) s.fail("nu", "must be smaller than mu");
  c.p_mu = s.number("p_mu", c.p_mu, Check::Probability);
  c.p_nu = 1 - c.p_mu;
  c.p_z = s.number("p_z", c.p_z, Check::Probability);
  c.p_x = 1 - c.p_z;
  c.channel_loss_db = s.number("channel_loss_db", c.channel_loss_db, Check::NonNegative);
  c.block_size = s.number("block_size", c.block_size, Check::Positive);
  c.epsilon_sec = s.number("epsilon_sec", c.epsilon_sec, Check::Probability);
  c.epsilon_cor = s.number("epsilon_cor", c.epsilon_cor, Check::Probability);
  c.ec_efficiency = s.number("ec_efficiency", c.ec_efficiency, Check::AtLeastOne);
  c.sequence_length = s.count("sequence_length", c.sequence_length);
  c.alignment_jitter = s.number("alignment_jitter", c.alignment_jitter, Check::NonNegative);
  c.patterning_coupling = s.number("patterning_coupling", c.patterning_coupling, Check::Probability);
  c.qber_windows = s.count("qber_windows", c.qber_windows);
  q.duration = s.number("duration", q.duration, Check::Positive);
  s.finish();
  return q;
}

SweepSection read_sweep(Section s) {
  SweepSection w;
  w.axis = s.choice("axis", "rep_rate", {"rep_rate", "bin_spacing"}) == "bin_spacing" ? SweepAxis::BinSpacing
                                                                                      : SweepAxis::RepRate;
  w.values = s.numbers("values", w.axis == SweepAxis::RepRate ? w.values : std::vector<double>{1e-9, 2e-9, 4e-9},
                       Check::Positive);
  w.duration = s.number("duration", w.duration, Check::Positive);
  s.finish();
  return w;
}

AllanSection read_allan(Section s) {
  AllanSection a;
  a.interval = s.number("interval", a.interval, Check::Positive);
  a.length = s.count("length", a.length);
  a.drift_step = s.number("drift_step", a.drift_step, Check::NonNegative);
  a.shots = s.number("shots", a.shots, Check::Positive);
  a.mean_photon = s.number("mean_photon", a.mean_photon, Check::Positive);
  a.scaling = s.choice("scaling", "per-tau", {"per-tau", "per-sample"}) == "per-sample" ? AllanScaling::PerSample
                                                                                      : AllanScaling::PerTau;
  s.finish();
  return a;
}

RandomizationSection read_randomization(Section s, const YAML::Node& node, Scenario& sc) {
  RandomizationSection r;
  r.shots = s.number("shots", r.shots, Check::Positive);
  r.phase_points = s.count("phase_points", r.phase_points);
  r.mean_photon = s.number("mean_photon", r.mean_photon, Check::Positive);
  r.v_cw = s.number("v_cw", r.v_cw, Check::Probability);
  r.v_gain_switched = s.number("v_gain_switched", r.v_gain_switched, Check::Probability);
  r.quality_mapping_set = s.has("quality_mapping");
  s.nested("quality_mapping");
  if (r.quality_mapping_set) {
    Section m(node["quality_mapping"], "randomization.quality_mapping", sc);
    m.choice("kind", "ratio", {"ratio"});
    r.quality_coefficient = m.number("coefficient", r.quality_coefficient, Check::NonNegative);
    m.finish();
  }
  s.finish();
  return r;
}

TomographySection read_tomography(Section s) {
  TomographySection t;
  t.generation_rate = s.number("generation_rate", t.generation_rate, Check::Positive);
  t.shots = s.number("shots", t.shots, Check::Positive);
  t.mean_photon = s.number("mean_photon", t.mean_photon, Check::Positive);
  t.phase_error = s.number("phase_error", t.phase_error);
  t.coherence = s.number("coherence", t.coherence, Check::Probability);
  t.overlap_shots = s.number("overlap_shots", t.overlap_shots, Check::Positive);
  s.finish();
  return t;
}

EntanglementSection read_entanglement(Section s) {
  EntanglementSection e;
  e.pump_phase = s.number("pump_phase", e.pump_phase);
  e.pump_early_weight = s.number("pump_early_weight", e.pump_early_weight, Check::Probability);
  e.pair_rate = s.number("pair_rate", e.pair_rate, Check::NonNegative);
  e.v_setup = s.number("v_setup", e.v_setup, Check::Probability);
  e.pair_efficiency = s.number("pair_efficiency", e.pair_efficiency, Check::Probability);
  e.accidental_rate = s.number("accidental_rate", e.accidental_rate, Check::NonNegative);
  e.exposure = s.number("exposure", e.exposure, Check::Positive);
  e.phase_points = s.count("phase_points", e.phase_points);
  e.phi_a = s.number("phi_a", e.phi_a);
  e.chsh_exposure = s.number("chsh_exposure", e.chsh_exposure, Check::Positive);
  s.finish();
  return e;
}

EncodeSection read_encode(Section s) {
  EncodeSection e;
  e.voltages = s.numbers("voltages", e.voltages);
  e.phases = s.numbers("phases", e.phases);
  if (e.phases.size() != e.voltages.size()) s.fail("phases", "needs one entry per voltage");
  e.spacing = s.number("spacing", e.spacing, Check::Positive);
  e.mode = s.choice("mode", "general", {"general", "three-state"}) == "three-state" ? TimingMode::ThreeState
                                                                                 : TimingMode::General;
  e.rep_rate = s.number("rep_rate", e.rep_rate, Check::Positive);
  s.finish();
  return e;
}

Scenario build(const YAML::Node& root, std::string source) {
  Scenario sc;
  sc.source = std::move(source);
  sc.resolved = nlohmann::json::object();
  if (root && !root.IsNull() && !root.IsMap()) throw ConfigError(sc.source + ": scenario must be a mapping");

  static const std::set<std::string> known{"seed",         "output_dir", "laser",         "hardware",
                                           "receiver",     "encode",     "qkd",           "sweep",
                                           "allan",        "randomization", "tomography", "entanglement"};
  if (root && root.IsMap()) {
    for (const auto& kv : root) {
      const auto key = kv.first.as<std::string>();
      if (!known.count(key)) throw ConfigError(where(sc.source, kv.first.Mark()) + ": unknown section '" + key + "'");
    }
  }
  auto node = [&root](const char* key) { return (root && root.IsMap()) ? root[key] : YAML::Node(YAML::NodeType::Undefined); };

  auto top = [&](const char* key) -> YAML::Node { return node(key); };
  if (auto n = top("seed")) {
    try {
      sc.seed = n.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      throw ConfigError(where(sc.source, n.Mark()) + ": field 'seed' expects a non-negative integer");
    }
  } else {
    sc.applied_defaults.push_back("seed");
  }
  if (auto n = top("output_dir")) {
    sc.output_dir = n.as<std::string>();
  } else {
    sc.applied_defaults.push_back("output_dir");
  }
  sc.resolved["seed"] = sc.seed;
  sc.resolved["output_dir"] = sc.output_dir;

  sc.laser = read_laser(Section(node("laser"), "laser", sc));
  sc.hardware = read_hardware(Section(node("hardware"), "hardware", sc));
  const auto rx_node = node("receiver");
  sc.receiver = read_receiver(Section(rx_node, "receiver", sc),
                              (rx_node && rx_node.IsMap()) ? rx_node["cascade"] : YAML::Node(YAML::NodeType::Undefined), sc);
  // Laser phases derive from the top-level seed.
  sc.laser.rng_seed = sc.seed;

  if (auto n = node("encode")) sc.encode = read_encode(Section(n, "encode", sc));
  if (auto n = node("qkd")) {
    sc.qkd = read_qkd(Section(n, "qkd", sc));
    sc.qkd->config.seed = sc.seed;
  }
  if (auto n = node("sweep")) sc.sweep = read_sweep(Section(n, "sweep", sc));
  if (auto n = node("allan")) sc.allan = read_allan(Section(n, "allan", sc));
  if (auto n = node("randomization")) sc.randomization = read_randomization(Section(n, "randomization", sc), n, sc);
  if (auto n = node("tomography")) sc.tomography = read_tomography(Section(n, "tomography", sc));
  if (auto n = node("entanglement")) sc.entanglement = read_entanglement(Section(n, "entanglement", sc));
  return sc;
}

Scenario parse_root(YAML::Node root, const std::vector<std::string>& overrides, std::string source) {
  if (!overrides.empty()) {
    if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    for (const auto& o : overrides) apply_override(root, o);
  }
  return build(root, std::move(source));
}

YAML::Node load(const std::string& text, const std::string& source) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(where(source, e.mark) + ": parse error: " + e.msg);
  }
}

}  // namespace

Scenario parse_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_root(load(ss.str(), path.string()), overrides, path.string());
}

Scenario parse_scenario_string(const std::string& text, const std::vector<std::string>& overrides) {
  return parse_root(load(text, "<string>"), overrides, "<string>");
}

}  // namespace tbq
