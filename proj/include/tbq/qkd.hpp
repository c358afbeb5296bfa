// Decoy-state BB84 sessions (three- and four-state) driven through the
// encoder and receiver models, finite-key key-rate bounds and
// first-neighbour patterning analysis.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tbq/core.hpp"
#include "tbq/encoder.hpp"
#include "tbq/laser.hpp"
#include "tbq/receiver.hpp"

namespace tbq {

enum class Protocol { ThreeState, FourState };
enum class QkdState : std::uint8_t { E = 0, L = 1, Plus = 2, Minus = 3 };
enum class Basis : std::uint8_t { Z = 0, X = 1 };
enum class Intensity : std::uint8_t { Signal = 0, Decoy = 1 };

const char* to_string(QkdState s);
const char* to_string(Protocol p);

inline Basis basis_of(QkdState s) { return (s == QkdState::E || s == QkdState::L) ? Basis::Z : Basis::X; }
inline int bit_of(QkdState s) { return (s == QkdState::E || s == QkdState::Plus) ? 0 : 1; }

struct QkdSymbol {
  QkdState state = QkdState::E;
  Intensity intensity = Intensity::Signal;
  Basis basis() const { return basis_of(state); }
  bool operator==(const QkdSymbol&) const = default;
};

struct QkdConfig {
  Protocol protocol = Protocol::FourState;
  double rep_rate = 100e6;          // Hz
  double bin_spacing = 2e-9;        // s
  double mu = 0.6;
  double nu = 0.2;
  double p_mu = 0.7;
  double p_nu = 0.3;
  double p_z = 0.87;
  double p_x = 0.13;
  double channel_loss_db = 0;
  double block_size = 1e9;          // states per finite-key block
  double epsilon_sec = 1e-9;
  double epsilon_cor = 1e-15;
  double ec_efficiency = 1.16;
  std::size_t sequence_length = 512;
  std::uint64_t seed = 1;
  double alignment_jitter = 0;      // s; misassigned fraction = jitter / bin_spacing
  double patterning_coupling = 0;   // fraction of the previous late-bin flux spilling forward
  std::size_t qber_windows = 10;

  void validate() const;
};

std::vector<QkdSymbol> generate_sequence(const QkdConfig& cfg);

struct Estimate {
  double value = 0;
  double error = 0;
};

/// errors / n with binomial standard error; NaN value when n == 0.
Estimate binomial_estimate(double errors, double n);

/// Sifted detections n and errors m for one (basis, intensity) cell.
struct CellCounts {
  double n = 0;
  double m = 0;
};

struct SiftedCounts {
  std::array<std::array<CellCounts, 2>, 2> cell{};  // [basis][intensity]

  CellCounts& at(Basis b, Intensity i) { return cell[static_cast<int>(b)][static_cast<int>(i)]; }
  const CellCounts& at(Basis b, Intensity i) const { return cell[static_cast<int>(b)][static_cast<int>(i)]; }
  double n(Basis b) const { return at(b, Intensity::Signal).n + at(b, Intensity::Decoy).n; }
  double m(Basis b) const { return at(b, Intensity::Signal).m + at(b, Intensity::Decoy).m; }
};

struct QberWindow {
  double t_start = 0;
  double t_end = 0;
  SiftedCounts counts;
  Estimate qber_z;
  Estimate qber_x;
  bool flagged = false;           // a basis saw no sifted detections
  std::optional<double> skr;
};

struct PositionOutcome {
  QkdSymbol symbol;
  double sifted = 0;
  double errors = 0;
};

struct PatterningCell {
  QkdState current = QkdState::E;
  QkdState previous = QkdState::E;
  double mean_qber = 0;
  double std_qber = 0;
  std::size_t occurrences = 0;
  bool low_statistics = false;
  bool absent = false;
};

struct SessionResult {
  double duration = 0;
  double states_sent = 0;
  SiftedCounts counts;
  double total_detections = 0;
  double sifted_z = 0;
  double sifted_x = 0;
  double discarded = 0;
  Estimate qber_z;
  Estimate qber_x;
  std::optional<double> skr;
  std::string skr_note;
  std::vector<QberWindow> windows;
  std::vector<QkdSymbol> sequence;
  std::vector<PositionOutcome> positions;
  std::vector<PatterningCell> patterning;
};

/// Per-symbol gate fluxes (mean photons) at Bob: Z-arm early/late gates
/// and the two interferometer ports at the central slot.
struct GateFlux {
  double z_early = 0;
  double z_late = 0;
  double x_port0 = 0;
  double x_port1 = 0;
};

/// Encoder -> channel -> receiver chain for every (state, intensity);
/// indexed [state][intensity]. Throws InfeasibleError on timing violations.
std::array<std::array<GateFlux, 2>, 4> symbol_fluxes(const QkdConfig& cfg, const HardwareConfig& hw,
                                                     const LaserConfig& laser,
                                                     const ReceiverConfig& rx);

/// The encoded qudit for one symbol.
TimeBinState encode_symbol(const QkdConfig& cfg, const HardwareConfig& hw, const LaserConfig& laser,
                           QkdState state, Intensity intensity);

/// Verifies encoder and laser timing at cfg.rep_rate.
void check_session_timing(const QkdConfig& cfg, const HardwareConfig& hw, const LaserConfig& laser);

/// Monte-Carlo session of round(rep_rate * duration) symbols cycling the
/// pseudo-random sequence.
SessionResult run_session(const QkdConfig& cfg, const HardwareConfig& hw, const LaserConfig& laser,
                          const ReceiverConfig& rx, double duration);

/// Same pipeline with exact expected counts for `states` sent symbols.
SessionResult expected_session(const QkdConfig& cfg, const HardwareConfig& hw,
                               const LaserConfig& laser, const ReceiverConfig& rx, double states);

struct FiniteKeyBreakdown {
  double s_z0 = 0;
  double s_z1 = 0;
  double s_x1 = 0;
  double v_x1 = 0;
  double phase_error = 0;   // upper bound on the single-photon phase error rate
  double leak_ec = 0;
  double key_length = 0;
  double skr = 0;           // bits/s, >= 0
};

/// Two-intensity decoy bounds with Hoeffding deviations at epsilon_sec.
FiniteKeyBreakdown finite_key_analysis(const SiftedCounts& counts, const QkdConfig& cfg,
                                       double duration);
double finite_key_skr(const SessionResult& result, const QkdConfig& cfg);

std::vector<PatterningCell> patterning_analysis(Protocol protocol,
                                                const std::vector<PositionOutcome>& positions);

enum class SweepAxis { RepRate, BinSpacing };

struct SweepPoint {
  SweepAxis axis = SweepAxis::RepRate;
  double value = 0;
  bool feasible = false;
  std::string reason;
  std::optional<SessionResult> result;
};

std::vector<SweepPoint> parameter_sweep(const QkdConfig& cfg, const HardwareConfig& hw,
                                        const LaserConfig& laser, const ReceiverConfig& rx,
                                        SweepAxis axis, const std::vector<double>& values,
                                        double duration);

}  // namespace tbq
