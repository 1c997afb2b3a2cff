// correlators.hpp
// CHSH-type and I3322-type correlators for the teleportation and RSP
// measurement scenarios, and the flat setting-vector encoding used by the
// optimizer.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "belltide/protocols.hpp"
#include "belltide/qcore.hpp"

namespace belltide {

inline const double kTsirelson = 2.0 * std::numbers::sqrt2;

// Alice's bivalent Bell-basis observables on (ancilla, alice).
//   A1 =  P(phi-) + P(psi-) - P(phi+) - P(psi+)
//   A2 = -P(phi-) + P(psi-) + P(phi+) - P(psi+)
inline const Observable& observable_A1() {
  static const Observable a1 = [] {
    const auto p = bell_projectors();
    return Observable(p[1] + p[3] - p[0] - p[2]);
  }();
  return a1;
}

inline const Observable& observable_A2() {
  static const Observable a2 = [] {
    const auto p = bell_projectors();
    return Observable(p[0] + p[3] - p[1] - p[2]);
  }();
  return a2;
}

inline const Observable& observable_sigma_z() {
  static const Observable z(pauli_z());
  return z;
}

// Spin measurement direction on Bob's side.
struct BobSetting {
  double polar = 0.0;
  double azimuth = 0.0;

  std::array<double, 3> direction() const {
    return {std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth), std::cos(polar)};
  }
  Observable observable() const { return pauli_direction(direction()); }
};

namespace detail {

inline constexpr std::array<Party, 2> kAncillaAlice = {Party::ancilla, Party::alice};
inline constexpr std::array<Party, 1> kAlice = {Party::alice};
inline constexpr std::array<Party, 1> kBob = {Party::bob};

// One of Alice's settings: the staged state it prepares and what she measures.
struct AliceSetting {
  StateVector state;
  const Observable* op;
  std::span<const Party> targets;
};

inline double chsh_value(const AliceSetting& a1, const AliceSetting& a2, const Observable& s1, const Observable& s2) {
  return std::abs(correlation(*a1.op, a1.targets, s1, kBob, a1.state) +
                  correlation(*a1.op, a1.targets, s2, kBob, a1.state) +
                  correlation(*a2.op, a2.targets, s1, kBob, a2.state) -
                  correlation(*a2.op, a2.targets, s2, kBob, a2.state));
}

inline std::array<Party, 3> complement_of(std::span<const Party> targets, const Register& labels) {
  std::array<Party, 3> out{};
  std::size_t n = 0;
  for (Party p : labels)
    if (std::find(targets.begin(), targets.end(), p) == targets.end()) out[n++] = p;
  return out;
}

}  // namespace detail

// |<A1 s1>_{eta1 D} + <A1 s2>_{eta1 D} + <A2 s1>_{eta2 D} - <A2 s2>_{eta2 D}|
inline double chsh_teleport(double theta, const AncillaState& eta1, const AncillaState& eta2, const BobSetting& n1,
                            const BobSetting& n2) {
  const StateVector d = resource_state(theta);
  return detail::chsh_value({tensor(eta1.state(), d), &observable_A1(), detail::kAncillaAlice},
                            {tensor(eta2.state(), d), &observable_A2(), detail::kAncillaAlice}, n1.observable(),
                            n2.observable());
}

// Alice's setting is her phase; she always measures sigma_z after the Hadamard.
inline double chsh_rsp_vn(double theta, double phi1, double phi2, const BobSetting& n1, const BobSetting& n2) {
  return detail::chsh_value({stage_rsp_vn(theta, phi1), &observable_sigma_z(), detail::kAlice},
                            {stage_rsp_vn(theta, phi2), &observable_sigma_z(), detail::kAlice}, n1.observable(),
                            n2.observable());
}

inline double chsh_rsp_bell(double theta, double phi1, double phi2, const BobSetting& n1, const BobSetting& n2,
                            const AncillaState& ancilla = {}) {
  return detail::chsh_value({stage_rsp_bell(theta, phi1, ancilla), &observable_A1(), detail::kAncillaAlice},
                            {stage_rsp_bell(theta, phi2, ancilla), &observable_A2(), detail::kAncillaAlice},
                            n1.observable(), n2.observable());
}

// P(a = -1, b = -1) = <s| (I - a)/2 (x) (I - b)/2 |s>
inline double joint_prob_minus_minus(const Observable& a, std::span<const Party> targets_a, const Observable& b,
                                     std::span<const Party> targets_b, const StateVector& s) {
  if (!a.is_bivalent() || !b.is_bivalent()) throw std::invalid_argument("joint_prob_minus_minus: observable is not bivalent");
  const Observable pa(a.projector(-1));
  const Observable pb(b.projector(-1));
  return correlation(pa, targets_a, pb, targets_b, s);
}

// P(m = -1) on a (reduced) density matrix.
inline double prob_minus(const Observable& m, const DensityMatrix& rho) {
  if (!m.is_bivalent()) throw std::invalid_argument("prob_minus: observable is not bivalent");
  return expectation(Observable(m.projector(-1)), rho);
}

namespace detail {

// Three-setting inequality with joint terms
//   +J11 +J21 +J31 +J12 +J22 -J32 +J13 -J23
// (J_kj = P(Alice setting k = -1, Bob setting j = -1)) and marginals
//   -P(A_1 = -1) - 2 P(B_1 = -1) - P(B_2 = -1)
// taken on the first setting's state.
inline double i3322_value(const std::array<AliceSetting, 3>& alice, const std::array<Observable, 3>& bob) {
  auto j = [&](int k, int b) {
    const AliceSetting& a = alice[static_cast<std::size_t>(k)];
    return joint_prob_minus_minus(*a.op, a.targets, bob[static_cast<std::size_t>(b)], kBob, a.state);
  };
  const AliceSetting& first = alice[0];
  const auto others = complement_of(kBob, first.state.labels());
  const std::size_t n_alice = first.state.labels().size() - 1;
  const DensityMatrix alice_side = partial_trace(first.state, std::span<const Party>(others.data(), n_alice));
  const DensityMatrix bob_side = partial_trace(first.state, kBob);

  // Alice's operator acts on her reduced register in source order.
  if (alice_side.labels().size() != first.targets.size() ||
      !std::equal(first.targets.begin(), first.targets.end(), alice_side.labels().begin()))
    throw std::logic_error("i3322_value: Alice targets must cover her whole reduced register in order");

  return j(0, 0) + j(1, 0) + j(2, 0) + j(0, 1) + j(1, 1) - j(2, 1) + j(0, 2) - j(1, 2) -
         prob_minus(*first.op, alice_side) - 2.0 * prob_minus(bob[0], bob_side) - prob_minus(bob[1], bob_side);
}

}  // namespace detail

// Alice measures A1 while teleporting eta1 or eta2 and A2 while teleporting eta3.
// Signed value; the local bound is 0.
inline double i3322_teleport(double theta, const std::array<AncillaState, 3>& eta, const std::array<BobSetting, 3>& n) {
  const StateVector d = resource_state(theta);
  return detail::i3322_value({detail::AliceSetting{tensor(eta[0].state(), d), &observable_A1(), detail::kAncillaAlice},
                              detail::AliceSetting{tensor(eta[1].state(), d), &observable_A1(), detail::kAncillaAlice},
                              detail::AliceSetting{tensor(eta[2].state(), d), &observable_A2(), detail::kAncillaAlice}},
                             {n[0].observable(), n[1].observable(), n[2].observable()});
}

inline double i3322_rsp_vn(double theta, const std::array<double, 3>& phi, const std::array<BobSetting, 3>& n) {
  return detail::i3322_value({detail::AliceSetting{stage_rsp_vn(theta, phi[0]), &observable_sigma_z(), detail::kAlice},
                              detail::AliceSetting{stage_rsp_vn(theta, phi[1]), &observable_sigma_z(), detail::kAlice},
                              detail::AliceSetting{stage_rsp_vn(theta, phi[2]), &observable_sigma_z(), detail::kAlice}},
                             {n[0].observable(), n[1].observable(), n[2].observable()});
}

inline double i3322_rsp_bell(double theta, const std::array<double, 3>& phi, const std::array<BobSetting, 3>& n,
                             const AncillaState& ancilla = {}) {
  return detail::i3322_value(
      {detail::AliceSetting{stage_rsp_bell(theta, phi[0], ancilla), &observable_A1(), detail::kAncillaAlice},
       detail::AliceSetting{stage_rsp_bell(theta, phi[1], ancilla), &observable_A1(), detail::kAncillaAlice},
       detail::AliceSetting{stage_rsp_bell(theta, phi[2], ancilla), &observable_A2(), detail::kAncillaAlice}},
      {n[0].observable(), n[1].observable(), n[2].observable()});
}

// ---- Scenarios and setting vectors ----------------------------------------

enum class ScenarioKind : std::uint8_t { tele_chsh, rsp_vn_chsh, rsp_bell_chsh, tele_i3322, rsp_vn_i3322, rsp_bell_i3322 };

inline constexpr std::array<ScenarioKind, 6> kAllScenarioKinds = {
    ScenarioKind::tele_chsh,  ScenarioKind::rsp_vn_chsh,  ScenarioKind::rsp_bell_chsh,
    ScenarioKind::tele_i3322, ScenarioKind::rsp_vn_i3322, ScenarioKind::rsp_bell_i3322};

constexpr std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::tele_chsh: return "tele-chsh";
    case ScenarioKind::rsp_vn_chsh: return "rsp-vn-chsh";
    case ScenarioKind::rsp_bell_chsh: return "rsp-bell-chsh";
    case ScenarioKind::tele_i3322: return "tele-i3322";
    case ScenarioKind::rsp_vn_i3322: return "rsp-vn-i3322";
    case ScenarioKind::rsp_bell_i3322: return "rsp-bell-i3322";
  }
  return "?";
}

inline std::optional<ScenarioKind> parse_scenario_kind(std::string_view name) {
  for (ScenarioKind k : kAllScenarioKinds)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

constexpr bool is_chsh(ScenarioKind k) {
  return k == ScenarioKind::tele_chsh || k == ScenarioKind::rsp_vn_chsh || k == ScenarioKind::rsp_bell_chsh;
}

constexpr bool is_teleport(ScenarioKind k) { return k == ScenarioKind::tele_chsh || k == ScenarioKind::tele_i3322; }

enum class ParameterKind : std::uint8_t {
  periodic,  // azimuths and phases, range [0, 2pi)
  polar      // Bloch polar angles, range [0, pi]
};

struct ParameterSpec {
  std::string name;
  ParameterKind kind;
  double lower() const { return 0.0; }
  double upper() const { return kind == ParameterKind::polar ? kPi : 2.0 * kPi; }
};

class Scenario {
 public:
  Scenario(ScenarioKind kind, double theta) : kind_(kind), theta_(theta) { validate_theta(theta); }

  ScenarioKind kind() const { return kind_; }
  double theta() const { return theta_; }

  // TELE_CHSH 8, RSP_*_CHSH 6, TELE_I3322 12, RSP_*_I3322 9.
  static std::vector<ParameterSpec> layout(ScenarioKind kind) {
    std::vector<ParameterSpec> out;
    const int settings = is_chsh(kind) ? 2 : 3;
    for (int i = 1; i <= settings; ++i) {
      const std::string idx = std::to_string(i);
      if (is_teleport(kind)) {
        out.push_back({"eta" + idx + "_polar", ParameterKind::polar});
        out.push_back({"eta" + idx + "_azimuth", ParameterKind::periodic});
      } else {
        out.push_back({"phi" + idx, ParameterKind::periodic});
      }
    }
    for (int i = 1; i <= settings; ++i) {
      const std::string idx = std::to_string(i);
      out.push_back({"n" + idx + "_polar", ParameterKind::polar});
      out.push_back({"n" + idx + "_azimuth", ParameterKind::periodic});
    }
    return out;
  }

  std::vector<ParameterSpec> layout() const { return layout(kind_); }
  std::size_t dimension() const { return layout_size(kind_); }

  static std::size_t layout_size(ScenarioKind kind) {
    switch (kind) {
      case ScenarioKind::tele_chsh: return 8;
      case ScenarioKind::rsp_vn_chsh:
      case ScenarioKind::rsp_bell_chsh: return 6;
      case ScenarioKind::tele_i3322: return 12;
      case ScenarioKind::rsp_vn_i3322:
      case ScenarioKind::rsp_bell_i3322: return 9;
    }
    return 0;
  }

  // Polar angles outside [0, pi] still name valid points (the sin/cos
  // parametrization extends smoothly), so no clamping happens here.
  double evaluate(std::span<const double> x) const {
    if (x.size() != dimension()) throw std::invalid_argument("Scenario::evaluate: wrong setting-vector length");
    auto eta = [&](std::size_t i) { return AncillaState::from_bloch(x[i], x[i + 1]); };
    auto bob = [&](std::size_t i) { return BobSetting{x[i], x[i + 1]}; };
    switch (kind_) {
      case ScenarioKind::tele_chsh: return chsh_teleport(theta_, eta(0), eta(2), bob(4), bob(6));
      case ScenarioKind::rsp_vn_chsh: return chsh_rsp_vn(theta_, x[0], x[1], bob(2), bob(4));
      case ScenarioKind::rsp_bell_chsh: return chsh_rsp_bell(theta_, x[0], x[1], bob(2), bob(4));
      case ScenarioKind::tele_i3322: return i3322_teleport(theta_, {eta(0), eta(2), eta(4)}, {bob(6), bob(8), bob(10)});
      case ScenarioKind::rsp_vn_i3322: return i3322_rsp_vn(theta_, {x[0], x[1], x[2]}, {bob(3), bob(5), bob(7)});
      case ScenarioKind::rsp_bell_i3322: return i3322_rsp_bell(theta_, {x[0], x[1], x[2]}, {bob(3), bob(5), bob(7)});
    }
    throw std::logic_error("Scenario::evaluate: unknown kind");
  }

 private:
  ScenarioKind kind_;
  double theta_;
};

inline double wrap_angle(double a) {
  double w = std::fmod(a, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  if (w >= 2.0 * kPi) w = 0.0;
  return w;
}

// Reduces a setting vector to canonical ranges without changing the point it
// names: polar angles are folded into [0, pi] (shifting the paired azimuth by
// pi), periodic parameters wrapped into [0, 2pi).
inline std::vector<double> canonical_settings(ScenarioKind kind, std::span<const double> x) {
  const auto spec = Scenario::layout(kind);
  if (x.size() != spec.size()) throw std::invalid_argument("canonical_settings: wrong length");
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec[i].kind != ParameterKind::polar) continue;
    double p = wrap_angle(out[i]);
    if (p > kPi) {
      p = 2.0 * kPi - p;
      out[i + 1] += kPi;
    }
    out[i] = p;
  }
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (spec[i].kind == ParameterKind::periodic) out[i] = wrap_angle(out[i]);
  return out;
}

struct CorrelatorResult {
  ScenarioKind kind = ScenarioKind::tele_chsh;
  double theta = 0.0;
  double value = 0.0;
  std::vector<double> settings;
  long evaluations = 0;
  bool converged = false;
  // Largest objective value seen across every evaluation of the search.
  double peak_evaluated = 0.0;
  // Best value from each local search, descending.
  std::vector<double> local_optima;
};

}  // namespace belltide
