// protocols.hpp
// Teleportation and the two remote-state-preparation schemes over the shared
// resource cos(theta)|00> + sin(theta)|11>, plus the teleportation fidelity.

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "belltide/qcore.hpp"

namespace belltide {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kThetaMax = kPi / 4.0;

inline void validate_theta(double theta) {
  if (!std::isfinite(theta) || theta < -kAlgebraTol || theta > kThetaMax + kAlgebraTol)
    throw std::invalid_argument("theta must lie in [0, pi/4]");
}

inline void validate_phase(double phi) {
  if (!std::isfinite(phi)) throw std::invalid_argument("phase must be finite");
}

// cos(theta)|00> + sin(theta)|11> on (alice, bob).
inline StateVector resource_state(double theta) {
  validate_theta(theta);
  return StateVector({Party::alice, Party::bob}, {std::cos(theta), 0, 0, std::sin(theta)});
}

// The state Alice wants at Bob's end: cos(theta)|0> + e^{i phi} sin(theta)|1>.
struct TargetSpec {
  double theta = 0.0;
  double phi = 0.0;

  StateVector state() const {
    validate_theta(theta);
    validate_phase(phi);
    return StateVector({Party::bob}, {std::cos(theta), std::polar(std::sin(theta), phi)});
  }
};

// a|0> + b|1>; serves both as the Bell-scheme helper qubit and the teleported input.
class AncillaState {
 public:
  AncillaState() = default;

  AncillaState(Complex a, Complex b) : a_(a), b_(b) {
    if (!std::isfinite(std::abs(a)) || !std::isfinite(std::abs(b)))
      throw std::invalid_argument("AncillaState: non-finite amplitude");
    if (std::abs(std::norm(a) + std::norm(b) - 1.0) > kAlgebraTol)
      throw std::invalid_argument("AncillaState: |a|^2 + |b|^2 != 1");
  }

  // cos(polar/2)|0> + e^{i azimuth} sin(polar/2)|1>
  static AncillaState from_bloch(double polar, double azimuth) {
    return {std::cos(polar / 2.0), std::polar(std::sin(polar / 2.0), azimuth)};
  }

  Complex a() const { return a_; }
  Complex b() const { return b_; }

  StateVector state(Party label = Party::ancilla) const { return StateVector({label}, {a_, b_}); }

 private:
  Complex a_{1.0};
  Complex b_{0.0};
};

enum class Scheme { teleport, rsp_vn, rsp_bell };

struct ProtocolBranch {
  std::string outcome;
  double probability = 0.0;
  // Both empty when the outcome cannot occur.
  std::optional<StateVector> bob_pre_correction;
  std::optional<StateVector> bob_post_correction;
};

struct ProtocolRun {
  Scheme scheme = Scheme::teleport;
  std::vector<ProtocolBranch> branches;
  int classical_bits = 0;

  double total_probability() const {
    double p = 0.0;
    for (const auto& b : branches) p += b.probability;
    return p;
  }
};

// Bob's correction unitaries. The defaults are the standard ones; swapping them
// out is how fault-injection checks exercise the determinism suites.
struct Corrections {
  // Applied in the RSP schemes to the "minus" outcomes.
  Matrix rsp_flip = pauli_z();
  // Teleportation, indexed by BellLabel: phi+ -> I, phi- -> Z, psi+ -> X, psi- -> X.Z
  std::array<Matrix, 4> teleport = {Matrix::identity(2), pauli_z(), pauli_x(), pauli_x() * pauli_z()};
};

namespace detail {

inline ProtocolBranch make_branch(std::string outcome, double probability, std::optional<StateVector> bob,
                                  const Matrix& correction) {
  ProtocolBranch b{std::move(outcome), probability, std::move(bob), std::nullopt};
  if (b.bob_pre_correction) b.bob_post_correction = apply_unitary(correction, {Party::bob}, *b.bob_pre_correction);
  return b;
}

}  // namespace detail

// Phase rotation then Hadamard on Alice's qubit:
// (1/sqrt2)[|0>(c|0> + s e^{i phi}|1>) + |1>(c|0> - s e^{i phi}|1>)]
inline StateVector stage_rsp_vn(double theta, double phi) {
  validate_phase(phi);
  const StateVector rotated = apply_unitary(phase_gate(phi), {Party::alice}, resource_state(theta));
  return apply_unitary(hadamard(), {Party::alice}, rotated);
}

inline ProtocolRun run_rsp_vn(double theta, double phi, const Corrections& corr = {}) {
  const StateVector staged = stage_rsp_vn(theta, phi);
  const std::array<Matrix, 2> z_basis = {Matrix(2, {1, 0, 0, 0}), Matrix(2, {0, 0, 0, 1})};
  const auto measured = projective_measure(staged, {Party::alice}, z_basis);

  ProtocolRun run{Scheme::rsp_vn, {}, 1};
  const Matrix id = Matrix::identity(2);
  for (std::size_t k = 0; k < 2; ++k) {
    std::optional<StateVector> bob;
    if (measured[k].post_state)
      bob = conditional_state(StateVector::basis({Party::alice}, k), *measured[k].post_state);
    run.branches.push_back(
        detail::make_branch(k == 0 ? "+1" : "-1", measured[k].probability, std::move(bob), k == 0 ? id : corr.rsp_flip));
  }
  return run;
}

// Phase rotation on Alice, then CNOT from Alice onto the ancilla. Register
// order is (ancilla, alice, bob); for ancilla |0> this is
// cos(theta)|0>|00> + sin(theta) e^{i phi}|1>|11>.
inline StateVector stage_rsp_bell(double theta, double phi, const AncillaState& ancilla = {}) {
  validate_phase(phi);
  const StateVector rotated = apply_unitary(phase_gate(phi), {Party::alice}, resource_state(theta));
  return apply_unitary(cnot_ancilla_target(), {Party::ancilla, Party::alice}, tensor(ancilla.state(), rotated));
}

namespace detail {

inline std::vector<MeasurementBranch> bell_measure(const StateVector& s) {
  const auto projectors = bell_projectors();
  return projective_measure(s, {Party::ancilla, Party::alice}, projectors);
}

}  // namespace detail

// Four Bell outcomes clubbed into {phi+, psi+} (no correction) and {phi-, psi-} (phase flip).
inline ProtocolRun run_rsp_bell(double theta, double phi, const AncillaState& ancilla = {},
                                const Corrections& corr = {}) {
  const StateVector staged = stage_rsp_bell(theta, phi, ancilla);
  const auto measured = detail::bell_measure(staged);
  const auto bells = bell_states();
  const Matrix id = Matrix::identity(2);

  ProtocolRun run{Scheme::rsp_bell, {}, 1};
  for (std::size_t k = 0; k < 4; ++k) {
    const BellLabel label = kBellLabels[k];
    const bool minus_pair = label == BellLabel::phi_minus || label == BellLabel::psi_minus;
    std::optional<StateVector> bob;
    if (measured[k].post_state) bob = conditional_state(bells[k], *measured[k].post_state);
    run.branches.push_back(detail::make_branch(std::string(to_string(label)), measured[k].probability, std::move(bob),
                                               minus_pair ? corr.rsp_flip : id));
  }
  return run;
}

// Probability of the clubbed outcome pairs {phi+, psi+} and {phi-, psi-}.
inline std::array<double, 2> paired_probabilities(const ProtocolRun& run) {
  if (run.scheme != Scheme::rsp_bell || run.branches.size() != 4)
    throw std::invalid_argument("paired_probabilities: needs a Bell-measurement RSP run");
  return {run.branches[0].probability + run.branches[2].probability,
          run.branches[1].probability + run.branches[3].probability};
}

// Standard teleportation of eta through the resource, without assuming theta = pi/4.
inline ProtocolRun run_teleport(double theta, const AncillaState& eta, const Corrections& corr = {}) {
  const StateVector joint = tensor(eta.state(), resource_state(theta));
  const auto measured = detail::bell_measure(joint);
  const auto bells = bell_states();

  ProtocolRun run{Scheme::teleport, {}, 2};
  for (std::size_t k = 0; k < 4; ++k) {
    std::optional<StateVector> bob;
    if (measured[k].post_state) bob = conditional_state(bells[k], *measured[k].post_state);
    run.branches.push_back(detail::make_branch(std::string(to_string(kBellLabels[k])), measured[k].probability,
                                               std::move(bob), corr.teleport[k]));
  }
  return run;
}

// Probability-weighted fidelity of Bob's corrected state with `target`.
inline double average_fidelity(const ProtocolRun& run, const StateVector& target) {
  double f = 0.0;
  for (const auto& b : run.branches)
    if (b.bob_post_correction) f += b.probability * fidelity_pure(target, *b.bob_post_correction);
  return f;
}

// Haar-averaged teleportation fidelity, (2/3)(cos^3 - sin^3)/(cos - sin),
// evaluated through the equivalent (2/3)(1 + sin(theta)cos(theta)) so that
// theta = pi/4 needs no special case.
inline double teleport_fidelity_closed(double theta) {
  validate_theta(theta);
  return (2.0 / 3.0) * (1.0 + std::sin(theta) * std::cos(theta));
}

// Product rule on the Bloch sphere: Gauss-Legendre in cos(polar) times a
// uniform azimuth grid. Exact for the low-degree polynomials the fidelity
// integrand reduces to.
struct SphereQuadrature {
  int polar_nodes = 100;
  int azimuth_nodes = 100;

  std::size_t size() const { return static_cast<std::size_t>(polar_nodes) * static_cast<std::size_t>(azimuth_nodes); }
};

struct QuadratureNode {
  double polar;
  double azimuth;
  double weight;  // weights sum to 1
};

namespace detail {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Nodes and weights of n-point Gauss-Legendre on [-1, 1].
inline std::vector<std::pair<double, double>> gauss_legendre(int n) {
  std::vector<std::pair<double, double>> out(static_cast<std::size_t>(n));
  const auto un = static_cast<unsigned>(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double p = std::legendre(un, x);
      const double pm1 = std::legendre(un - 1, x);
      dp = n * (x * p - pm1) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double p = std::legendre(un, x), pm1 = std::legendre(un - 1, x);
    dp = n * (x * p - pm1) / (x * x - 1.0);
    out[static_cast<std::size_t>(i)] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
  }
  return out;
}

}  // namespace detail

inline std::vector<QuadratureNode> sphere_nodes(const SphereQuadrature& q) {
  if (q.polar_nodes < 2 || q.azimuth_nodes < 1) throw std::invalid_argument("SphereQuadrature: too few nodes");
  std::vector<QuadratureNode> nodes;
  nodes.reserve(q.size());
  for (const auto& [z, w] : detail::gauss_legendre(q.polar_nodes))
    for (int k = 0; k < q.azimuth_nodes; ++k)
      nodes.push_back({std::acos(z), 2.0 * kPi * k / q.azimuth_nodes, 0.5 * w / q.azimuth_nodes});
  return nodes;
}

// Sphere average of the branch-weighted post-correction fidelity.
inline double teleport_fidelity_numeric(double theta, const SphereQuadrature& q = {}, const Corrections& corr = {}) {
  validate_theta(theta);
  detail::CompensatedSum acc;
  for (const auto& node : sphere_nodes(q)) {
    const AncillaState eta = AncillaState::from_bloch(node.polar, node.azimuth);
    acc.add(node.weight * average_fidelity(run_teleport(theta, eta, corr), eta.state(Party::bob)));
  }
  return acc.value();
}

}  // namespace belltide
