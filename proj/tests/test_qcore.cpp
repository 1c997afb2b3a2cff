#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "belltide/qcore.hpp"
#include "oracles.hpp"

using namespace belltide;

namespace {

constexpr double kR = 0.70710678118654752440;

void expect_amplitudes(const StateVector& s, std::initializer_list<Complex> expected, double tol = kAlgebraTol) {
  ASSERT_EQ(s.dim(), expected.size());
  std::size_t i = 0;
  for (const Complex& e : expected) {
    EXPECT_NEAR(s[i].real(), e.real(), tol) << "index " << i;
    EXPECT_NEAR(s[i].imag(), e.imag(), tol) << "index " << i;
    ++i;
  }
}

StateVector random_state(std::mt19937_64& rng, Register labels) {
  std::normal_distribution<double> g;
  std::vector<Complex> amps(std::size_t{1} << labels.size());
  double n2 = 0.0;
  for (auto& a : amps) {
    a = {g(rng), g(rng)};
    n2 += std::norm(a);
  }
  for (auto& a : amps) a /= std::sqrt(n2);
  return StateVector(std::move(labels), amps);
}

const Register kAB = {Party::alice, Party::bob};
const Register kAAB = {Party::ancilla, Party::alice, Party::bob};

}  // namespace

TEST(Tensor, BasisComposition) {
  const StateVector zero({Party::alice}, {1, 0});
  const StateVector zero_b({Party::bob}, {1, 0});
  expect_amplitudes(tensor(zero, zero_b), {1, 0, 0, 0});

  const StateVector one({Party::alice}, {0, 1});
  const StateVector plus({Party::bob}, {kR, kR});
  expect_amplitudes(tensor(one, plus), {0, 0, kR, kR});
}

TEST(Tensor, AncillaWithResource) {
  const double t = std::numbers::pi / 6;
  const StateVector anc({Party::ancilla}, {1, 0});
  const StateVector d(kAB, {std::cos(t), 0, 0, std::sin(t)});
  const StateVector s = tensor(anc, d);
  expect_amplitudes(s, {std::sqrt(3.0) / 2, 0, 0, 0.5, 0, 0, 0, 0});
  EXPECT_EQ(s.labels(), kAAB);
}

TEST(Tensor, RejectsMoreThanThreeQubits) {
  const StateVector a(kAB, {1, 0, 0, 0});
  const StateVector b({Party::ancilla, Party::bob}, {1, 0, 0, 0});
  EXPECT_THROW(tensor(a, b), std::invalid_argument);
}

TEST(Tensor, RejectsDuplicateLabels) {
  const StateVector a({Party::alice}, {1, 0});
  EXPECT_THROW(tensor(a, a), std::invalid_argument);
}

TEST(StateVectorTest, RejectsUnnormalizedAndNonFinite) {
  EXPECT_THROW(StateVector({Party::bob}, {1, 1}), std::invalid_argument);
  EXPECT_THROW(StateVector({Party::bob}, {std::nan(""), 0}), std::invalid_argument);
  EXPECT_THROW(StateVector({Party::bob}, {1, 0, 0, 0}), std::invalid_argument);
}

TEST(ApplyUnitary, PauliXOnLeastSignificantQubit) {
  // Bit 0 of a (alice, bob) register is bob.
  const StateVector s = StateVector::basis(kAB, 0);
  expect_amplitudes(apply_unitary(pauli_x(), {Party::bob}, s), {0, 1, 0, 0});
  expect_amplitudes(apply_unitary(pauli_x(), {Party::alice}, s), {0, 0, 1, 0});
}

TEST(ApplyUnitary, IdentityAndHadamardSquared) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    const StateVector s = random_state(rng, kAB);
    const StateVector same = apply_unitary(Matrix::identity(2), {Party::alice}, s);
    const StateVector back = apply_unitary(hadamard(), {Party::bob}, apply_unitary(hadamard(), {Party::bob}, s));
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(std::abs(same[k] - s[k]), 0.0, kAlgebraTol);
      EXPECT_NEAR(std::abs(back[k] - s[k]), 0.0, kAlgebraTol);
    }
  }
}

TEST(ApplyUnitary, RejectsBadInput) {
  const StateVector s = StateVector::basis(kAB, 0);
  EXPECT_THROW(apply_unitary(Matrix(2, {1, 0, 0, 2}), {Party::alice}, s), std::invalid_argument);
  EXPECT_THROW(apply_unitary(pauli_x(), {Party::ancilla}, s), std::invalid_argument);
  EXPECT_THROW(apply_unitary(cnot_ancilla_target(), {Party::alice, Party::alice}, s), std::invalid_argument);
  EXPECT_THROW(apply_unitary(cnot_ancilla_target(), {Party::alice}, s), std::invalid_argument);
}

TEST(ApplyUnitary, TwoQubitTargetOrderMatters) {
  // CNOT on (ancilla, alice) with alice as control: |0>|1> -> |1>|1>.
  const StateVector s = StateVector::basis({Party::ancilla, Party::alice}, 0b01);
  expect_amplitudes(apply_unitary(cnot_ancilla_target(), {Party::ancilla, Party::alice}, s), {0, 0, 0, 1});
  // Swapping the target roles makes the ancilla the control: |01> unchanged.
  expect_amplitudes(apply_unitary(cnot_ancilla_target(), {Party::alice, Party::ancilla}, s), {0, 1, 0, 0});
}

TEST(Gates, Hadamard) {
  const StateVector zero({Party::alice}, {1, 0}), one({Party::alice}, {0, 1});
  expect_amplitudes(apply_unitary(hadamard(), {Party::alice}, zero), {kR, kR});
  expect_amplitudes(apply_unitary(hadamard(), {Party::alice}, one), {kR, -kR});
  EXPECT_LE((hadamard() * hadamard()).max_abs_diff(Matrix::identity(2)), kAlgebraTol);
}

TEST(Gates, PhaseGate) {
  EXPECT_LE(phase_gate(0).max_abs_diff(Matrix::identity(2)), 0.0);
  const StateVector one({Party::alice}, {0, 1});
  expect_amplitudes(apply_unitary(phase_gate(std::numbers::pi), {Party::alice}, one), {0, -1});

  const StateVector d(kAB, {kR, 0, 0, kR});
  expect_amplitudes(apply_unitary(phase_gate(std::numbers::pi / 2), {Party::alice}, d), {kR, 0, 0, Complex(0, kR)});
  EXPECT_THROW(phase_gate(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST(Gates, CnotTruthTable) {
  const Register pair = {Party::ancilla, Party::alice};
  const Matrix cnot = cnot_ancilla_target();
  // |x>|0> -> |x>|0>, |x>|1> -> |x+1>|1>
  const std::array<std::size_t, 4> expected = {0b00, 0b11, 0b10, 0b01};
  for (std::size_t in = 0; in < 4; ++in) {
    const StateVector out = apply_unitary(cnot, {Party::ancilla, Party::alice}, StateVector::basis(pair, in));
    EXPECT_NEAR(std::abs(out[expected[in]]), 1.0, kAlgebraTol) << "input " << in;
  }
}

TEST(Gates, CnotOnAncillaAndPhasedResource) {
  const double t = 0.37, phi = 1.1;
  const StateVector anc({Party::ancilla}, {1, 0});
  const StateVector d(kAB, {std::cos(t), 0, 0, std::polar(std::sin(t), phi)});
  const StateVector out = apply_unitary(cnot_ancilla_target(), {Party::ancilla, Party::alice}, tensor(anc, d));
  expect_amplitudes(out, {std::cos(t), 0, 0, 0, 0, 0, 0, std::polar(std::sin(t), phi)});
}

TEST(BellStates, ExactVectorsAndOrthonormality) {
  const auto b = bell_states();
  expect_amplitudes(b[0], {kR, 0, 0, kR});
  expect_amplitudes(b[3], {0, kR, -kR, 0});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_NEAR(std::abs(b[i].inner(b[j]) - Complex(i == j ? 1.0 : 0.0)), 0.0, kAlgebraTol);
}

TEST(BellStates, ProjectorsAreComplete) {
  Matrix sum(4);
  for (const Matrix& p : bell_projectors()) sum = sum + p;
  EXPECT_LE(sum.max_abs_diff(Matrix::identity(4)), kAlgebraTol);
}

TEST(PauliDirection, AxesAndSquares) {
  EXPECT_LE(pauli_direction({0, 0, 1}).matrix().max_abs_diff(pauli_z()), 0.0);
  EXPECT_LE(pauli_direction({1, 0, 0}).matrix().max_abs_diff(pauli_x()), 0.0);
  const Matrix y = pauli_direction({0, 1, 0}).matrix();
  EXPECT_LE((y * y).max_abs_diff(Matrix::identity(2)), kAlgebraTol);
  EXPECT_TRUE(pauli_direction({0.6, 0, 0.8}).is_bivalent());
  EXPECT_THROW(pauli_direction({1, 1, 0}), std::invalid_argument);
}

TEST(Expectation, Examples) {
  const Observable z(pauli_z());
  EXPECT_NEAR(expectation(z, {Party::alice}, StateVector({Party::alice}, {1, 0})), 1.0, kAlgebraTol);

  const StateVector phi_plus = bell_states(kAB)[0];
  EXPECT_NEAR(correlation(z, std::array{Party::alice}, z, std::array{Party::bob}, phi_plus), 1.0, kAlgebraTol);

  // Brute force: explicit 4x4 sigma_z (x) sigma_x on the resource at pi/6.
  const double t = std::numbers::pi / 6;
  const StateVector d(kAB, {std::cos(t), 0, 0, std::sin(t)});
  const double brute = oracle::expect(oracle::kron(oracle::Z(), oracle::X()), oracle::resource(t));
  const Observable x(pauli_x());
  EXPECT_NEAR(brute, 0.0, 1e-15);
  EXPECT_NEAR(correlation(z, std::array{Party::alice}, x, std::array{Party::bob}, d), brute, kAlgebraTol);
}

TEST(Expectation, MatchesDenseKroneckerOnRandomInputs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 2 * std::numbers::pi);
  for (int i = 0; i < 200; ++i) {
    const StateVector s = random_state(rng, kAAB);
    const double p = u(rng), a = u(rng);
    oracle::Vec v(s.amplitudes().begin(), s.amplitudes().end());
    const Observable sig = pauli_direction({std::sin(p) * std::cos(a), std::sin(p) * std::sin(a), std::cos(p)});
    const Observable a1(Matrix(4, {0, 0, 0, -1, 0, 0, -1, 0, 0, -1, 0, 0, -1, 0, 0, 0}));  // -X(x)X
    const double dense = oracle::expect(oracle::kron(oracle::scale(oracle::kron(oracle::X(), oracle::X()), -1.0),
                                                     oracle::sigma(p, a)),
                                        v);
    EXPECT_NEAR(correlation(a1, std::array{Party::ancilla, Party::alice}, sig, std::array{Party::bob}, s), dense,
                kAlgebraTol);
    EXPECT_NEAR(expectation(sig, {Party::alice}, s),
                oracle::expect(oracle::kron(oracle::kron(oracle::eye(2), oracle::sigma(p, a)), oracle::eye(2)), v),
                kAlgebraTol);
  }
}

TEST(Expectation, ImaginaryResidueFlagsNonHermitian) {
  // Observable refuses non-Hermitian input up front.
  EXPECT_THROW(Observable(Matrix(2, {0, 1, 0, 0})), std::invalid_argument);
  EXPECT_THROW(Observable(Matrix(8)), std::invalid_argument);
}

TEST(ProjectiveMeasure, ZBasisOnPlus) {
  const StateVector plus({Party::alice}, {kR, kR});
  const std::array<Matrix, 2> z = {Matrix(2, {1, 0, 0, 0}), Matrix(2, {0, 0, 0, 1})};
  const auto out = projective_measure(plus, {Party::alice}, z);
  ASSERT_EQ(out.size(), 2U);
  EXPECT_NEAR(out[0].probability, 0.5, kAlgebraTol);
  EXPECT_NEAR(out[1].probability, 0.5, kAlgebraTol);
  expect_amplitudes(*out[0].post_state, {1, 0});
  expect_amplitudes(*out[1].post_state, {0, 1});
}

TEST(ProjectiveMeasure, BellMeasurementOfCnotStagedState) {
  const double t = 0.5, phi = 0.9;
  const StateVector s(kAAB, {std::cos(t), 0, 0, 0, 0, 0, 0, std::polar(std::sin(t), phi)});
  const auto out = projective_measure(s, {Party::ancilla, Party::alice}, bell_projectors());
  EXPECT_NEAR(out[0].probability, 0.5, kAlgebraTol);
  EXPECT_NEAR(out[1].probability, 0.5, kAlgebraTol);
  EXPECT_EQ(out[2].probability, 0.0);
  EXPECT_EQ(out[3].probability, 0.0);
  EXPECT_FALSE(out[2].post_state.has_value());
  EXPECT_FALSE(out[3].post_state.has_value());
}

TEST(ProjectiveMeasure, GeneralAncillaProbabilities) {
  const double t = 0.3, phi = 2.0;
  const Complex a = std::polar(0.6, 0.4), b = std::polar(0.8, -1.3);
  const oracle::Vec v = oracle::rsp_bell_state(t, phi, a, b);
  const StateVector s(kAAB, v);
  const auto out = projective_measure(s, {Party::ancilla, Party::alice}, bell_projectors());
  EXPECT_NEAR(out[0].probability, std::norm(a) / 2, kAlgebraTol);
  EXPECT_NEAR(out[1].probability, std::norm(a) / 2, kAlgebraTol);
  EXPECT_NEAR(out[2].probability, std::norm(b) / 2, kAlgebraTol);
  EXPECT_NEAR(out[3].probability, std::norm(b) / 2, kAlgebraTol);
}

TEST(ProjectiveMeasure, RejectsIncompleteFamily) {
  const StateVector s = StateVector::basis(kAB, 0);
  const std::array<Matrix, 1> only_zero = {Matrix(2, {1, 0, 0, 0})};
  EXPECT_THROW(projective_measure(s, {Party::alice}, only_zero), std::invalid_argument);
}

TEST(PartialTrace, Examples) {
  const StateVector phi_plus = bell_states(kAB)[0];
  EXPECT_LE(partial_trace(phi_plus, {Party::bob}).matrix().max_abs_diff(Complex{0.5} * Matrix::identity(2)), kAlgebraTol);

  const StateVector zz = StateVector::basis(kAB, 0);
  EXPECT_LE(partial_trace(zz, {Party::alice}).matrix().max_abs_diff(Matrix(2, {1, 0, 0, 0})), kAlgebraTol);

  const double t = std::numbers::pi / 6;
  const StateVector d(kAB, {std::cos(t), 0, 0, std::sin(t)});
  EXPECT_LE(partial_trace(d, {Party::alice}).matrix().max_abs_diff(Matrix(2, {0.75, 0, 0, 0.25})), kAlgebraTol);
}

TEST(PartialTrace, KeepsRegisterOrder) {
  const StateVector s = StateVector::basis(kAAB, 0b100);  // ancilla = 1
  const DensityMatrix r = partial_trace(s, {Party::alice, Party::ancilla});
  EXPECT_EQ(r.labels(), (Register{Party::ancilla, Party::alice}));
  EXPECT_NEAR(r.matrix()(2, 2).real(), 1.0, kAlgebraTol);
}

TEST(PartialTrace, RejectsEmptyOrFullKeep) {
  const StateVector s = StateVector::basis(kAB, 0);
  EXPECT_THROW(partial_trace(s, std::span<const Party>{}), std::invalid_argument);
  EXPECT_THROW(partial_trace(s, {Party::alice, Party::bob}), std::invalid_argument);
}

TEST(Fidelity, Examples) {
  const StateVector zero({Party::bob}, {1, 0}), one({Party::bob}, {0, 1});
  EXPECT_NEAR(fidelity_pure(zero, DensityMatrix::from_pure(zero)), 1.0, kAlgebraTol);
  EXPECT_NEAR(fidelity_pure(zero, DensityMatrix::from_pure(one)), 0.0, kAlgebraTol);
  const DensityMatrix mixed({Party::bob}, Complex{0.5} * Matrix::identity(2));
  EXPECT_NEAR(fidelity_pure(zero, mixed), 0.5, kAlgebraTol);
  EXPECT_THROW(fidelity_pure(zero, DensityMatrix::from_pure(StateVector::basis(kAB, 0))), std::invalid_argument);
}

TEST(DensityMatrixTest, RejectsInvalid) {
  EXPECT_THROW(DensityMatrix({Party::bob}, Matrix(2, {1, 0, 0, 1})), std::invalid_argument);       // trace 2
  EXPECT_THROW(DensityMatrix({Party::bob}, Matrix(2, {1.5, 0, 0, -0.5})), std::invalid_argument);  // negative
  EXPECT_THROW(DensityMatrix({Party::bob}, Matrix(2, {0.5, 1, 0, 0.5})), std::invalid_argument);   // not Hermitian
}

// ---- Properties -------------------------------------------------------------

TEST(QcoreProperties, NormPreservation) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int i = 0; i < 1000; ++i) {
    StateVector s = random_state(rng, kAAB);
    switch (pick(rng)) {
      case 0: s = apply_unitary(hadamard(), {Party::alice}, s); break;
      case 1: s = apply_unitary(phase_gate(u(rng)), {Party::bob}, s); break;
      case 2: s = apply_unitary(cnot_ancilla_target(), {Party::ancilla, Party::alice}, s); break;
      default: {
        const double p = u(rng), a = u(rng);
        s = apply_unitary(pauli_direction({std::sin(p) * std::cos(a), std::sin(p) * std::sin(a), std::cos(p)}).matrix(),
                          {Party::ancilla}, s);
      }
    }
    EXPECT_NEAR(s.norm(), 1.0, kAlgebraTol);
  }
}

TEST(QcoreProperties, MeasurementCompleteness) {
  std::mt19937_64 rng(99);
  const auto bell = bell_projectors();
  const std::array<Matrix, 2> z = {Matrix(2, {1, 0, 0, 0}), Matrix(2, {0, 0, 0, 1})};
  for (int i = 0; i < 1000; ++i) {
    const StateVector s = random_state(rng, kAAB);
    const auto out = i % 2 ? projective_measure(s, {Party::ancilla, Party::alice}, bell)
                           : projective_measure(s, {Party::bob}, z);
    double total = 0.0;
    for (const auto& b : out) {
      total += b.probability;
      if (b.post_state) {
        EXPECT_NEAR(b.post_state->norm(), 1.0, kAlgebraTol);
      }
    }
    EXPECT_NEAR(total, 1.0, kAccumTol);
  }
}

TEST(QcoreProperties, PartialTraceOfProductRecoversFactor) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const StateVector a = random_state(rng, {Party::alice});
    const StateVector b = random_state(rng, {Party::bob});
    const DensityMatrix r = partial_trace(tensor(a, b), {Party::alice});
    EXPECT_LE(r.matrix().max_abs_diff(outer(a.amplitudes())), kAlgebraTol);
  }
}

TEST(ConditionalState, ExtractsRemainingParties) {
  const double t = 0.4, phi = 0.7;
  const StateVector s(kAAB, oracle::rsp_bell_state(t, phi));
  const auto bob = conditional_state(bell_states()[1], s);  // phi-
  ASSERT_TRUE(bob.has_value());
  EXPECT_EQ(bob->labels(), (Register{Party::bob}));
  const StateVector expected({Party::bob}, {std::cos(t), -std::polar(std::sin(t), phi)});
  EXPECT_NEAR(fidelity_pure(expected, *bob), 1.0, kAlgebraTol);
  EXPECT_FALSE(conditional_state(bell_states()[2], s).has_value());
}
