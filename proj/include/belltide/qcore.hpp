// qcore.hpp
// Exact small-register quantum linear algebra: states, operators, local
// unitaries, projective measurement, partial trace and fidelity.
//
// Registers hold at most three qubits. Amplitude index i encodes the ket
// |b_{n-1} ... b_0> where the first listed party is the most significant bit,
// so a register labelled (ancilla, alice, bob) stores |ancilla alice bob>.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace belltide {

using Complex = std::complex<double>;

// Tolerance ladder.
inline constexpr double kAlgebraTol = 1e-12;
inline constexpr double kAccumTol = 1e-10;

inline constexpr int kMaxQubits = 3;
inline constexpr std::size_t kMaxDim = std::size_t{1} << kMaxQubits;

// Branches whose probability falls below this are reported without a post-state.
inline constexpr double kZeroProbability = 1e-24;

enum class Party : std::uint8_t { ancilla, alice, bob };

constexpr std::string_view to_string(Party p) {
  switch (p) {
    case Party::ancilla: return "ancilla";
    case Party::alice: return "alice";
    case Party::bob: return "bob";
  }
  return "?";
}

using Register = std::vector<Party>;

// Dense square complex matrix of dimension <= 8, row-major.
class Matrix {
 public:
  Matrix() = default;

  explicit Matrix(std::size_t dim) : dim_(dim) {
    if (dim == 0 || dim > kMaxDim) throw std::invalid_argument("Matrix: dimension must be in [1, 8]");
  }

  Matrix(std::size_t dim, std::initializer_list<Complex> row_major) : Matrix(dim) {
    if (row_major.size() != dim * dim) throw std::invalid_argument("Matrix: wrong number of entries");
    std::copy(row_major.begin(), row_major.end(), data_.begin());
  }

  static Matrix identity(std::size_t dim) {
    Matrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t dim() const { return dim_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }

  Matrix adjoint() const {
    Matrix out(dim_);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
  }

  Complex trace() const {
    Complex t{};
    for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  double max_abs_diff(const Matrix& other) const {
    require_same_dim(other);
    double d = 0.0;
    for (std::size_t i = 0; i < dim_ * dim_; ++i) d = std::max(d, std::abs(data_[i] - other.data_[i]));
    return d;
  }

  bool is_hermitian(double tol = kAlgebraTol) const { return max_abs_diff(adjoint()) <= tol; }

  bool is_unitary(double tol = kAlgebraTol) const {
    return (adjoint() * (*this)).max_abs_diff(identity(dim_)) <= tol;
  }

  bool is_finite() const {
    for (std::size_t i = 0; i < dim_ * dim_; ++i)
      if (!std::isfinite(data_[i].real()) || !std::isfinite(data_[i].imag())) return false;
    return true;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    a.require_same_dim(b);
    Matrix out(a.dim_);
    for (std::size_t r = 0; r < a.dim_; ++r)
      for (std::size_t k = 0; k < a.dim_; ++k) {
        const Complex ark = a(r, k);
        if (ark == Complex{}) continue;
        for (std::size_t c = 0; c < a.dim_; ++c) out(r, c) += ark * b(k, c);
      }
    return out;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) {
    a.require_same_dim(b);
    for (std::size_t i = 0; i < a.dim_ * a.dim_; ++i) a.data_[i] += b.data_[i];
    return a;
  }

  friend Matrix operator-(Matrix a, const Matrix& b) {
    a.require_same_dim(b);
    for (std::size_t i = 0; i < a.dim_ * a.dim_; ++i) a.data_[i] -= b.data_[i];
    return a;
  }

  friend Matrix operator*(Complex s, Matrix a) {
    for (std::size_t i = 0; i < a.dim_ * a.dim_; ++i) a.data_[i] *= s;
    return a;
  }

 private:
  void require_same_dim(const Matrix& other) const {
    if (other.dim_ != dim_) throw std::invalid_argument("Matrix: dimension mismatch");
  }

  std::size_t dim_ = 0;
  std::array<Complex, kMaxDim * kMaxDim> data_{};
};

inline Matrix kron(const Matrix& a, const Matrix& b) {
  const std::size_t dim = a.dim() * b.dim();
  if (dim > kMaxDim) throw std::invalid_argument("kron: result exceeds three qubits");
  Matrix out(dim);
  for (std::size_t ar = 0; ar < a.dim(); ++ar)
    for (std::size_t ac = 0; ac < a.dim(); ++ac)
      for (std::size_t br = 0; br < b.dim(); ++br)
        for (std::size_t bc = 0; bc < b.dim(); ++bc)
          out(ar * b.dim() + br, ac * b.dim() + bc) = a(ar, ac) * b(br, bc);
  return out;
}

inline Matrix outer(std::span<const Complex> ket) {
  Matrix out(ket.size());
  for (std::size_t r = 0; r < ket.size(); ++r)
    for (std::size_t c = 0; c < ket.size(); ++c) out(r, c) = ket[r] * std::conj(ket[c]);
  return out;
}

namespace detail {

inline int qubits_for_dim(std::size_t dim) {
  switch (dim) {
    case 2: return 1;
    case 4: return 2;
    case 8: return 3;
    default: throw std::invalid_argument("operator dimension must be 2, 4 or 8");
  }
}

inline void check_register(const Register& labels) {
  if (labels.empty() || labels.size() > kMaxQubits)
    throw std::invalid_argument("register must hold between 1 and 3 qubits");
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j)
      if (labels[i] == labels[j]) throw std::invalid_argument("register labels must be distinct");
}

// Bit position (0 = least significant) of a party inside a register.
inline int bit_of(const Register& labels, Party p) {
  for (std::size_t k = 0; k < labels.size(); ++k)
    if (labels[k] == p) return static_cast<int>(labels.size() - 1 - k);
  throw std::invalid_argument("party '" + std::string(to_string(p)) + "' is not in the register");
}

inline std::vector<int> target_bits(const Register& labels, std::span<const Party> targets) {
  if (targets.empty()) throw std::invalid_argument("empty target set");
  std::vector<int> bits;
  bits.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j)
      if (targets[i] == targets[j]) throw std::invalid_argument("duplicate target");
    bits.push_back(bit_of(labels, targets[i]));
  }
  return bits;
}

// Sub-index of the target bits within a full index; targets[0] is the MSB.
inline std::size_t gather(std::size_t index, std::span<const int> bits) {
  std::size_t sub = 0;
  for (int b : bits) sub = (sub << 1) | ((index >> b) & 1U);
  return sub;
}

inline std::size_t scatter(std::size_t index, std::span<const int> bits, std::size_t sub) {
  const std::size_t n = bits.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t bit = (sub >> (n - 1 - k)) & 1U;
    index = (index & ~(std::size_t{1} << bits[k])) | (bit << bits[k]);
  }
  return index;
}

}  // namespace detail

class StateVector {
 public:
  StateVector(Register labels, std::span<const Complex> amplitudes) : labels_(std::move(labels)) {
    detail::check_register(labels_);
    if (amplitudes.size() != dim())
      throw std::invalid_argument("StateVector: amplitude count does not match register size");
    double norm2 = 0.0;
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
      if (!std::isfinite(amplitudes[i].real()) || !std::isfinite(amplitudes[i].imag()))
        throw std::invalid_argument("StateVector: non-finite amplitude");
      amps_[i] = amplitudes[i];
      norm2 += std::norm(amplitudes[i]);
    }
    if (std::abs(norm2 - 1.0) > kAccumTol) throw std::invalid_argument("StateVector: amplitudes are not normalized");
    const double scale = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < dim(); ++i) amps_[i] *= scale;
  }

  StateVector(Register labels, std::initializer_list<Complex> amplitudes)
      : StateVector(std::move(labels), std::span<const Complex>(amplitudes.begin(), amplitudes.size())) {}

  static StateVector basis(Register labels, std::size_t index) {
    std::array<Complex, kMaxDim> amps{};
    const std::size_t dim = std::size_t{1} << labels.size();
    if (index >= dim) throw std::out_of_range("StateVector::basis: index out of range");
    amps[index] = 1.0;
    return StateVector(std::move(labels), std::span<const Complex>(amps.data(), dim));
  }

  int num_qubits() const { return static_cast<int>(labels_.size()); }
  std::size_t dim() const { return std::size_t{1} << labels_.size(); }
  const Register& labels() const { return labels_; }

  Complex operator[](std::size_t i) const { return amps_[i]; }
  std::span<const Complex> amplitudes() const { return {amps_.data(), dim()}; }

  // <this|other>
  Complex inner(const StateVector& other) const {
    if (other.dim() != dim()) throw std::invalid_argument("inner: dimension mismatch");
    Complex acc{};
    for (std::size_t i = 0; i < dim(); ++i) acc += std::conj(amps_[i]) * other.amps_[i];
    return acc;
  }

  double norm() const {
    double n2 = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) n2 += std::norm(amps_[i]);
    return std::sqrt(n2);
  }

  StateVector relabeled(Register labels) const {
    if (labels.size() != labels_.size()) throw std::invalid_argument("relabeled: qubit count mismatch");
    return StateVector(std::move(labels), amplitudes());
  }

 private:
  Register labels_;
  std::array<Complex, kMaxDim> amps_{};
};

// Hermitian operator on one or two qubits.
class Observable {
 public:
  explicit Observable(Matrix m) : m_(m) {
    if (m_.dim() != 2 && m_.dim() != 4) throw std::invalid_argument("Observable: dimension must be 2 or 4");
    if (!m_.is_finite()) throw std::invalid_argument("Observable: non-finite entry");
    if (!m_.is_hermitian(kAlgebraTol)) throw std::invalid_argument("Observable: matrix is not Hermitian");
  }

  std::size_t dim() const { return m_.dim(); }
  const Matrix& matrix() const { return m_; }

  // Eigenvalues are exactly +1 and -1.
  bool is_bivalent(double tol = kAlgebraTol) const {
    return (m_ * m_).max_abs_diff(Matrix::identity(m_.dim())) <= tol;
  }

  // (I + sign*M)/2; a spectral projector only for bivalent observables.
  Matrix projector(int sign) const {
    const Matrix id = Matrix::identity(m_.dim());
    return Complex{0.5} * (sign > 0 ? id + m_ : id - m_);
  }

 private:
  Matrix m_;
};

class DensityMatrix {
 public:
  DensityMatrix(Register labels, Matrix rho) : labels_(std::move(labels)), rho_(rho) {
    detail::check_register(labels_);
    if (rho_.dim() != (std::size_t{1} << labels_.size()))
      throw std::invalid_argument("DensityMatrix: matrix size does not match register");
    if (!rho_.is_finite()) throw std::invalid_argument("DensityMatrix: non-finite entry");
    if (!rho_.is_hermitian(kAlgebraTol)) throw std::invalid_argument("DensityMatrix: not Hermitian");
    if (std::abs(rho_.trace() - 1.0) > kAlgebraTol) throw std::invalid_argument("DensityMatrix: trace is not 1");
    if (!positive_semidefinite(rho_, kAccumTol)) throw std::invalid_argument("DensityMatrix: negative eigenvalue");
  }

  static DensityMatrix from_pure(const StateVector& s) { return {s.labels(), outer(s.amplitudes())}; }

  std::size_t dim() const { return rho_.dim(); }
  const Register& labels() const { return labels_; }
  const Matrix& matrix() const { return rho_; }

 private:
  // Cholesky of rho + tol*I succeeds iff the smallest eigenvalue exceeds -tol.
  static bool positive_semidefinite(const Matrix& rho, double tol) {
    const std::size_t n = rho.dim();
    Matrix l(n);
    for (std::size_t j = 0; j < n; ++j) {
      Complex diag = rho(j, j) + tol;
      for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * std::conj(l(j, k));
      if (diag.real() <= 0.0) return false;
      l(j, j) = std::sqrt(diag.real());
      for (std::size_t i = j + 1; i < n; ++i) {
        Complex v = rho(i, j);
        for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * std::conj(l(j, k));
        l(i, j) = v / l(j, j).real();
      }
    }
    return true;
  }

  Register labels_;
  Matrix rho_;
};

namespace detail {

// Applies an arbitrary operator on the target parties; the result is left unnormalized.
inline std::array<Complex, kMaxDim> apply_raw(const Matrix& op, std::span<const int> bits,
                                              std::span<const Complex> in) {
  std::array<Complex, kMaxDim> out{};
  const std::size_t sub_dim = op.dim();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t row = gather(i, bits);
    Complex acc{};
    for (std::size_t col = 0; col < sub_dim; ++col) {
      const Complex m = op(row, col);
      if (m == Complex{}) continue;
      acc += m * in[scatter(i, bits, col)];
    }
    out[i] = acc;
  }
  return out;
}

inline void check_operator_fits(const Matrix& op, std::size_t n_targets) {
  if (op.dim() != (std::size_t{1} << n_targets))
    throw std::invalid_argument("operator dimension does not match the number of targets");
}

}  // namespace detail

inline StateVector tensor(const StateVector& a, const StateVector& b) {
  if (a.num_qubits() + b.num_qubits() > kMaxQubits) throw std::invalid_argument("tensor: more than three qubits");
  Register labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  std::array<Complex, kMaxDim> amps{};
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < b.dim(); ++j) amps[i * b.dim() + j] = a[i] * b[j];
  return StateVector(std::move(labels), std::span<const Complex>(amps.data(), a.dim() * b.dim()));
}

inline StateVector apply_unitary(const Matrix& u, std::span<const Party> targets, const StateVector& s) {
  detail::check_operator_fits(u, targets.size());
  if (!u.is_unitary(kAlgebraTol)) throw std::invalid_argument("apply_unitary: operator is not unitary");
  const auto bits = detail::target_bits(s.labels(), targets);
  const auto out = detail::apply_raw(u, bits, s.amplitudes());
  return StateVector(s.labels(), std::span<const Complex>(out.data(), s.dim()));
}

inline StateVector apply_unitary(const Matrix& u, std::initializer_list<Party> targets, const StateVector& s) {
  return apply_unitary(u, std::span<const Party>(targets.begin(), targets.size()), s);
}

// ---- Standard gates -------------------------------------------------------

inline Matrix pauli_x() { return Matrix(2, {0, 1, 1, 0}); }
inline Matrix pauli_y() { return Matrix(2, {0, Complex(0, -1), Complex(0, 1), 0}); }
inline Matrix pauli_z() { return Matrix(2, {1, 0, 0, -1}); }

inline Matrix hadamard() {
  const double r = 1.0 / std::numbers::sqrt2;
  return Matrix(2, {r, r, r, -r});
}

// |1> -> e^{i phi}|1>
inline Matrix phase_gate(double phi) {
  if (!std::isfinite(phi)) throw std::invalid_argument("phase_gate: non-finite angle");
  return Matrix(2, {1, 0, 0, std::polar(1.0, phi)});
}

// Acts on the (ancilla, alice) pair with alice (second qubit) as control:
// |x>|0> -> |x>|0>,  |x>|1> -> |x+1 mod 2>|1>.
inline Matrix cnot_ancilla_target() {
  Matrix m(4);
  m(0, 0) = 1;  // |00> -> |00>
  m(2, 2) = 1;  // |10> -> |10>
  m(3, 1) = 1;  // |01> -> |11>
  m(1, 3) = 1;  // |11> -> |01>
  return m;
}

enum class BellLabel : std::uint8_t { phi_plus, phi_minus, psi_plus, psi_minus };

inline constexpr std::array<BellLabel, 4> kBellLabels = {BellLabel::phi_plus, BellLabel::phi_minus,
                                                         BellLabel::psi_plus, BellLabel::psi_minus};

constexpr std::string_view to_string(BellLabel b) {
  switch (b) {
    case BellLabel::phi_plus: return "phi+";
    case BellLabel::phi_minus: return "phi-";
    case BellLabel::psi_plus: return "psi+";
    case BellLabel::psi_minus: return "psi-";
  }
  return "?";
}

// phi+-, psi+- on the given pair, indexed in BellLabel order.
inline std::array<StateVector, 4> bell_states(Register pair = {Party::ancilla, Party::alice}) {
  const double r = 1.0 / std::numbers::sqrt2;
  return {StateVector(pair, {r, 0, 0, r}), StateVector(pair, {r, 0, 0, -r}), StateVector(pair, {0, r, r, 0}),
          StateVector(pair, {0, r, -r, 0})};
}

inline std::array<Matrix, 4> bell_projectors() {
  const auto states = bell_states();
  return {outer(states[0].amplitudes()), outer(states[1].amplitudes()), outer(states[2].amplitudes()),
          outer(states[3].amplitudes())};
}

// sigma . n for a unit direction n.
inline Observable pauli_direction(const std::array<double, 3>& n) {
  const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
  if (!std::isfinite(len) || std::abs(len - 1.0) > 1e-9)
    throw std::invalid_argument("pauli_direction: direction is not a unit vector");
  return Observable(Matrix(2, {n[2], Complex(n[0], -n[1]), Complex(n[0], n[1]), -n[2]}));
}

// ---- Measurement-level quantities ------------------------------------------

namespace detail {

inline double real_part_checked(Complex v, const char* what) {
  if (std::abs(v.imag()) >= kAccumTol) throw std::logic_error(std::string(what) + ": imaginary residue, operator not Hermitian");
  return v.real();
}

inline Complex sandwich(std::span<const Complex> s, std::span<const Complex> op_s) {
  Complex acc{};
  for (std::size_t i = 0; i < s.size(); ++i) acc += std::conj(s[i]) * op_s[i];
  return acc;
}

}  // namespace detail

inline double expectation(const Observable& m, std::span<const Party> targets, const StateVector& s) {
  detail::check_operator_fits(m.matrix(), targets.size());
  const auto bits = detail::target_bits(s.labels(), targets);
  const auto ms = detail::apply_raw(m.matrix(), bits, s.amplitudes());
  return detail::real_part_checked(detail::sandwich(s.amplitudes(), {ms.data(), s.dim()}), "expectation");
}

inline double expectation(const Observable& m, std::initializer_list<Party> targets, const StateVector& s) {
  return expectation(m, std::span<const Party>(targets.begin(), targets.size()), s);
}

// <a (x) b> for observables on disjoint target sets.
inline double correlation(const Observable& a, std::span<const Party> targets_a, const Observable& b,
                          std::span<const Party> targets_b, const StateVector& s) {
  detail::check_operator_fits(a.matrix(), targets_a.size());
  detail::check_operator_fits(b.matrix(), targets_b.size());
  const auto bits_a = detail::target_bits(s.labels(), targets_a);
  const auto bits_b = detail::target_bits(s.labels(), targets_b);
  for (int x : bits_a)
    if (std::find(bits_b.begin(), bits_b.end(), x) != bits_b.end())
      throw std::invalid_argument("correlation: target sets overlap");
  const auto bs = detail::apply_raw(b.matrix(), bits_b, s.amplitudes());
  const auto abs = detail::apply_raw(a.matrix(), bits_a, {bs.data(), s.dim()});
  return detail::real_part_checked(detail::sandwich(s.amplitudes(), {abs.data(), s.dim()}), "correlation");
}

inline double expectation(const Observable& m, const DensityMatrix& rho) {
  if (m.dim() != rho.dim()) throw std::invalid_argument("expectation: dimension mismatch");
  return detail::real_part_checked((rho.matrix() * m.matrix()).trace(), "expectation");
}

struct MeasurementBranch {
  double probability = 0.0;
  std::optional<StateVector> post_state;  // empty for zero-probability outcomes
};

inline std::vector<MeasurementBranch> projective_measure(const StateVector& s, std::span<const Party> targets,
                                                         std::span<const Matrix> projectors) {
  if (projectors.empty()) throw std::invalid_argument("projective_measure: empty projector family");
  const std::size_t sub_dim = std::size_t{1} << targets.size();
  Matrix total(sub_dim);
  for (const Matrix& p : projectors) {
    detail::check_operator_fits(p, targets.size());
    if (!p.is_hermitian(kAlgebraTol)) throw std::invalid_argument("projective_measure: projector is not Hermitian");
    total = total + p;
  }
  if (total.max_abs_diff(Matrix::identity(sub_dim)) > kAlgebraTol)
    throw std::invalid_argument("projective_measure: projectors do not sum to identity");

  const auto bits = detail::target_bits(s.labels(), targets);
  std::vector<MeasurementBranch> out;
  out.reserve(projectors.size());
  for (const Matrix& p : projectors) {
    auto ps = detail::apply_raw(p, bits, s.amplitudes());
    double prob = 0.0;
    for (std::size_t i = 0; i < s.dim(); ++i) prob += std::norm(ps[i]);
    MeasurementBranch branch{prob, std::nullopt};
    if (prob > kZeroProbability) {
      const double scale = 1.0 / std::sqrt(prob);
      for (std::size_t i = 0; i < s.dim(); ++i) ps[i] *= scale;
      branch.post_state.emplace(s.labels(), std::span<const Complex>(ps.data(), s.dim()));
    }
    out.push_back(std::move(branch));
  }
  return out;
}

inline std::vector<MeasurementBranch> projective_measure(const StateVector& s, std::initializer_list<Party> targets,
                                                         std::span<const Matrix> projectors) {
  return projective_measure(s, std::span<const Party>(targets.begin(), targets.size()), projectors);
}

// Normalized state of the remaining parties after finding `outcome` on its own
// parties: (<outcome| (x) I)|s> / norm. Empty when the overlap vanishes.
inline std::optional<StateVector> conditional_state(const StateVector& outcome, const StateVector& s) {
  const auto bits = detail::target_bits(s.labels(), outcome.labels());
  Register rest;
  std::vector<int> rest_bits;
  for (Party p : s.labels())
    if (std::find(outcome.labels().begin(), outcome.labels().end(), p) == outcome.labels().end()) {
      rest.push_back(p);
      rest_bits.push_back(detail::bit_of(s.labels(), p));
    }
  if (rest.empty()) throw std::invalid_argument("conditional_state: nothing left to condition");

  std::array<Complex, kMaxDim> amps{};
  double norm2 = 0.0;
  const std::size_t rest_dim = std::size_t{1} << rest.size();
  for (std::size_t r = 0; r < rest_dim; ++r) {
    Complex acc{};
    for (std::size_t o = 0; o < outcome.dim(); ++o)
      acc += std::conj(outcome[o]) * s[detail::scatter(detail::scatter(0, rest_bits, r), bits, o)];
    amps[r] = acc;
    norm2 += std::norm(acc);
  }
  if (norm2 <= kZeroProbability) return std::nullopt;
  const double scale = 1.0 / std::sqrt(norm2);
  for (std::size_t r = 0; r < rest_dim; ++r) amps[r] *= scale;
  return StateVector(std::move(rest), std::span<const Complex>(amps.data(), rest_dim));
}

// Reduced state on `keep`, ordered as the parties appear in the source register.
inline DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const Party> keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
  const Register& labels = rho.labels();
  if (keep.size() >= labels.size()) throw std::invalid_argument("partial_trace: keep set must be a proper subset");
  detail::target_bits(labels, keep);  // validates membership and distinctness

  std::vector<int> kept_bits, traced_bits;
  Register kept;
  for (Party p : labels) {
    const bool is_kept = std::find(keep.begin(), keep.end(), p) != keep.end();
    (is_kept ? kept_bits : traced_bits).push_back(detail::bit_of(labels, p));
    if (is_kept) kept.push_back(p);
  }
  const std::size_t kdim = std::size_t{1} << kept_bits.size();
  const std::size_t tdim = std::size_t{1} << traced_bits.size();
  Matrix out(kdim);
  for (std::size_t r = 0; r < kdim; ++r)
    for (std::size_t c = 0; c < kdim; ++c) {
      Complex acc{};
      for (std::size_t t = 0; t < tdim; ++t) {
        const std::size_t base = detail::scatter(0, traced_bits, t);
        acc += rho.matrix()(detail::scatter(base, kept_bits, r), detail::scatter(base, kept_bits, c));
      }
      out(r, c) = acc;
    }
  return DensityMatrix(std::move(kept), out);
}

inline DensityMatrix partial_trace(const StateVector& s, std::span<const Party> keep) {
  return partial_trace(DensityMatrix::from_pure(s), keep);
}

inline DensityMatrix partial_trace(const StateVector& s, std::initializer_list<Party> keep) {
  return partial_trace(s, std::span<const Party>(keep.begin(), keep.size()));
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<Party> keep) {
  return partial_trace(rho, std::span<const Party>(keep.begin(), keep.size()));
}

// <target|rho|target>
inline double fidelity_pure(const StateVector& target, const DensityMatrix& rho) {
  if (target.dim() != rho.dim()) throw std::invalid_argument("fidelity_pure: dimension mismatch");
  Complex acc{};
  for (std::size_t r = 0; r < target.dim(); ++r)
    for (std::size_t c = 0; c < target.dim(); ++c) acc += std::conj(target[r]) * rho.matrix()(r, c) * target[c];
  return detail::real_part_checked(acc, "fidelity_pure");
}

inline double fidelity_pure(const StateVector& target, const StateVector& s) {
  if (target.dim() != s.dim()) throw std::invalid_argument("fidelity_pure: dimension mismatch");
  return std::norm(target.inner(s));
}

}  // namespace belltide
