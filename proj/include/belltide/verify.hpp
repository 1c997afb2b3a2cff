// verify.hpp
// Self-check suites bundled behind `belltide verify`.

#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "belltide/correlators.hpp"
#include "belltide/optimizer.hpp"
#include "belltide/protocols.hpp"

namespace belltide {

struct VerifyOptions {
  bool quick = false;
  // Replaces the RSP phase-flip correction with the identity; only for
  // checking that the determinism suite actually detects a broken protocol.
  bool inject_fault = false;
  std::uint64_t seed = 0;
};

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::string detail;  // first failing assertion, or a short summary
};

namespace detail {

class SuiteRecorder {
 public:
  explicit SuiteRecorder(std::string name) { result_.name = std::move(name); }

  // Records the first failure only.
  void check(bool ok, const std::string& what) {
    if (!ok && result_.passed) {
      result_.passed = false;
      result_.detail = what;
    }
  }
  void summary(std::string s) {
    if (result_.passed) result_.detail = std::move(s);
  }
  SuiteResult take() { return std::move(result_); }

 private:
  SuiteResult result_;
};

inline AncillaState random_ancilla(const CounterRng& rng, std::uint64_t stream, std::uint64_t i) {
  const double z = 2.0 * rng.uniform(stream, 4 * i) - 1.0;
  return AncillaState::from_bloch(std::acos(z), 2.0 * kPi * rng.uniform(stream, 4 * i + 1));
}

inline std::string describe(const char* what, double theta, double phi, double value) {
  std::ostringstream os;
  os.precision(15);
  os << what << " at theta=" << theta << " phi=" << phi << ": " << value;
  return os.str();
}

}  // namespace detail

inline Corrections verify_corrections(const VerifyOptions& opt) {
  Corrections c;
  if (opt.inject_fault) c.rsp_flip = Matrix::identity(2);
  return c;
}

// Post-correction fidelity of both RSP schemes with the target state.
inline SuiteResult verify_protocol_determinism(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("protocol-determinism");
  const CounterRng rng(opt.seed);
  const Corrections corr = verify_corrections(opt);
  const int trials = opt.quick ? 200 : 1000;
  double worst = 1.0;
  for (int i = 0; i < trials; ++i) {
    const auto u = static_cast<std::uint64_t>(i);
    const double theta = kThetaMax * rng.uniform(10, 4 * u);
    const double phi = 2.0 * kPi * rng.uniform(10, 4 * u + 1);
    const StateVector target = TargetSpec{theta, phi}.state();
    const AncillaState anc = detail::random_ancilla(rng, 11, u);
    for (const ProtocolRun& run : {run_rsp_vn(theta, phi, corr), run_rsp_bell(theta, phi, anc, corr)}) {
      for (const auto& b : run.branches) {
        if (!b.bob_post_correction) continue;
        const double f = fidelity_pure(target, *b.bob_post_correction);
        worst = std::min(worst, f);
        rec.check(f >= 1.0 - 1e-10, detail::describe(run.scheme == Scheme::rsp_vn ? "rsp-vn fidelity, outcome " : "rsp-bell fidelity, outcome ",
                                                     theta, phi, f) + " [" + b.outcome + "]");
      }
    }
  }
  rec.summary(std::to_string(2 * trials) + " runs, worst fidelity " + std::to_string(worst));
  return rec.take();
}

inline SuiteResult verify_fidelity_oracle(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("fidelity-oracle");
  rec.check(teleport_fidelity_closed(kThetaMax) == 1.0, "F(pi/4) != 1");
  rec.check(teleport_fidelity_closed(0.0) == 2.0 / 3.0, "F(0) != 2/3");
  const double f8 = teleport_fidelity_closed(kPi / 8.0);
  rec.check(std::abs(f8 - (2.0 / 3.0) * (1.0 + 1.0 / (2.0 * std::numbers::sqrt2))) <= 1e-9, "F(pi/8) landmark");
  const int points = opt.quick ? 10 : 50;
  const SphereQuadrature q = opt.quick ? SphereQuadrature{40, 40} : SphereQuadrature{100, 100};
  double worst = 0.0;
  for (double theta : theta_grid(0.0, kThetaMax, points)) {
    const double err = std::abs(teleport_fidelity_numeric(theta, q) - teleport_fidelity_closed(theta));
    worst = std::max(worst, err);
    rec.check(err < 1e-6, detail::describe("quadrature vs closed form", theta, 0.0, err));
  }
  rec.summary(std::to_string(points) + " theta points, max |numeric - closed| = " + std::to_string(worst));
  return rec.take();
}

inline SuiteResult verify_ancilla_independence(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("ancilla-independence");
  const CounterRng rng(opt.seed);
  const int trials = opt.quick ? 200 : 1000;
  for (int i = 0; i < trials; ++i) {
    const auto u = static_cast<std::uint64_t>(i);
    const double theta = kThetaMax * rng.uniform(20, 2 * u);
    const double phi = 2.0 * kPi * rng.uniform(20, 2 * u + 1);
    const auto pairs = paired_probabilities(run_rsp_bell(theta, phi, detail::random_ancilla(rng, 21, u)));
    rec.check(std::abs(pairs[0] - 0.5) <= 1e-12 && std::abs(pairs[1] - 0.5) <= 1e-12,
              detail::describe("paired outcome probability", theta, phi, pairs[0]));
  }
  rec.summary(std::to_string(trials) + " random ancillae");
  return rec.take();
}

// The three CHSH curves must coincide; every evaluation stays under 2*sqrt(2).
inline std::vector<SuiteResult> verify_curves(const VerifyOptions& opt) {
  detail::SuiteRecorder overlap("curve-overlap");
  detail::SuiteRecorder ceiling("tsirelson-ceiling");
  OptimizerConfig cfg;
  cfg.rng_seed = opt.seed;
  const int steps = opt.quick ? 9 : 65;
  if (opt.quick) {
    cfg.restarts = 4;
    cfg.max_grid_seeds = 2000;
  }
  std::vector<SweepResult> sweeps;
  for (ScenarioKind k : {ScenarioKind::tele_chsh, ScenarioKind::rsp_vn_chsh, ScenarioKind::rsp_bell_chsh})
    sweeps.push_back(sweep(k, 0.0, kThetaMax, steps, cfg));

  double worst = 0.0, peak = 0.0;
  for (std::size_t a = 0; a < sweeps.size(); ++a) {
    for (const auto& p : sweeps[a].points) {
      peak = std::max(peak, p.peak_evaluated);
      ceiling.check(p.peak_evaluated <= kTsirelson + 1e-9,
                    detail::describe(std::string(to_string(p.kind)).c_str(), p.theta, 0.0, p.peak_evaluated));
    }
    for (std::size_t b = a + 1; b < sweeps.size(); ++b)
      for (std::size_t i = 0; i < sweeps[a].values.size(); ++i) {
        const double d = std::abs(sweeps[a].values[i] - sweeps[b].values[i]);
        worst = std::max(worst, d);
        overlap.check(d < 5e-3, std::string(to_string(sweeps[a].kind)) + " vs " + std::string(to_string(sweeps[b].kind)) +
                                    detail::describe(" difference", sweeps[a].theta_grid[i], 0.0, d));
      }
  }
  // Random probes outside the optimizer's path.
  const CounterRng rng(opt.seed);
  for (int i = 0; i < (opt.quick ? 500 : 5000); ++i) {
    const auto u = static_cast<std::uint64_t>(i);
    const double theta = kThetaMax * rng.uniform(30, u);
    for (ScenarioKind k : {ScenarioKind::tele_chsh, ScenarioKind::rsp_vn_chsh, ScenarioKind::rsp_bell_chsh}) {
      const Scenario s(k, theta);
      std::vector<double> x(s.dimension());
      for (std::size_t j = 0; j < x.size(); ++j) x[j] = 2.0 * kPi * rng.uniform(31, u * 16 + j);
      const double v = s.evaluate(x);
      peak = std::max(peak, v);
      ceiling.check(v <= kTsirelson + 1e-9, detail::describe("random probe", theta, 0.0, v));
    }
  }
  overlap.summary(std::to_string(steps) + "-point sweeps, max pairwise difference " + std::to_string(worst));
  ceiling.summary("largest evaluated value " + std::to_string(peak));
  return {overlap.take(), ceiling.take()};
}

inline std::vector<SuiteResult> run_verify(const VerifyOptions& opt) {
  std::vector<SuiteResult> out;
  out.push_back(verify_protocol_determinism(opt));
  out.push_back(verify_fidelity_oracle(opt));
  for (auto& r : verify_curves(opt)) out.push_back(std::move(r));
  out.push_back(verify_ancilla_independence(opt));
  return out;
}

}  // namespace belltide
