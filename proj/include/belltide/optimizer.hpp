// optimizer.hpp
// Derivative-free maximization of scenario correlators: a seeding grid,
// Nelder-Mead refinement of the best seeds, random restarts, theta sweeps and
// threshold crossings.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "belltide/correlators.hpp"

namespace belltide {

struct OptimizerConfig {
  int grid_points_per_dim = 5;
  int restarts = 20;
  double simplex_tolerance = 1e-10;
  int max_iterations = 2000;
  std::uint64_t rng_seed = 0;
  // When the full seeding grid is larger than this, a fixed pseudo-random
  // subset of its points is used instead.
  std::size_t max_grid_seeds = 20000;
  // Number of best grid points handed to the simplex.
  int refined_seeds = 4;

  void validate() const {
    if (grid_points_per_dim < 3) throw std::invalid_argument("grid_points_per_dim must be >= 3");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    if (!(simplex_tolerance > 0.0)) throw std::invalid_argument("simplex_tolerance must be positive");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (max_grid_seeds < 1) throw std::invalid_argument("max_grid_seeds must be >= 1");
    if (refined_seeds < 1) throw std::invalid_argument("refined_seeds must be >= 1");
  }
};

// Stateless counter-based generator: every draw is a pure function of
// (seed, stream, index).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t stream, std::uint64_t index) const {
    return mix(mix(seed_ ^ mix(stream + 0x9E3779B97F4A7C15ULL)) + index * 0xD1B54A32D192ED03ULL);
  }

  // Uniform in [0, 1).
  double uniform(std::uint64_t stream, std::uint64_t index) const {
    return static_cast<double>(bits(stream, index) >> 11) * 0x1.0p-53;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

// Runs fn(0..n-1) and returns results by index, so the outcome does not depend
// on scheduling.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out;
  out.reserve(n);
  const unsigned workers = std::max(1U, std::thread::hardware_concurrency());
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  std::vector<std::future<R>> futures;
  futures.reserve(n);
  for (std::size_t i = 0; i < n; ++i) futures.push_back(std::async(std::launch::async, [&fn, i] { return fn(i); }));
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

struct SimplexResult {
  std::vector<double> x;
  double value = -std::numeric_limits<double>::infinity();
  long evaluations = 0;
  int iterations = 0;
  bool converged = false;
  double peak_evaluated = -std::numeric_limits<double>::infinity();
};

// Nelder-Mead maximization from `start` with an axis-aligned initial simplex
// of edge `step`. Stops when the spread of simplex values drops below `ftol`.
template <class F>
SimplexResult nelder_mead_maximize(F&& f, std::span<const double> start, double step, double ftol, int max_iterations) {
  const std::size_t n = start.size();
  if (n == 0) throw std::invalid_argument("nelder_mead_maximize: empty start point");
  SimplexResult res;
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(std::span<const double>(x));
    ++res.evaluations;
    res.peak_evaluated = std::max(res.peak_evaluated, v);
    return v;
  };

  std::vector<std::vector<double>> pts(n + 1, std::vector<double>(start.begin(), start.end()));
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  auto along = [&](std::vector<double>& out, double t, const std::vector<double>& worst) {
    for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + t * (worst[k] - centroid[k]);
  };

  for (res.iterations = 0; res.iterations < max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return vals[a] > vals[b] || (vals[a] == vals[b] && a < b);
    });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    if (vals[best] - vals[worst] <= ftol) {
      res.converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[order[i]][k] / static_cast<double>(n);

    along(trial, -1.0, pts[worst]);
    const double fr = eval(trial);
    if (fr > vals[best]) {
      along(trial2, -2.0, pts[worst]);
      const double fe = eval(trial2);
      if (fe > fr) {
        pts[worst] = trial2;
        vals[worst] = fe;
      } else {
        pts[worst] = trial;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr > vals[second]) {
      pts[worst] = trial;
      vals[worst] = fr;
      continue;
    }
    // Contraction: outside if the reflection improved on the worst point.
    const bool outside = fr > vals[worst];
    along(trial2, outside ? -0.5 : 0.5, pts[worst]);
    const double fc = eval(trial2);
    if (fc > (outside ? fr : vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto best_it = std::max_element(vals.begin(), vals.end());
  res.value = *best_it;
  res.x = pts[static_cast<std::size_t>(best_it - vals.begin())];
  return res;
}

// Repeated simplex runs from the incumbent with shrinking initial steps, until
// a run no longer improves it by more than `ftol`.
template <class F>
SimplexResult local_maximize(F&& f, std::span<const double> start, double ftol, int max_iterations) {
  SimplexResult total;
  std::vector<double> x(start.begin(), start.end());
  double step = 0.4;
  for (int round = 0; round < 6; ++round) {
    SimplexResult r = nelder_mead_maximize(f, x, step, ftol, max_iterations);
    total.evaluations += r.evaluations;
    total.iterations += r.iterations;
    total.peak_evaluated = std::max(total.peak_evaluated, r.peak_evaluated);
    const bool improved = r.value > total.value + ftol;
    if (r.value > total.value) {
      total.value = r.value;
      total.x = r.x;
    }
    total.converged = r.converged;
    if (!improved && round > 0) break;
    x = total.x;
    step = std::max(step * 0.25, 1e-3);
  }
  return total;
}

namespace detail {

inline double grid_coordinate(const ParameterSpec& spec, int k, int points) {
  if (spec.kind == ParameterKind::polar) return kPi * k / (points - 1);
  return 2.0 * kPi * k / points;
}

inline std::size_t full_grid_size(std::size_t dim, int points) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    if (total > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(points))
      return std::numeric_limits<std::size_t>::max();
    total *= static_cast<std::size_t>(points);
  }
  return total;
}

inline constexpr std::uint64_t kGridStream = 1;
inline constexpr std::uint64_t kRestartStream = 2;

}  // namespace detail

// Points of the seeding grid: the full tensor grid when it fits within
// `max_grid_seeds`, otherwise a reproducible random subset of its points.
inline std::vector<std::vector<double>> seeding_grid(ScenarioKind kind, const OptimizerConfig& cfg) {
  cfg.validate();
  const auto spec = Scenario::layout(kind);
  const std::size_t dim = spec.size();
  const int g = cfg.grid_points_per_dim;
  const std::size_t full = detail::full_grid_size(dim, g);
  const CounterRng rng(cfg.rng_seed);

  const bool exhaustive = full <= cfg.max_grid_seeds;
  const std::size_t count = exhaustive ? full : cfg.max_grid_seeds;
  std::vector<std::vector<double>> out(count, std::vector<double>(dim));
  for (std::size_t p = 0; p < count; ++p) {
    std::size_t rem = p;
    for (std::size_t i = 0; i < dim; ++i) {
      int k;
      if (exhaustive) {
        k = static_cast<int>(rem % static_cast<std::size_t>(g));
        rem /= static_cast<std::size_t>(g);
      } else {
        k = static_cast<int>(rng.bits(detail::kGridStream, p * dim + i) % static_cast<std::uint64_t>(g));
      }
      out[p][i] = detail::grid_coordinate(spec[i], k, g);
    }
  }
  return out;
}

// Best value over the seeding grid alone.
inline double best_grid_value(const Scenario& scenario, const OptimizerConfig& cfg) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& x : seeding_grid(scenario.kind(), cfg)) best = std::max(best, scenario.evaluate(x));
  return best;
}

inline CorrelatorResult maximize(const Scenario& scenario, const OptimizerConfig& cfg,
                                 std::span<const std::vector<double>> extra_seeds = {}) {
  cfg.validate();
  const auto spec = scenario.layout();
  const std::size_t dim = spec.size();
  auto objective = [&scenario](std::span<const double> x) { return scenario.evaluate(x); };

  CorrelatorResult result;
  result.kind = scenario.kind();
  result.theta = scenario.theta();
  result.peak_evaluated = -std::numeric_limits<double>::infinity();

  // Seeding grid, ties broken by grid order.
  const auto grid = seeding_grid(scenario.kind(), cfg);
  std::vector<double> grid_values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid_values[i] = objective(grid[i]);
    result.peak_evaluated = std::max(result.peak_evaluated, grid_values[i]);
  }
  result.evaluations += static_cast<long>(grid.size());
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n_refined = std::min(order.size(), static_cast<std::size_t>(cfg.refined_seeds));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_refined), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return grid_values[a] > grid_values[b] || (grid_values[a] == grid_values[b] && a < b);
                    });

  std::vector<std::vector<double>> starts;
  for (std::size_t i = 0; i < n_refined; ++i) starts.push_back(grid[order[i]]);
  for (const auto& s : extra_seeds) {
    if (s.size() != dim) throw std::invalid_argument("maximize: extra seed has the wrong length");
    starts.push_back(s);
  }
  const CounterRng rng(cfg.rng_seed);
  for (int r = 0; r < cfg.restarts; ++r) {
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < dim; ++i)
      x[i] = spec[i].lower() + (spec[i].upper() - spec[i].lower()) *
                                   rng.uniform(detail::kRestartStream, static_cast<std::uint64_t>(r) * dim + i);
    starts.push_back(std::move(x));
  }

  const auto runs = parallel_map(starts.size(), [&](std::size_t i) {
    return local_maximize(objective, starts[i], cfg.simplex_tolerance, cfg.max_iterations);
  });

  std::size_t best = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    result.evaluations += runs[i].evaluations;
    result.peak_evaluated = std::max(result.peak_evaluated, runs[i].peak_evaluated);
    result.local_optima.push_back(runs[i].value);
    if (runs[i].value > runs[best].value) best = i;
  }
  std::sort(result.local_optima.begin(), result.local_optima.end(), std::greater<>());

  result.value = runs[best].value;
  result.settings = canonical_settings(scenario.kind(), runs[best].x);
  result.converged = result.local_optima.size() >= 2 &&
                     result.local_optima[0] - result.local_optima[1] <= 10.0 * cfg.simplex_tolerance;
  return result;
}

struct SweepResult {
  ScenarioKind kind = ScenarioKind::tele_chsh;
  std::vector<double> theta_grid;
  std::vector<double> values;
  std::vector<CorrelatorResult> points;

  bool all_converged() const {
    return std::all_of(points.begin(), points.end(), [](const auto& p) { return p.converged; });
  }
};

// theta_min + i*(theta_max - theta_min)/(steps - 1); both endpoints exact.
inline std::vector<double> theta_grid(double theta_min, double theta_max, int steps) {
  if (steps < 2) throw std::invalid_argument("steps must be >= 2");
  if (!(theta_min >= 0.0 && theta_min < theta_max && theta_max <= kThetaMax))
    throw std::invalid_argument("theta range must satisfy 0 <= min < max <= pi/4");
  std::vector<double> grid(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i)
    grid[static_cast<std::size_t>(i)] =
        i == steps - 1 ? theta_max : theta_min + (theta_max - theta_min) * i / (steps - 1);
  return grid;
}

// Maximizes at each grid point; each point after the first is also seeded
// with the previous optimum when `warm_start` is set.
inline SweepResult sweep(ScenarioKind kind, double theta_min, double theta_max, int steps, const OptimizerConfig& cfg,
                         bool warm_start = true) {
  SweepResult out;
  out.kind = kind;
  out.theta_grid = theta_grid(theta_min, theta_max, steps);
  std::vector<std::vector<double>> warm;
  for (double theta : out.theta_grid) {
    CorrelatorResult r = maximize(Scenario(kind, theta), cfg, warm);
    if (warm_start) warm = {r.settings};
    out.values.push_back(r.value);
    out.points.push_back(std::move(r));
  }
  return out;
}

struct CrossingResult {
  bool found = false;
  double theta = std::numeric_limits<double>::quiet_NaN();
  double lower = 0.0;
  double upper = 0.0;
  double value_at_min = 0.0;
  double value_at_max = 0.0;
  int bisections = 0;
  // Every maximization performed, in order.
  std::vector<CorrelatorResult> evaluations;
};

// Bisection on maximize(theta) - level over [theta_min, theta_max].
inline CrossingResult find_crossing(ScenarioKind kind, double level, const OptimizerConfig& cfg, double theta_min = 0.0,
                                    double theta_max = kThetaMax, double tolerance = 1e-5) {
  validate_theta(theta_min);
  validate_theta(theta_max);
  if (!(theta_min < theta_max)) throw std::invalid_argument("find_crossing: empty theta interval");
  if (!(tolerance > 0.0)) throw std::invalid_argument("find_crossing: tolerance must be positive");

  CrossingResult out;
  auto g = [&](double theta) {
    out.evaluations.push_back(maximize(Scenario(kind, theta), cfg));
    return out.evaluations.back().value - level;
  };
  double lo = theta_min, hi = theta_max;
  double g_lo = g(lo), g_hi = g(hi);
  out.value_at_min = g_lo + level;
  out.value_at_max = g_hi + level;
  out.lower = lo;
  out.upper = hi;
  if (g_lo == 0.0 || g_hi == 0.0) {
    out.found = true;
    out.theta = g_lo == 0.0 ? lo : hi;
    return out;
  }
  if ((g_lo > 0.0) == (g_hi > 0.0)) return out;

  while (hi - lo >= tolerance) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = g(mid);
    ++out.bisections;
    if (g_mid == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((g_mid > 0.0) == (g_lo > 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  out.found = true;
  out.lower = lo;
  out.upper = hi;
  out.theta = 0.5 * (lo + hi);
  return out;
}

}  // namespace belltide
