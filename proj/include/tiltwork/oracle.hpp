#pragma once

// Independent reference computations used to validate the Legendre routes:
// exact finite-n tail probabilities, brute-force allocation search, dense
// grid maximisation and Blahut-Arimoto.

#include "tiltwork/multi_constraint.hpp"
#include "tiltwork/rd_core.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace tiltwork::oracle {

template <typename Scalar>
struct LdProbability {
  Scalar prob{0};
  Scalar exponent{0};
};

/// Pr{sum_i delta_i <= n D} for the fixed composition n(x) = n P(x), by
/// convolution over a value lattice of width 1e-9 x (value range).
template <typename Scalar>
LdProbability<Scalar> exact_ld_probability(const RdProblem<Scalar>& problem, int n,
                                           Arg<Scalar> target) {
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  const auto& dists = problem.delta_dists();
  Scalar vmin = dists.front().min_value();
  Scalar vmax = dists.front().max_value();
  for (const auto& d : dists) {
    vmin = std::min(vmin, d.min_value());
    vmax = std::max(vmax, d.max_value());
  }
  const Scalar width = vmax > vmin ? Scalar(1e-9) * (vmax - vmin) : Scalar(1e-9);

  // Lattice offsets are measured from vmin per symbol.
  std::map<long long, Scalar> sum_dist{{0, Scalar(1)}};
  for (Eigen::Index x = 0; x < problem.source_size(); ++x) {
    const Scalar copies = n * problem.source_probs()[x];
    const long long count = std::llround(static_cast<double>(copies));
    if (std::abs(copies - static_cast<Scalar>(count)) > Scalar(1e-9)) {
      throw Error(ErrorCode::CompositionNotIntegral, "n P(x) is not an integer");
    }
    const auto& d = dists[static_cast<std::size_t>(x)];
    std::vector<std::pair<long long, Scalar>> letter;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      letter.emplace_back(std::llround(static_cast<double>((d.values()[i] - vmin) / width)),
                          d.probs()[i]);
    }
    for (long long c = 0; c < count; ++c) {
      std::map<long long, Scalar> next;
      for (const auto& [bin, p] : sum_dist) {
        for (const auto& [offset, q] : letter) next[bin + offset] += p * q;
      }
      sum_dist = std::move(next);
    }
  }

  const Scalar threshold = (n * target - n * vmin) / width + Scalar(0.5);
  LdProbability<Scalar> out;
  for (const auto& [bin, p] : sum_dist) {
    if (static_cast<Scalar>(bin) <= threshold) out.prob += p;
  }
  out.prob = std::min(out.prob, Scalar(1));
  out.exponent = out.prob > 0 ? -std::log(out.prob) / n : infinity<Scalar>();
  if (out.exponent == 0) out.exponent = 0;  // normalise -0
  return out;
}

/// Single-letter rate max_{s <= 0} [s D_x - phi_x(s)] for source letter x.
template <typename Scalar>
Scalar per_symbol_rate(const RdProblem<Scalar>& problem, Eigen::Index x, Arg<Scalar> level) {
  const auto& d = problem.delta_dists()[static_cast<std::size_t>(x)];
  if (level >= d.mean() || d.size() == 1) return 0;
  return force_at_level(d, level, Scalar(0)).rate;
}

namespace detail {

template <typename Scalar>
struct LetterGrid {
  std::vector<Scalar> levels;
  std::vector<Scalar> rates;
};

// Uniform grid on [min_x, mean_x]; allocations above the zero-force mean cost
// budget without lowering the rate.
template <typename Scalar>
LetterGrid<Scalar> letter_grid(const RdProblem<Scalar>& problem, Eigen::Index x, int points) {
  const auto& d = problem.delta_dists()[static_cast<std::size_t>(x)];
  LetterGrid<Scalar> g;
  for (int i = 0; i < points; ++i) {
    const Scalar level =
        points == 1 ? d.mean() : d.min_value() + (d.mean() - d.min_value()) * i / (points - 1);
    g.levels.push_back(level);
    g.rates.push_back(per_symbol_rate(problem, x, level));
  }
  return g;
}

}  // namespace detail

/// Minimum of sum_x P(x) I_x(D_x) over a product grid of allocations with
/// sum_x P(x) D_x <= D.
template <typename Scalar>
Scalar brute_allocation_min(const RdProblem<Scalar>& problem, Arg<Scalar> target,
                            int grid_points_per_symbol) {
  const auto k = problem.source_size();
  if (k > 3) throw Error(ErrorCode::AlphabetTooLarge, "brute-force allocation supports K <= 3");
  if (grid_points_per_symbol < 2) {
    throw Error(ErrorCode::InvalidArgument, "need at least two grid points per symbol");
  }
  if (target < problem.min_distortion() - kValueTol) {
    throw Error(ErrorCode::DistortionTooLow, "distortion below the minimum achievable with Q");
  }
  std::vector<detail::LetterGrid<Scalar>> grids;
  for (Eigen::Index x = 0; x < k; ++x) grids.push_back(detail::letter_grid(problem, x, grid_points_per_symbol));
  const Vector<Scalar>& p = problem.source_probs();
  const Scalar budget = target + Scalar(1e-12);
  const int g = grid_points_per_symbol;
  Scalar best = infinity<Scalar>();

  // The last letter takes the largest feasible grid level (its rate is
  // nonincreasing in the level), found by binary search.
  auto best_last = [&](Scalar used) -> Scalar {
    const auto& last = grids.back();
    const Scalar remaining = (budget - used) / p[k - 1];
    auto it = std::upper_bound(last.levels.begin(), last.levels.end(), remaining);
    if (it == last.levels.begin()) return infinity<Scalar>();
    return p[k - 1] * last.rates[static_cast<std::size_t>(std::distance(last.levels.begin(), it) - 1)];
  };

  if (k == 1) {
    best = best_last(0);
  } else if (k == 2) {
    for (int i = 0; i < g; ++i) {
      const Scalar used = p[0] * grids[0].levels[i];
      best = std::min(best, p[0] * grids[0].rates[i] + best_last(used));
    }
  } else {
    for (int i = 0; i < g; ++i) {
      for (int j = 0; j < g; ++j) {
        const Scalar used = p[0] * grids[0].levels[i] + p[1] * grids[1].levels[j];
        best = std::min(best, p[0] * grids[0].rates[i] + p[1] * grids[1].rates[j] + best_last(used));
      }
    }
  }
  return best;
}

/// Rigorous excess of the grid minimum over the exact optimum: rounding each
/// equal-force allocation down by one grid cell stays feasible.
template <typename Scalar>
Scalar allocation_grid_slack(const RdProblem<Scalar>& problem, Arg<Scalar> target,
                             int grid_points_per_symbol) {
  const auto alloc = equal_force_allocation(problem, target, Scalar(0));
  Scalar slack = 0;
  for (Eigen::Index x = 0; x < problem.source_size(); ++x) {
    const auto& d = problem.delta_dists()[static_cast<std::size_t>(x)];
    const Scalar cell = (d.mean() - d.min_value()) / (grid_points_per_symbol - 1);
    const Scalar level = alloc.allocation.per_symbol_distortion[x];
    const Scalar lower = std::max(d.min_value(), level - cell);
    slack += problem.source_probs()[x] *
             (per_symbol_rate(problem, x, lower) - per_symbol_rate(problem, x, level));
  }
  return slack;
}

struct GridSpec {
  double s_min = -50;
  int points = 2001;
  int refinement_passes = 2;
};

/// Dense scan of the Legendre objective over s in [s_min, 0] with zoomed
/// re-scans around the best cell.
template <typename Scalar>
Scalar legendre_grid_max(const RdProblem<Scalar>& problem, Arg<Scalar> target, GridSpec grid = {}) {
  auto objective = [&](Scalar s) {
    Scalar total = s * target;
    for (Eigen::Index x = 0; x < problem.source_size(); ++x) {
      total -= problem.source_probs()[x] * log_mgf(problem.delta_dists()[static_cast<std::size_t>(x)], s);
    }
    return total;
  };
  Scalar lo = grid.s_min;
  Scalar hi = 0;
  Scalar best = -infinity<Scalar>();
  for (int pass = 0; pass <= grid.refinement_passes; ++pass) {
    const Scalar h = (hi - lo) / (grid.points - 1);
    Scalar best_s = lo;
    for (int i = 0; i < grid.points; ++i) {
      const Scalar s = lo + h * i;
      const Scalar v = objective(s);
      if (v > best) {
        best = v;
        best_s = s;
      }
    }
    lo = std::max(Scalar(grid.s_min), best_s - h);
    hi = std::min(Scalar(0), best_s + h);
  }
  return best;
}

/// Two-dimensional counterpart over [s_min, 0]^2.
template <typename Scalar>
Scalar legendre_grid_max_2d(const RdProblem2<Scalar>& problem, Arg<Scalar> delta_1,
                            Arg<Scalar> delta_2, GridSpec grid = {-20, 201, 6}) {
  const Force2<Scalar> target(delta_1, delta_2);
  Force2<Scalar> lo = Force2<Scalar>::Constant(grid.s_min);
  Force2<Scalar> hi = Force2<Scalar>::Zero();
  Scalar best = -infinity<Scalar>();
  for (int pass = 0; pass <= grid.refinement_passes; ++pass) {
    const Force2<Scalar> h = (hi - lo) / (grid.points - 1);
    Force2<Scalar> best_s = lo;
    for (int i = 0; i < grid.points; ++i) {
      for (int j = 0; j < grid.points; ++j) {
        const Force2<Scalar> s(lo[0] + h[0] * i, lo[1] + h[1] * j);
        const Scalar v = two_constraint_objective(problem, target, s);
        if (v > best) {
          best = v;
          best_s = s;
        }
      }
    }
    lo = (best_s - 2 * h).cwiseMax(Scalar(grid.s_min));
    hi = (best_s + 2 * h).cwiseMin(Scalar(0));
  }
  return best;
}

template <typename Scalar>
struct BlahutArimotoResult {
  Vector<Scalar> q_star;
  Scalar rate{0};
  Scalar distortion{0};
  int iterations{0};
  bool converged{false};
  /// -sum_x P(x) ln sum_xhat Q(xhat) e^{s d}, once per iterate.
  std::vector<Scalar> objective_trace;
};

/// Alternating minimisation over Q at fixed slope s <= 0. The returned point
/// (distortion, rate) lies on R(.) = min_Q R_Q(.).
template <typename Scalar>
BlahutArimotoResult<Scalar> blahut_arimoto(const Vector<Scalar>& source_probs,
                                           const Matrix<Scalar>& distortion, Arg<Scalar> s,
                                           Arg<Scalar> tol = Scalar(1e-12), int max_iter = 100000) {
  check_probability_vector(source_probs, "source_probs");
  if (!(s <= 0)) throw Error(ErrorCode::InvalidArgument, "slope s must be <= 0");
  if (distortion.rows() != source_probs.size() || !distortion.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "distortion must be a finite K x J matrix");
  }
  const auto j = distortion.cols();
  // Row-shifted kernel A(x, xhat) = e^{s (d - min_row d)} keeps entries in (0, 1].
  Vector<Scalar> row_shift(distortion.rows());
  Matrix<Scalar> kernel(distortion.rows(), j);
  for (Eigen::Index x = 0; x < distortion.rows(); ++x) {
    row_shift[x] = s * distortion.row(x).minCoeff();
    kernel.row(x) = (s * distortion.row(x).array() - row_shift[x]).exp();
  }

  BlahutArimotoResult<Scalar> out;
  Vector<Scalar> q = Vector<Scalar>::Constant(j, Scalar(1) / j);
  auto objective = [&](const Vector<Scalar>& qv, Vector<Scalar>& z) {
    z = kernel * qv;
    return -(source_probs.array() * (z.array().log() + row_shift.array())).sum();
  };
  Vector<Scalar> z;
  Scalar rate_prev = infinity<Scalar>();
  auto rate_of = [&](const Vector<Scalar>& qv) {
    Vector<Scalar> zz;
    const Scalar obj = objective(qv, zz);
    Scalar dist = 0;
    for (Eigen::Index x = 0; x < distortion.rows(); ++x) {
      if (source_probs[x] == 0) continue;
      const Vector<Scalar> w = (qv.array() * kernel.row(x).transpose().array()).matrix() / zz[x];
      dist += source_probs[x] * w.dot(distortion.row(x).transpose());
    }
    return std::pair<Scalar, Scalar>{std::max(Scalar(0), s * dist + obj), dist};
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    out.objective_trace.push_back(objective(q, z));
    Vector<Scalar> c = Vector<Scalar>::Zero(j);
    for (Eigen::Index x = 0; x < distortion.rows(); ++x) {
      if (source_probs[x] > 0) c += source_probs[x] / z[x] * kernel.row(x).transpose();
    }
    q = (q.array() * c.array()).matrix();
    q /= q.sum();
    const auto [rate, dist] = rate_of(q);
    out.iterations = iter + 1;
    out.rate = rate;
    out.distortion = dist;
    if (std::abs(rate - rate_prev) < tol) {
      out.converged = true;
      break;
    }
    rate_prev = rate;
  }
  out.objective_trace.push_back(objective(q, z));
  out.q_star = q;
  return out;
}

}  // namespace tiltwork::oracle
