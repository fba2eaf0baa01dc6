#pragma once

// Rate-distortion function R_Q(D) for a fixed coding distribution Q, with
// every computation route: direct Legendre, equal-force allocation, work and
// MMSE integrals, Riemann sandwich bounds and generalised observables.

#include "tiltwork/chernoff.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace tiltwork {

/// Per-source-letter distributions of the distortion d(x, xhat) under xhat ~ Q:
/// equal distortions within kValueTol are grouped and their Q-mass summed.
template <typename Scalar>
std::vector<FiniteDistribution<Scalar>> build_delta_dists(const Vector<Scalar>& coding_probs,
                                                          const Matrix<Scalar>& distortion) {
  std::vector<FiniteDistribution<Scalar>> dists;
  dists.reserve(static_cast<std::size_t>(distortion.rows()));
  for (Eigen::Index x = 0; x < distortion.rows(); ++x) {
    dists.emplace_back(distortion.row(x).transpose(), coding_probs);
  }
  return dists;
}

/// Source P, coding distribution Q and distortion matrix d (K x J).
/// Zero-probability letters on either side are dropped; the retained letters
/// keep their original indices in source_index() / coding_index().
template <typename Scalar>
class RdProblem {
 public:
  RdProblem(const Vector<Scalar>& source_probs, const Vector<Scalar>& coding_probs,
            const Matrix<Scalar>& distortion)
      : source_size_(source_probs.size()), coding_size_(coding_probs.size()) {
    check_probability_vector(source_probs, "source_probs");
    check_probability_vector(coding_probs, "coding_probs");
    if (distortion.rows() != source_probs.size() || distortion.cols() != coding_probs.size()) {
      throw Error(ErrorCode::InvalidArgument, "distortion must be K x J");
    }
    if (!distortion.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "distortion has non-finite entries");
    }
    for (Eigen::Index i = 0; i < source_probs.size(); ++i) {
      if (source_probs[i] > 0) source_index_.push_back(i);
    }
    for (Eigen::Index j = 0; j < coding_probs.size(); ++j) {
      if (coding_probs[j] > 0) coding_index_.push_back(j);
    }
    source_probs_ = source_probs(source_index_);
    coding_probs_ = coding_probs(coding_index_);
    distortion_ = distortion(source_index_, coding_index_);
    delta_dists_ = build_delta_dists(coding_probs_, distortion_);
    zero_force_distortion_ = 0;
    min_distortion_ = 0;
    for (std::size_t x = 0; x < delta_dists_.size(); ++x) {
      zero_force_distortion_ += source_probs_[x] * delta_dists_[x].mean();
      min_distortion_ += source_probs_[x] * delta_dists_[x].min_value();
    }
  }

  Eigen::Index source_size() const { return source_probs_.size(); }
  Eigen::Index coding_size() const { return coding_probs_.size(); }
  Eigen::Index original_source_size() const { return source_size_; }
  Eigen::Index original_coding_size() const { return coding_size_; }

  const Vector<Scalar>& source_probs() const { return source_probs_; }
  const Vector<Scalar>& coding_probs() const { return coding_probs_; }
  const Matrix<Scalar>& distortion() const { return distortion_; }
  const std::vector<Eigen::Index>& source_index() const { return source_index_; }
  const std::vector<Eigen::Index>& coding_index() const { return coding_index_; }
  const std::vector<FiniteDistribution<Scalar>>& delta_dists() const { return delta_dists_; }

  /// D0: distortion at zero force.
  Scalar zero_force_distortion() const { return zero_force_distortion_; }
  /// D_min = sum_x P(x) min{delta : Q(delta|x) > 0}.
  Scalar min_distortion() const { return min_distortion_; }
  Scalar distortion_range() const { return zero_force_distortion_ - min_distortion_; }

 private:
  Eigen::Index source_size_;
  Eigen::Index coding_size_;
  std::vector<Eigen::Index> source_index_;
  std::vector<Eigen::Index> coding_index_;
  Vector<Scalar> source_probs_;
  Vector<Scalar> coding_probs_;
  Matrix<Scalar> distortion_;
  std::vector<FiniteDistribution<Scalar>> delta_dists_;
  Scalar zero_force_distortion_;
  Scalar min_distortion_;
};

using RdProblemd = RdProblem<double>;

template <typename Scalar>
std::vector<FiniteDistribution<Scalar>> build_delta_dists(const RdProblem<Scalar>& problem) {
  return build_delta_dists(problem.coding_probs(), problem.distortion());
}

template <typename Scalar>
struct RdPoint {
  Scalar s{0};
  Scalar distortion{0};
  Scalar rate{0};
  Vector<Scalar> per_symbol_mean;
  Vector<Scalar> per_symbol_var;
  Scalar mmse{0};
  SolveStatus status{SolveStatus::Interior};
};

template <typename Scalar>
struct Allocation {
  Vector<Scalar> per_symbol_distortion;

  Scalar average(const Vector<Scalar>& source_probs) const {
    return source_probs.dot(per_symbol_distortion);
  }
  bool satisfies(const Vector<Scalar>& source_probs, Arg<Scalar> target) const {
    return average(source_probs) <= target + Scalar(1e-12);
  }
};

namespace detail {

template <typename Scalar>
struct FamilyEval {
  Scalar distortion{0};
  Scalar weighted_log_mgf{0};
  Scalar mmse{0};
  Vector<Scalar> means;
  Vector<Scalar> vars;
  Vector<Scalar> log_mgfs;
};

// Tilts every per-letter distribution with the common force s.
template <typename Scalar>
FamilyEval<Scalar> evaluate_family(const Vector<Scalar>& weights,
                                   const std::vector<FiniteDistribution<Scalar>>& dists, Scalar s) {
  const auto k = static_cast<Eigen::Index>(dists.size());
  FamilyEval<Scalar> e;
  e.means.resize(k);
  e.vars.resize(k);
  e.log_mgfs.resize(k);
  for (Eigen::Index x = 0; x < k; ++x) {
    const auto m = tilt_moments(dists[static_cast<std::size_t>(x)], s);
    e.means[x] = m.mean;
    e.vars[x] = m.variance;
    e.log_mgfs[x] = m.log_mgf;
  }
  e.distortion = weights.dot(e.means);
  e.mmse = weights.dot(e.vars);
  e.weighted_log_mgf = weights.dot(e.log_mgfs);
  return e;
}

template <typename Scalar>
Scalar weighted_mean_at(const Vector<Scalar>& weights,
                        const std::vector<FiniteDistribution<Scalar>>& dists, Scalar s) {
  Scalar total = 0;
  for (std::size_t x = 0; x < dists.size(); ++x) {
    total += weights[static_cast<Eigen::Index>(x)] * tilt_moments(dists[x], s).mean;
  }
  return total;
}

// Bisection over s <= 0 for the weighted tilted mean; target must lie strictly
// between the minimum and the zero-force mean.
template <typename Scalar>
Scalar solve_nonpositive_force(const Vector<Scalar>& weights,
                               const std::vector<FiniteDistribution<Scalar>>& dists, Scalar target,
                               Scalar abs_tol) {
  auto mean_at = [&](Scalar s) { return weighted_mean_at(weights, dists, s); };
  const Scalar lo = grow_bracket([&](Scalar s) { return mean_at(s) <= target; }, Scalar(-1));
  return bisect_increasing(mean_at, target, lo, Scalar(0), abs_tol);
}

template <typename Scalar>
RdPoint<Scalar> to_point(const FamilyEval<Scalar>& e, Scalar s) {
  RdPoint<Scalar> p;
  p.s = s;
  p.distortion = e.distortion;
  p.rate = std::max(Scalar(0), s * e.distortion - e.weighted_log_mgf);
  p.per_symbol_mean = e.means;
  p.per_symbol_var = e.vars;
  p.mmse = e.mmse;
  return p;
}

}  // namespace detail

/// The curve point reached by force s; its rate is the Legendre objective at
/// (s, D(s)), where s is the maximiser.
template <typename Scalar>
RdPoint<Scalar> distortion_at_force(const RdProblem<Scalar>& problem, Arg<Scalar> s) {
  if (!std::isfinite(static_cast<double>(s))) {
    throw Error(ErrorCode::InvalidArgument, "force must be finite");
  }
  return detail::to_point(detail::evaluate_family(problem.source_probs(), problem.delta_dists(), s), s);
}

/// Boundary point at D_min: every letter sits on its smallest distortion.
template <typename Scalar>
RdPoint<Scalar> min_distortion_point(const RdProblem<Scalar>& problem) {
  const auto k = problem.source_size();
  RdPoint<Scalar> p;
  p.s = -infinity<Scalar>();
  p.distortion = problem.min_distortion();
  p.per_symbol_mean.resize(k);
  p.per_symbol_var = Vector<Scalar>::Zero(k);
  p.status = SolveStatus::Extreme;
  for (Eigen::Index x = 0; x < k; ++x) {
    const auto& d = problem.delta_dists()[static_cast<std::size_t>(x)];
    p.per_symbol_mean[x] = d.min_value();
    p.rate -= problem.source_probs()[x] * std::log(d.probs()[0]);
  }
  return p;
}

/// Solves sum_x P(x) <delta>_{s|x} = D for s <= 0. `tol` is relative to D0 - D_min.
/// D = D_min yields the boundary point (infinite force, finite rate); D > D0
/// yields the zero-force point flagged AboveZeroForce.
template <typename Scalar>
RdPoint<Scalar> force_at_distortion(const RdProblem<Scalar>& problem, Arg<Scalar> target,
                                    Arg<Scalar> tol = kSolverTol) {
  const Scalar d0 = problem.zero_force_distortion();
  const Scalar dmin = problem.min_distortion();
  if (std::abs(target - d0) <= kValueTol) return distortion_at_force(problem, Scalar(0));
  if (target > d0) {
    auto p = distortion_at_force(problem, Scalar(0));
    p.status = SolveStatus::AboveZeroForce;
    return p;
  }
  if (std::abs(target - dmin) <= kValueTol) return min_distortion_point(problem);
  if (target < dmin) {
    throw Error(ErrorCode::DistortionTooLow, "distortion below the minimum achievable with Q");
  }
  const Scalar s = detail::solve_nonpositive_force(problem.source_probs(), problem.delta_dists(),
                                                   target, tol * (d0 - dmin));
  return distortion_at_force(problem, s);
}

/// R_Q(D) = max_{s <= 0} [s D - sum_x P(x) ln sum_delta Q(delta|x) e^{s delta}].
template <typename Scalar>
Scalar rate_legendre(const RdProblem<Scalar>& problem, Arg<Scalar> target,
                     Arg<Scalar> tol = kSolverTol) {
  return force_at_distortion(problem, target, tol).rate;
}

template <typename Scalar>
struct EqualForceAllocation {
  Allocation<Scalar> allocation;
  Scalar rate{0};
  Scalar force{0};
};

/// Allocation D_x* = <delta>_{s*|x} in which every letter feels the same force,
/// with the rate summed letter by letter.
template <typename Scalar>
EqualForceAllocation<Scalar> equal_force_allocation(const RdProblem<Scalar>& problem,
                                                    Arg<Scalar> target, Arg<Scalar> tol = kSolverTol) {
  const auto point = force_at_distortion(problem, target, tol);
  EqualForceAllocation<Scalar> out;
  out.force = point.s;
  out.allocation.per_symbol_distortion = point.per_symbol_mean;
  const auto& dists = problem.delta_dists();
  for (Eigen::Index x = 0; x < problem.source_size(); ++x) {
    const auto& d = dists[static_cast<std::size_t>(x)];
    Scalar letter_rate;
    if (point.status == SolveStatus::Extreme) {
      letter_rate = -std::log(d.probs()[0]);
    } else {
      letter_rate = point.s * point.per_symbol_mean[x] - log_mgf(d, point.s);
    }
    out.rate += problem.source_probs()[x] * letter_rate;
  }
  return out;
}

/// sum_x P(x) Var_{s|x}{delta}: the MMSE of estimating delta from x under P_s.
template <typename Scalar>
Scalar mmse(const RdProblem<Scalar>& problem, Arg<Scalar> s) {
  Scalar total = 0;
  const auto& dists = problem.delta_dists();
  for (std::size_t x = 0; x < dists.size(); ++x) {
    total += problem.source_probs()[static_cast<Eigen::Index>(x)] * tilt_moments(dists[x], s).variance;
  }
  return total;
}

template <typename Scalar>
Scalar rate_mmse_integral(const RdProblem<Scalar>& problem, Arg<Scalar> s,
                          Arg<Scalar> tol = kQuadTol) {
  auto integrand = [&](Scalar u) { return u * mmse(problem, u); };
  return adaptive_simpson<Scalar>(integrand, Scalar(0), s, tol).value;
}

template <typename Scalar>
Scalar distortion_mmse_integral(const RdProblem<Scalar>& problem, Arg<Scalar> s,
                                Arg<Scalar> tol = kQuadTol) {
  auto integrand = [&](Scalar u) { return mmse(problem, u); };
  return problem.zero_force_distortion() +
         adaptive_simpson<Scalar>(integrand, Scalar(0), s, tol).value;
}

/// P-weighted left/right Riemann sums over a force partition 0 = s_1, ..., s_l = s.
template <typename Scalar>
SandwichSums<Scalar> sandwich_bounds(const RdProblem<Scalar>& problem,
                                     const std::vector<Scalar>& partition) {
  validate_partition(partition, ErrorCode::PartitionInvalid);
  const auto k = problem.source_size();
  Vector<Scalar> prev = detail::evaluate_family(problem.source_probs(), problem.delta_dists(),
                                                partition.front()).means;
  Vector<Scalar> left = Vector<Scalar>::Zero(k);
  Vector<Scalar> right = Vector<Scalar>::Zero(k);
  for (std::size_t i = 0; i + 1 < partition.size(); ++i) {
    const Vector<Scalar> next = detail::evaluate_family(problem.source_probs(),
                                                        problem.delta_dists(), partition[i + 1]).means;
    left += partition[i] * (next - prev);
    right += partition[i + 1] * (next - prev);
    prev = next;
  }
  return {problem.source_probs().dot(left), problem.source_probs().dot(right)};
}

template <typename Scalar>
struct ObservableSweep {
  /// <theta>_0 + integral of sum_x P(x) Cov_{u|x}{theta, delta}.
  Scalar integral{0};
  /// Direct expectation of t(x, xhat) under P(x) Q_s(xhat|x).
  Scalar direct{0};
};

namespace detail {

template <typename Scalar>
struct ObservableMoments {
  Scalar mean{0};
  Scalar covariance{0};
};

template <typename Scalar>
ObservableMoments<Scalar> observable_moments(const RdProblem<Scalar>& problem,
                                             const Matrix<Scalar>& t, Scalar s) {
  ObservableMoments<Scalar> out;
  const auto& d = problem.distortion();
  for (Eigen::Index x = 0; x < d.rows(); ++x) {
    const auto row = d.row(x).transpose().array();
    const Scalar shift = s >= 0 ? s * row.maxCoeff() : s * row.minCoeff();
    Vector<Scalar> w = (problem.coding_probs().array() * (s * row - shift).exp()).matrix();
    w /= w.sum();
    const Scalar mean_t = w.dot(t.row(x).transpose());
    const Scalar mean_d = w.dot(d.row(x).transpose());
    const Scalar cov =
        (w.array() * (t.row(x).transpose().array() - mean_t) * (row - mean_d)).sum();
    out.mean += problem.source_probs()[x] * mean_t;
    out.covariance += problem.source_probs()[x] * cov;
  }
  return out;
}

}  // namespace detail

/// <theta>_s for theta = t(x, xhat), by the covariance integral and directly.
/// `observable` has the original (unreduced) K x J shape.
template <typename Scalar>
ObservableSweep<Scalar> observable_sweep(const RdProblem<Scalar>& problem,
                                         const Matrix<Arg<Scalar>>& observable, Arg<Scalar> s,
                                         Arg<Scalar> tol = kQuadTol) {
  if (observable.rows() != problem.original_source_size() ||
      observable.cols() != problem.original_coding_size()) {
    throw Error(ErrorCode::InvalidArgument, "observable must have the same shape as distortion");
  }
  if (!observable.allFinite() || !std::isfinite(static_cast<double>(s))) {
    throw Error(ErrorCode::InvalidArgument, "observable and force must be finite");
  }
  const Matrix<Scalar> t = observable(problem.source_index(), problem.coding_index());
  ObservableSweep<Scalar> out;
  auto integrand = [&](Scalar u) { return detail::observable_moments(problem, t, u).covariance; };
  out.integral = detail::observable_moments(problem, t, Scalar(0)).mean +
                 adaptive_simpson<Scalar>(integrand, Scalar(0), s, tol).value;
  out.direct = detail::observable_moments(problem, t, s).mean;
  return out;
}

/// One point per force, ordered by s descending (D and R move away from the
/// zero-rate point as s decreases).
template <typename Scalar>
std::vector<RdPoint<Scalar>> rd_curve(const RdProblem<Scalar>& problem,
                                      std::vector<Scalar> force_grid) {
  for (Scalar s : force_grid) {
    if (!std::isfinite(static_cast<double>(s)) || s > 0) {
      throw Error(ErrorCode::InvalidArgument, "force grid values must be finite and <= 0");
    }
  }
  std::sort(force_grid.begin(), force_grid.end(), std::greater<>());
  std::vector<RdPoint<Scalar>> points;
  points.reserve(force_grid.size());
  for (Scalar s : force_grid) points.push_back(distortion_at_force(problem, s));
  return points;
}

}  // namespace tiltwork
