#pragma once

// Rate under two simultaneous distortion constraints via the two-dimensional
// Legendre transform over forces (s1, s2) in the nonpositive quadrant.

#include "tiltwork/rd_core.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>

namespace tiltwork {

template <typename Scalar>
class RdProblem2 {
 public:
  RdProblem2(const Vector<Scalar>& source_probs, const Vector<Scalar>& coding_probs,
             const Matrix<Scalar>& distortion_1, const Matrix<Scalar>& distortion_2)
      : first_(source_probs, coding_probs, distortion_1),
        second_(source_probs, coding_probs, distortion_2) {}

  const Vector<Scalar>& source_probs() const { return first_.source_probs(); }
  const Vector<Scalar>& coding_probs() const { return first_.coding_probs(); }
  const Matrix<Scalar>& distortion_1() const { return first_.distortion(); }
  const Matrix<Scalar>& distortion_2() const { return second_.distortion(); }

  /// The single-constraint problems obtained by dropping the other measure.
  const RdProblem<Scalar>& first() const { return first_; }
  const RdProblem<Scalar>& second() const { return second_; }

 private:
  RdProblem<Scalar> first_;
  RdProblem<Scalar> second_;
};

using RdProblem2d = RdProblem2<double>;

template <typename Scalar>
using Force2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
struct TwoConstraintMoments {
  Scalar weighted_log_mgf{0};
  Force2<Scalar> mean = Force2<Scalar>::Zero();
  Eigen::Matrix<Scalar, 2, 2> covariance = Eigen::Matrix<Scalar, 2, 2>::Zero();
};

/// Tilted means and covariance of (d1, d2) at forces s, averaged over P.
template <typename Scalar>
TwoConstraintMoments<Scalar> two_constraint_moments(const RdProblem2<Scalar>& problem,
                                                    const Force2<Scalar>& s) {
  TwoConstraintMoments<Scalar> out;
  const auto& d1 = problem.distortion_1();
  const auto& d2 = problem.distortion_2();
  for (Eigen::Index x = 0; x < d1.rows(); ++x) {
    const Vector<Scalar> exponent = s[0] * d1.row(x).transpose() + s[1] * d2.row(x).transpose();
    const Scalar shift = exponent.maxCoeff();
    Vector<Scalar> w = (problem.coding_probs().array() * (exponent.array() - shift).exp()).matrix();
    const Scalar z = w.sum();
    w /= z;
    const Scalar m1 = w.dot(d1.row(x).transpose());
    const Scalar m2 = w.dot(d2.row(x).transpose());
    const auto c1 = d1.row(x).transpose().array() - m1;
    const auto c2 = d2.row(x).transpose().array() - m2;
    const Scalar px = problem.source_probs()[x];
    out.weighted_log_mgf += px * (shift + std::log(z));
    out.mean += px * Force2<Scalar>(m1, m2);
    out.covariance(0, 0) += px * (w.array() * c1 * c1).sum();
    out.covariance(1, 1) += px * (w.array() * c2 * c2).sum();
    out.covariance(0, 1) += px * (w.array() * c1 * c2).sum();
  }
  out.covariance(1, 0) = out.covariance(0, 1);
  return out;
}

/// s1 D1 + s2 D2 - sum_x P(x) ln sum_xhat Q(xhat) e^{s1 d1 + s2 d2}.
template <typename Scalar>
Scalar two_constraint_objective(const RdProblem2<Scalar>& problem, const Force2<Scalar>& target,
                                const Force2<Scalar>& s) {
  return s.dot(target) - two_constraint_moments(problem, s).weighted_log_mgf;
}

template <typename Scalar>
struct TwoConstraintRate {
  Scalar rate{0};
  Scalar s1{0};
  Scalar s2{0};
  /// Coordinates pinned at s_i = 0 with the constraint slack.
  std::array<bool, 2> at_zero_force{false, false};
  int iterations{0};
};

/// Maximises the concave objective over (s1, s2) <= 0 by projected damped
/// Newton; the Newton system uses the tilted covariance, and when that is
/// singular the minimum-norm solution or, failing that, the gradient.
template <typename Scalar>
TwoConstraintRate<Scalar> rate_two_distortions(const RdProblem2<Scalar>& problem,
                                               Arg<Scalar> delta_1, Arg<Scalar> delta_2,
                                               Arg<Scalar> tol = Scalar(1e-10)) {
  const Force2<Scalar> target(delta_1, delta_2);
  if (delta_1 < problem.first().min_distortion() - kValueTol ||
      delta_2 < problem.second().min_distortion() - kValueTol) {
    throw Error(ErrorCode::InfeasiblePair, "a target lies below its minimum achievable distortion");
  }
  constexpr int kMaxIter = 200;
  constexpr Scalar kDivergence = 1e6;

  Force2<Scalar> s = Force2<Scalar>::Zero();
  auto moments = two_constraint_moments(problem, s);
  Scalar value = s.dot(target) - moments.weighted_log_mgf;
  TwoConstraintRate<Scalar> out;
  std::array<bool, 2> active{false, false};

  for (int iter = 0; iter < kMaxIter; ++iter) {
    out.iterations = iter;
    const Force2<Scalar> grad = target - moments.mean;
    for (int i = 0; i < 2; ++i) active[i] = s[i] >= 0 && grad[i] >= 0;
    Force2<Scalar> free_grad = grad;
    for (int i = 0; i < 2; ++i) {
      if (active[i]) free_grad[i] = 0;
    }
    if (free_grad.norm() <= tol) break;

    Force2<Scalar> direction = Force2<Scalar>::Zero();
    bool flat_direction = false;
    if (active[0] != active[1]) {
      const int i = active[0] ? 1 : 0;
      const Scalar c = moments.covariance(i, i);
      flat_direction = !(c > Scalar(1e-14));
      direction[i] = flat_direction ? free_grad[i] : free_grad[i] / c;
    } else {
      // Newton on the range of the covariance; along its null space the
      // objective is linear, so the gradient is followed there.
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 2, 2>> eig(moments.covariance);
      const Scalar largest = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), Scalar(1e-300));
      for (int e = 0; e < 2; ++e) {
        const Force2<Scalar> v = eig.eigenvectors().col(e);
        const Scalar component = v.dot(free_grad);
        if (eig.eigenvalues()[e] > Scalar(1e-12) * largest && eig.eigenvalues()[e] > Scalar(1e-14)) {
          direction += component / eig.eigenvalues()[e] * v;
        } else {
          direction += component * v;
          flat_direction = flat_direction || std::abs(component) > tol;
        }
      }
    }

    // Armijo backtracking; near the optimum, where value differences drop
    // below rounding, a step that shrinks the gradient is also accepted.
    Scalar step = 1;
    bool accepted = false;
    for (int halving = 0; halving < 80; ++halving) {
      const Force2<Scalar> trial = (s + step * direction).cwiseMin(Scalar(0));
      if (trial == s) break;
      const auto trial_moments = two_constraint_moments(problem, trial);
      const Scalar trial_value = trial.dot(target) - trial_moments.weighted_log_mgf;
      const Scalar increase = std::max(Scalar(0), grad.dot(trial - s));
      const bool armijo = trial_value >= value + Scalar(1e-4) * increase;
      const bool polish = trial_value >= value - Scalar(1e-14) * (1 + std::abs(value)) &&
                          (target - trial_moments.mean).norm() < grad.norm();
      if (armijo || polish) {
        s = trial;
        moments = trial_moments;
        value = trial_value;
        accepted = true;
        // Along a flat direction keep doubling while the objective improves;
        // unbounded growth means the targets are jointly infeasible.
        while (flat_direction && s.cwiseAbs().maxCoeff() <= kDivergence) {
          step *= 2;
          const Force2<Scalar> further = (s + step * direction).cwiseMin(Scalar(0));
          const auto further_moments = two_constraint_moments(problem, further);
          const Scalar further_value = further.dot(target) - further_moments.weighted_log_mgf;
          if (!(further_value > value)) break;
          s = further;
          moments = further_moments;
          value = further_value;
        }
        break;
      }
      step /= 2;
    }
    if (s.cwiseAbs().maxCoeff() > kDivergence) {
      throw Error(ErrorCode::InfeasiblePair, "objective keeps increasing along an unbounded ray");
    }
    if (!accepted) {
      if (free_grad.norm() > Scalar(1e-6)) {
        throw Error(ErrorCode::NoConvergence, "line search failed away from the optimum");
      }
      break;
    }
    if (iter + 1 == kMaxIter) {
      throw Error(ErrorCode::NoConvergence, "iteration limit reached");
    }
  }

  const Force2<Scalar> grad = target - moments.mean;
  for (int i = 0; i < 2; ++i) out.at_zero_force[i] = s[i] >= 0 && grad[i] >= 0;
  out.rate = std::max(Scalar(0), value);
  out.s1 = s[0];
  out.s2 = s[1];
  return out;
}

}  // namespace tiltwork
