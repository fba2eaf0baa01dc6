#pragma once

#include "tiltwork/core.hpp"

#include <cmath>

namespace tiltwork {

template <typename Scalar>
struct QuadratureResult {
  Scalar value{0};
  long evaluations{0};
  bool converged{true};
};

namespace detail {

template <typename Scalar, typename F>
struct SimpsonState {
  F& f;
  long max_evals;
  long evals = 0;
  bool converged = true;

  Scalar eval(Scalar x) {
    ++evals;
    return f(x);
  }

  Scalar refine(Scalar a, Scalar b, Scalar fa, Scalar fm, Scalar fb, Scalar whole, Scalar tol,
                int depth) {
    const Scalar m = (a + b) / 2;
    const Scalar lm = (a + m) / 2;
    const Scalar rm = (m + b) / 2;
    const Scalar flm = eval(lm);
    const Scalar frm = eval(rm);
    const Scalar left = (m - a) / 6 * (fa + 4 * flm + fm);
    const Scalar right = (b - m) / 6 * (fm + 4 * frm + fb);
    const Scalar delta = left + right - whole;
    constexpr int kMinDepth = 3;
    constexpr int kMaxDepth = 60;
    if (depth >= kMinDepth && std::abs(delta) <= 15 * tol) {
      return left + right + delta / 15;
    }
    if (depth >= kMaxDepth || evals >= max_evals) {
      converged = false;
      return left + right + delta / 15;
    }
    return refine(a, m, fa, flm, fm, left, tol / 2, depth + 1) +
           refine(m, b, fm, frm, fb, right, tol / 2, depth + 1);
  }
};

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance `tol`.
/// b < a is allowed and yields the oriented integral. Stops refining once
/// `max_evals` integrand evaluations have been spent and flags the result.
template <typename Scalar, typename F>
QuadratureResult<Scalar> adaptive_simpson(F&& f, Scalar a, Scalar b, Arg<Scalar> tol,
                                          long max_evals = kMaxQuadEvals) {
  QuadratureResult<Scalar> result;
  if (a == b) return result;
  if (!(tol > 0)) throw Error(ErrorCode::InvalidArgument, "quadrature tolerance must be positive");
  detail::SimpsonState<Scalar, std::remove_reference_t<F>> state{f, max_evals};
  const Scalar lo = std::min(a, b);
  const Scalar hi = std::max(a, b);
  const Scalar flo = state.eval(lo);
  const Scalar fhi = state.eval(hi);
  const Scalar fm = state.eval((lo + hi) / 2);
  const Scalar whole = (hi - lo) / 6 * (flo + 4 * fm + fhi);
  const Scalar value = state.refine(lo, hi, flo, fm, fhi, whole, tol, 0);
  result.value = a < b ? value : -value;
  result.evaluations = state.evals;
  result.converged = state.converged;
  return result;
}

/// Bisection for a nondecreasing f on a bracket with f(lo) <= target <= f(hi).
/// Stops when |f(x) - target| <= abs_tol or when the bracket can no longer be split.
template <typename Scalar, typename F>
Scalar bisect_increasing(F&& f, Arg<Scalar> target, Scalar lo, Scalar hi, Arg<Scalar> abs_tol) {
  for (int iter = 0; iter < 4096; ++iter) {
    const Scalar mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) return mid;
    const Scalar value = f(mid);
    if (std::abs(value - target) <= abs_tol) return mid;
    if (value < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + (hi - lo) / 2;
}

/// Grows `edge` geometrically (doubling, away from zero) until `done(edge)` holds.
template <typename Scalar, typename Pred>
Scalar grow_bracket(Pred&& done, Scalar edge) {
  for (int i = 0; i < 1100; ++i) {
    if (done(edge)) return edge;
    edge *= 2;
  }
  throw Error(ErrorCode::NoConvergence, "bracket expansion did not enclose the target level");
}

}  // namespace tiltwork
