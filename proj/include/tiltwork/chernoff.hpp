#pragma once

// Exponential tilting of finite distributions, the log-moment generating
// function and the scalar Legendre rate function with its integral forms.

#include "tiltwork/core.hpp"
#include "tiltwork/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

namespace tiltwork {

/// Finite-support distribution. Support is kept sorted by value, zero-mass
/// outcomes are dropped and values closer than kValueTol are merged.
template <typename Scalar>
class FiniteDistribution {
 public:
  FiniteDistribution() = default;

  FiniteDistribution(const Vector<Scalar>& values, const Vector<Scalar>& probs) {
    if (values.size() != probs.size()) {
      throw Error(ErrorCode::InvalidDistribution, "values and probs differ in length");
    }
    std::vector<Eigen::Index> order;
    Scalar total = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      if (!std::isfinite(static_cast<double>(values[i])) ||
          !std::isfinite(static_cast<double>(probs[i]))) {
        throw Error(ErrorCode::InvalidDistribution, "non-finite value or probability");
      }
      if (probs[i] < 0) throw Error(ErrorCode::InvalidDistribution, "negative probability");
      total += probs[i];
      if (probs[i] > 0) order.push_back(i);
    }
    if (std::abs(total - 1) > kProbSumTol) {
      throw Error(ErrorCode::InvalidDistribution, "probabilities do not sum to 1");
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
    std::vector<Scalar> vs;
    std::vector<Scalar> ps;
    for (Eigen::Index i : order) {
      if (!vs.empty() && values[i] - vs.back() <= kValueTol) {
        ps.back() += probs[i];
      } else {
        vs.push_back(values[i]);
        ps.push_back(probs[i]);
      }
    }
    values_ = Eigen::Map<const Vector<Scalar>>(vs.data(), static_cast<Eigen::Index>(vs.size()));
    probs_ = Eigen::Map<const Vector<Scalar>>(ps.data(), static_cast<Eigen::Index>(ps.size()));
  }

  static FiniteDistribution point_mass(Arg<Scalar> value) {
    return FiniteDistribution(Vector<Scalar>::Constant(1, value), Vector<Scalar>::Ones(1));
  }

  const Vector<Scalar>& values() const { return values_; }
  const Vector<Scalar>& probs() const { return probs_; }
  Eigen::Index size() const { return values_.size(); }
  bool empty() const { return values_.size() == 0; }

  Scalar min_value() const { return values_[0]; }
  Scalar max_value() const { return values_[values_.size() - 1]; }
  Scalar range() const { return max_value() - min_value(); }
  Scalar mean() const { return values_.dot(probs_); }

 private:
  Vector<Scalar> values_;
  Vector<Scalar> probs_;
};

using FiniteDistributiond = FiniteDistribution<double>;

/// Moments of the tilted law without materialising it.
template <typename Scalar>
struct TiltMoments {
  Scalar log_mgf{0};
  Scalar mean{0};
  Scalar variance{0};
};

template <typename Scalar>
struct TiltReport {
  Scalar s{0};
  Scalar log_mgf{0};
  Scalar mean{0};
  Scalar variance{0};
  FiniteDistribution<Scalar> tilted;
};

template <typename Scalar>
struct RateResult {
  Scalar level{0};
  Scalar force{0};
  Scalar rate{0};
  SolveStatus status{SolveStatus::Interior};
};

namespace detail {

// Unnormalised tilted weights p_i exp(s y_i - shift), shift = max_i s y_i.
template <typename Scalar>
Vector<Scalar> shifted_weights(const FiniteDistribution<Scalar>& dist, Scalar s, Scalar& shift) {
  shift = s >= 0 ? s * dist.max_value() : s * dist.min_value();
  return (dist.probs().array() * (s * dist.values().array() - shift).exp()).matrix();
}

}  // namespace detail

/// ln sum_y P(y) e^{s y}, max-shift stabilised.
template <typename Scalar>
Scalar log_mgf(const FiniteDistribution<Scalar>& dist, Arg<Scalar> s) {
  if (s == 0) return 0;
  Scalar shift;
  const Vector<Scalar> w = detail::shifted_weights(dist, s, shift);
  return shift + std::log(w.sum());
}

template <typename Scalar>
TiltMoments<Scalar> tilt_moments(const FiniteDistribution<Scalar>& dist, Arg<Scalar> s) {
  Scalar shift;
  const Vector<Scalar> w = detail::shifted_weights(dist, s, shift);
  const Scalar z = w.sum();
  TiltMoments<Scalar> m;
  m.log_mgf = s == 0 ? Scalar(0) : shift + std::log(z);
  m.mean = w.dot(dist.values()) / z;
  m.variance = (w.array() * (dist.values().array() - m.mean).square()).sum() / z;
  return m;
}

template <typename Scalar>
TiltReport<Scalar> tilt(const FiniteDistribution<Scalar>& dist, Arg<Scalar> s) {
  TiltReport<Scalar> report;
  report.s = s;
  if (s == 0) {
    const auto m = tilt_moments(dist, s);
    report.mean = m.mean;
    report.variance = m.variance;
    report.tilted = dist;
    return report;
  }
  Scalar shift;
  Vector<Scalar> w = detail::shifted_weights(dist, s, shift);
  const Scalar z = w.sum();
  w /= z;
  report.log_mgf = shift + std::log(z);
  report.mean = w.dot(dist.values());
  report.variance = (w.array() * (dist.values().array() - report.mean).square()).sum();
  // Renormalise after underflowed entries are dropped so the sum check holds.
  w /= w.sum();
  report.tilted = FiniteDistribution<Scalar>(dist.values(), w);
  return report;
}

/// Rate s <y>_s - phi(s) at the level reached by force s.
template <typename Scalar>
RateResult<Scalar> rate_at_force(const FiniteDistribution<Scalar>& dist, Arg<Scalar> s) {
  const auto m = tilt_moments(dist, s);
  RateResult<Scalar> r;
  r.level = m.mean;
  r.force = s;
  r.rate = std::max(Scalar(0), s * m.mean - m.log_mgf);
  return r;
}

/// Inverts s -> <y>_s by bisection. `tol` is relative to the value range;
/// tol = 0 bisects until the bracket collapses.
template <typename Scalar>
RateResult<Scalar> force_at_level(const FiniteDistribution<Scalar>& dist, Arg<Scalar> level,
                                  Arg<Scalar> tol = kSolverTol) {
  const Scalar lo = dist.min_value();
  const Scalar hi = dist.max_value();
  if (level < lo - kValueTol || level > hi + kValueTol) {
    throw Error(ErrorCode::LevelInfeasible, "level outside the support of the distribution");
  }
  RateResult<Scalar> r;
  r.level = level;
  if (dist.size() == 1) return r;

  const bool at_min = std::abs(level - lo) <= kValueTol;
  const bool at_max = std::abs(level - hi) <= kValueTol;
  if (at_min || at_max) {
    const Scalar p = at_min ? dist.probs()[0] : dist.probs()[dist.size() - 1];
    r.level = at_min ? lo : hi;
    r.force = at_min ? -infinity<Scalar>() : infinity<Scalar>();
    r.rate = -std::log(p);
    r.status = SolveStatus::Extreme;
    return r;
  }

  auto mean_at = [&](Scalar s) { return tilt_moments(dist, s).mean; };
  const Scalar left = grow_bracket([&](Scalar s) { return mean_at(s) <= level; }, Scalar(-1));
  const Scalar right = grow_bracket([&](Scalar s) { return mean_at(s) >= level; }, Scalar(1));
  const Scalar s = bisect_increasing(mean_at, level, left, right, tol * dist.range());
  r = rate_at_force(dist, s);
  return r;
}

/// Work-integral form: integral over [0, s] of u Var_u{y} du.
template <typename Scalar>
Scalar rate_work_integral(const FiniteDistribution<Scalar>& dist, Arg<Scalar> s,
                          Arg<Scalar> tol = kQuadTol) {
  auto integrand = [&](Scalar u) { return u * tilt_moments(dist, u).variance; };
  return adaptive_simpson<Scalar>(integrand, Scalar(0), s, tol).value;
}

/// <y>_0 + integral over [0, s] of Var_u{y} du.
template <typename Scalar>
Scalar mean_via_integral(const FiniteDistribution<Scalar>& dist, Arg<Scalar> s,
                         Arg<Scalar> tol = kQuadTol) {
  auto integrand = [&](Scalar u) { return tilt_moments(dist, u).variance; };
  return dist.mean() + adaptive_simpson<Scalar>(integrand, Scalar(0), s, tol).value;
}

/// Left- and right-endpoint Riemann-Stieltjes sums of the work integral.
template <typename Scalar>
struct SandwichSums {
  Scalar left{0};
  Scalar right{0};

  Scalar lower() const { return std::min(left, right); }
  Scalar upper() const { return std::max(left, right); }
  Scalar gap() const { return upper() - lower(); }
};

template <typename Scalar>
void validate_partition(const std::vector<Scalar>& partition, ErrorCode code) {
  if (partition.empty() || partition.front() != 0) {
    throw Error(code, "partition must start at 0");
  }
  if (partition.size() < 2) return;
  const bool up = partition[1] > partition[0];
  for (std::size_t i = 1; i < partition.size(); ++i) {
    if (!std::isfinite(static_cast<double>(partition[i])) ||
        (up ? partition[i] <= partition[i - 1] : partition[i] >= partition[i - 1])) {
      throw Error(code, "partition must be strictly monotone");
    }
  }
}

/// Riemann sandwich over a force partition; `mean_at(s)` supplies <y>_s.
template <typename Scalar, typename MeanFn>
SandwichSums<Scalar> riemann_sums(const std::vector<Scalar>& partition, MeanFn&& mean_at) {
  SandwichSums<Scalar> sums;
  Scalar prev = mean_at(partition.front());
  for (std::size_t i = 0; i + 1 < partition.size(); ++i) {
    const Scalar next = mean_at(partition[i + 1]);
    sums.left += partition[i] * (next - prev);
    sums.right += partition[i + 1] * (next - prev);
    prev = next;
  }
  return sums;
}

template <typename Scalar>
SandwichSums<Scalar> riemann_sandwich(const FiniteDistribution<Scalar>& dist,
                                      const std::vector<Scalar>& partition) {
  validate_partition(partition, ErrorCode::PartitionInvalid);
  return riemann_sums(partition, [&](Scalar s) { return tilt_moments(dist, s).mean; });
}

/// D(q||p) in nats, evaluated as the free-energy gap beta (F_q - F_p) of a
/// system whose Boltzmann law is p (energies -ln p at beta = 1, so F_p = 0).
template <typename Scalar>
Scalar kl_free_energy_gap(const FiniteDistribution<Scalar>& q, const FiniteDistribution<Scalar>& p) {
  Scalar energy = 0;
  Scalar entropy = 0;
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const Scalar v = q.values()[i];
    while (j < p.size() && p.values()[j] < v - kValueTol) ++j;
    if (j == p.size() || std::abs(p.values()[j] - v) > kValueTol) {
      throw Error(ErrorCode::SupportMismatch, "support of q is not contained in support of p");
    }
    const Scalar qi = q.probs()[i];
    energy += qi * -std::log(p.probs()[j]);
    entropy += -qi * std::log(qi);
  }
  return energy - entropy;
}

}  // namespace tiltwork
