#pragma once

// Mutual information of a discrete memoryless channel through the
// rate-distortion machinery with d(x, xhat) = -ln W(x|xhat).

#include "tiltwork/rd_core.hpp"

#include <cmath>
#include <vector>

namespace tiltwork {

/// transition(xhat, x) = W(x|xhat): one row per input letter.
template <typename Scalar>
class Channel {
 public:
  Channel(const Matrix<Scalar>& transition, const Vector<Scalar>& input_probs)
      : transition_(transition), input_probs_(input_probs) {
    if (transition.rows() != input_probs.size() || transition.cols() == 0) {
      throw Error(ErrorCode::InvalidArgument, "transition must have one row per input letter");
    }
    check_probability_vector(input_probs, "input_probs");
    for (Eigen::Index r = 0; r < transition.rows(); ++r) {
      check_probability_vector(transition.row(r).transpose(), "transition row");
    }
  }

  const Matrix<Scalar>& transition() const { return transition_; }
  const Vector<Scalar>& input_probs() const { return input_probs_; }
  Eigen::Index input_size() const { return transition_.rows(); }
  Eigen::Index output_size() const { return transition_.cols(); }

  Vector<Scalar> output_probs() const { return transition_.transpose() * input_probs_; }

 private:
  Matrix<Scalar> transition_;
  Vector<Scalar> input_probs_;
};

using Channeld = Channel<double>;

template <typename Scalar>
Scalar mutual_information(const Channel<Scalar>& channel) {
  const Vector<Scalar> out = channel.output_probs();
  Scalar total = 0;
  for (Eigen::Index j = 0; j < channel.input_size(); ++j) {
    for (Eigen::Index x = 0; x < channel.output_size(); ++x) {
      const Scalar w = channel.transition()(j, x);
      const Scalar joint = channel.input_probs()[j] * w;
      if (joint > 0) total += joint * std::log(w / out[x]);
    }
  }
  return total;
}

template <typename Scalar>
struct CapacityPoint {
  Scalar rate{0};
  Scalar s_star{0};
  Scalar delta{0};
};

/// Legendre rate at D = H(X|Xhat) for the channel-induced rate-distortion
/// problem. Zero transitions are infinite distortions: they are left out of
/// the per-output support, whose Q-mass m_x then enters as ln m_x in the
/// log-MGF. With the s <= 0 convention the stationary force is s* = -1.
template <typename Scalar>
CapacityPoint<Scalar> capacity_point(const Channel<Scalar>& channel) {
  const Vector<Scalar> p = channel.output_probs();
  const auto k = channel.output_size();
  std::vector<FiniteDistribution<Scalar>> dists;
  Vector<Scalar> log_mass(k);
  for (Eigen::Index x = 0; x < k; ++x) {
    if (!(p[x] > 0)) {
      throw Error(ErrorCode::ChannelDegenerate, "output letter with zero probability");
    }
    std::vector<Scalar> values;
    std::vector<Scalar> probs;
    Scalar mass = 0;
    for (Eigen::Index j = 0; j < channel.input_size(); ++j) {
      const Scalar q = channel.input_probs()[j];
      const Scalar w = channel.transition()(j, x);
      if (q > 0 && w > 0) {
        values.push_back(-std::log(w));
        probs.push_back(q);
        mass += q;
      }
    }
    Vector<Scalar> pv = Eigen::Map<Vector<Scalar>>(probs.data(), static_cast<Eigen::Index>(probs.size()));
    pv /= mass;
    dists.emplace_back(Eigen::Map<Vector<Scalar>>(values.data(), static_cast<Eigen::Index>(values.size())), pv);
    log_mass[x] = std::log(mass);
  }

  CapacityPoint<Scalar> out;
  for (Eigen::Index j = 0; j < channel.input_size(); ++j) {
    for (Eigen::Index x = 0; x < k; ++x) {
      const Scalar w = channel.transition()(j, x);
      if (w > 0) out.delta -= channel.input_probs()[j] * w * std::log(w);
    }
  }

  Scalar d0 = 0;
  Scalar dmin = 0;
  for (Eigen::Index x = 0; x < k; ++x) {
    d0 += p[x] * dists[static_cast<std::size_t>(x)].mean();
    dmin += p[x] * dists[static_cast<std::size_t>(x)].min_value();
  }
  if (d0 - dmin <= kValueTol) {
    // Zero tilted variance: the objective is flat in s and every force is a
    // maximiser. Report the analytic stationary point.
    out.s_star = -1;
  } else {
    out.s_star = detail::solve_nonpositive_force(p, dists, out.delta, Scalar(0));
  }
  const auto e = detail::evaluate_family(p, dists, out.s_star);
  out.rate = std::max(Scalar(0), out.s_star * out.delta - e.weighted_log_mgf - p.dot(log_mass));
  return out;
}

}  // namespace tiltwork
