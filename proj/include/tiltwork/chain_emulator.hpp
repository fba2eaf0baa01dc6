#pragma once

// Equilibrium statistical mechanics of concatenated arrays of independent
// multi-state elements pulled by a force lambda at inverse temperature beta.
// All quantities are per element and evaluated in closed form.

#include "tiltwork/rd_core.hpp"

#include <cmath>
#include <vector>

namespace tiltwork {

template <typename Scalar>
struct ElementArray {
  Vector<Scalar> state_lengths;
  Vector<Scalar> state_energies;
  /// Share of all elements that belong to this array.
  Scalar fraction{1};
};

template <typename Scalar>
class ChainSystem {
 public:
  ChainSystem(std::vector<ElementArray<Scalar>> arrays, Arg<Scalar> beta = 1,
              Arg<Scalar> boltzmann_k = 1)
      : arrays_(std::move(arrays)), beta_(beta), boltzmann_k_(boltzmann_k) {
    if (arrays_.empty()) throw Error(ErrorCode::InvalidArgument, "chain needs at least one array");
    if (!(beta_ > 0) || !(boltzmann_k_ > 0)) {
      throw Error(ErrorCode::InvalidArgument, "beta and k must be positive");
    }
    Scalar total = 0;
    for (const auto& a : arrays_) {
      if (a.state_lengths.size() == 0 || a.state_lengths.size() != a.state_energies.size()) {
        throw Error(ErrorCode::InvalidArgument, "array length/energy tables must match and be non-empty");
      }
      if (!(a.fraction >= 0) || !a.state_lengths.allFinite() || !a.state_energies.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "array fractions and tables must be finite, fractions >= 0");
      }
      total += a.fraction;
    }
    if (std::abs(total - 1) > kProbSumTol) {
      throw Error(ErrorCode::InvalidArgument, "array fractions must sum to 1");
    }
  }

  const std::vector<ElementArray<Scalar>>& arrays() const { return arrays_; }
  Scalar beta() const { return beta_; }
  Scalar boltzmann_k() const { return boltzmann_k_; }
  /// T0 = 1 / (k beta); kT0 = 1 / beta.
  Scalar temperature() const { return 1 / (boltzmann_k_ * beta_); }

 private:
  std::vector<ElementArray<Scalar>> arrays_;
  Scalar beta_;
  Scalar boltzmann_k_;
};

using ChainSystemd = ChainSystem<double>;

/// Boltzmann moments of one array under force lambda.
template <typename Scalar>
struct ArrayMoments {
  Scalar log_partition{0};
  Scalar mean_length{0};
  Scalar length_variance{0};
};

template <typename Scalar>
ArrayMoments<Scalar> array_moments(const ElementArray<Scalar>& array, Arg<Scalar> beta,
                                   Arg<Scalar> lambda) {
  const Vector<Scalar> exponent =
      (-beta * (array.state_energies.array() - lambda * array.state_lengths.array())).matrix();
  const Scalar shift = exponent.maxCoeff();
  Vector<Scalar> w = (exponent.array() - shift).exp().matrix();
  const Scalar z = w.sum();
  w /= z;
  ArrayMoments<Scalar> m;
  m.log_partition = shift + std::log(z);
  m.mean_length = w.dot(array.state_lengths);
  m.length_variance = (w.array() * (array.state_lengths.array() - m.mean_length).square()).sum();
  return m;
}

/// G(lambda) = -(1/beta) sum_x p_x ln sum_xhat e^{-beta (eps - lambda y)}.
template <typename Scalar>
Scalar gibbs_free_energy(const ChainSystem<Scalar>& system, Arg<Scalar> lambda) {
  Scalar total = 0;
  for (const auto& a : system.arrays()) {
    total += a.fraction * array_moments(a, system.beta(), lambda).log_partition;
  }
  return -total / system.beta();
}

template <typename Scalar>
Scalar expected_length(const ChainSystem<Scalar>& system, Arg<Scalar> lambda) {
  Scalar total = 0;
  for (const auto& a : system.arrays()) {
    total += a.fraction * array_moments(a, system.beta(), lambda).mean_length;
  }
  return total;
}

/// dY/dlambda = beta sum_x p_x Var_x(y).
template <typename Scalar>
Scalar length_susceptibility(const ChainSystem<Scalar>& system, Arg<Scalar> lambda) {
  Scalar total = 0;
  for (const auto& a : system.arrays()) {
    total += a.fraction * array_moments(a, system.beta(), lambda).length_variance;
  }
  return system.beta() * total;
}

template <typename Scalar>
Vector<Scalar> per_array_lengths(const ChainSystem<Scalar>& system, Arg<Scalar> lambda) {
  Vector<Scalar> out(static_cast<Eigen::Index>(system.arrays().size()));
  for (std::size_t i = 0; i < system.arrays().size(); ++i) {
    out[static_cast<Eigen::Index>(i)] =
        array_moments(system.arrays()[i], system.beta(), lambda).mean_length;
  }
  return out;
}

template <typename Scalar>
struct Equilibrium {
  Scalar lambda{0};
  /// Length per element of each array at the common force.
  Vector<Scalar> array_lengths;
};

namespace detail {

template <typename Scalar, typename LengthFn>
Scalar solve_force_for_length(LengthFn&& length_at, Scalar target, Scalar abs_tol) {
  const Scalar lo = grow_bracket([&](Scalar l) { return length_at(l) <= target; }, Scalar(-1));
  const Scalar hi = grow_bracket([&](Scalar l) { return length_at(l) >= target; }, Scalar(1));
  return bisect_increasing(length_at, target, lo, hi, abs_tol);
}

}  // namespace detail

/// Common force lambda at which the concatenated arrays reach total length
/// Y0 per element. `tol` is relative to the achievable length range.
template <typename Scalar>
Equilibrium<Scalar> equilibrium_force(const ChainSystem<Scalar>& system, Arg<Scalar> length,
                                      Arg<Scalar> tol = kSolverTol) {
  Scalar lo = 0;
  Scalar hi = 0;
  for (const auto& a : system.arrays()) {
    lo += a.fraction * a.state_lengths.minCoeff();
    hi += a.fraction * a.state_lengths.maxCoeff();
  }
  if (!(length > lo + kValueTol && length < hi - kValueTol)) {
    throw Error(ErrorCode::LengthInfeasible, "target length outside the open achievable range");
  }
  Equilibrium<Scalar> eq;
  eq.lambda = detail::solve_force_for_length(
      [&](Scalar l) { return expected_length(system, l); }, length, tol * (hi - lo));
  eq.array_lengths = per_array_lengths(system, eq.lambda);
  return eq;
}

/// Helmholtz free energy of a single array at mean length y per element:
/// F(y) = max_lambda [G(lambda) + lambda y]. Returns F and the maximising force.
template <typename Scalar>
std::pair<Scalar, Scalar> array_helmholtz(const ElementArray<Scalar>& array, Arg<Scalar> beta,
                                          Arg<Scalar> length, Arg<Scalar> tol = kSolverTol) {
  const Scalar lo = array.state_lengths.minCoeff();
  const Scalar hi = array.state_lengths.maxCoeff();
  if (!(length > lo + kValueTol && length < hi - kValueTol)) {
    throw Error(ErrorCode::LengthInfeasible, "target length outside the open achievable range");
  }
  const Scalar lambda = detail::solve_force_for_length(
      [&](Scalar l) { return array_moments(array, beta, l).mean_length; }, length, tol * (hi - lo));
  const Scalar gibbs = -array_moments(array, beta, lambda).log_partition / beta;
  return {gibbs + lambda * length, lambda};
}

/// Reversible work per element, integral of lambda dY from 0 to lambda_final,
/// written as integral of lambda beta Var(y) d lambda.
template <typename Scalar>
Scalar quasistatic_work(const ChainSystem<Scalar>& system, Arg<Scalar> lambda_final,
                        Arg<Scalar> tol = kQuadTol) {
  auto integrand = [&](Scalar l) { return l * length_susceptibility(system, l); };
  return adaptive_simpson<Scalar>(integrand, Scalar(0), lambda_final, tol).value;
}

template <typename Scalar>
struct ProtocolWork {
  /// Work charged when each jump is followed by re-equilibration at the new
  /// force: sum lambda_{i+1} (Y_{i+1} - Y_i).
  Scalar work{0};
  /// Left-endpoint counterpart sum lambda_i (Y_{i+1} - Y_i).
  Scalar left_sum{0};

  Scalar lower() const { return std::min(work, left_sum); }
  Scalar upper() const { return std::max(work, left_sum); }
};

template <typename Scalar>
ProtocolWork<Scalar> protocol_work(const ChainSystem<Scalar>& system,
                                   const std::vector<Scalar>& schedule) {
  validate_partition(schedule, ErrorCode::ScheduleInvalid);
  const auto sums = riemann_sums(schedule, [&](Scalar l) { return expected_length(system, l); });
  return {sums.right, sums.left};
}

/// Arrays indexed by source letter x with fraction P(x), lengths d(x, .) and
/// energies -(1/beta) ln Q(.). Force lambda corresponds to tilt s = beta lambda.
template <typename Scalar>
ChainSystem<Scalar> from_rd_problem(const RdProblem<Scalar>& problem, Arg<Scalar> beta = 1,
                                    Arg<Scalar> boltzmann_k = 1) {
  if (!(beta > 0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive");
  std::vector<ElementArray<Scalar>> arrays;
  const Vector<Scalar> energies = (-problem.coding_probs().array().log() / beta).matrix();
  for (Eigen::Index x = 0; x < problem.source_size(); ++x) {
    arrays.push_back({problem.distortion().row(x).transpose(), energies, problem.source_probs()[x]});
  }
  return ChainSystem<Scalar>(std::move(arrays), beta, boltzmann_k);
}

/// Energy levels with degeneracies; phi(beta) = ln sum_levels g e^{-beta eps}.
template <typename Scalar>
class EnergySpectrum {
 public:
  EnergySpectrum(const Vector<Scalar>& energies, const Vector<Scalar>& degeneracies) {
    if (energies.size() != degeneracies.size() || energies.size() == 0) {
      throw Error(ErrorCode::InvalidArgument, "energies and degeneracies differ in length");
    }
    if (!(degeneracies.array() > 0).all() || !degeneracies.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "degeneracies must be positive");
    }
    const Scalar total = degeneracies.sum();
    levels_ = FiniteDistribution<Scalar>(energies, degeneracies / total);
    log_states_ = std::log(total);
  }

  /// Normalised degeneracies as a distribution over energy values.
  const FiniteDistribution<Scalar>& levels() const { return levels_; }

  Scalar phi(Arg<Scalar> beta) const { return log_states_ + log_mgf(levels_, -beta); }
  Scalar mean_energy(Arg<Scalar> beta) const { return tilt_moments(levels_, -beta).mean; }

 private:
  FiniteDistribution<Scalar> levels_;
  Scalar log_states_{0};
};

template <typename Scalar>
struct EntropyResult {
  /// Per-particle entropy in units of k.
  Scalar entropy{0};
  Scalar beta{0};
};

/// S(E) = min_{beta >= 0} [beta E + phi(beta)]. Energies at or above the
/// infinite-temperature mean give beta = 0.
template <typename Scalar>
EntropyResult<Scalar> entropy_at_energy(const EnergySpectrum<Scalar>& spectrum, Arg<Scalar> energy,
                                        Arg<Scalar> tol = kSolverTol) {
  const auto& levels = spectrum.levels();
  if (energy < levels.min_value() - kValueTol || energy > levels.max_value() + kValueTol) {
    throw Error(ErrorCode::EnergyInfeasible, "energy outside the spectrum");
  }
  EntropyResult<Scalar> out;
  if (energy >= levels.mean() - kValueTol) {
    out.beta = 0;
    out.entropy = spectrum.phi(Scalar(0));
    return out;
  }
  // <eps> under tilt s = -beta is the energy at inverse temperature beta.
  const auto r = force_at_level(levels, energy, tol);
  out.beta = -r.force;
  out.entropy = std::isinf(static_cast<double>(out.beta))
                    ? spectrum.phi(Scalar(0)) + std::log(levels.probs()[0])
                    : out.beta * energy + spectrum.phi(out.beta);
  return out;
}

}  // namespace tiltwork
