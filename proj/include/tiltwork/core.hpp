#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace tiltwork {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

// Non-deduced scalar argument, so `f(dist, 0.5)` works for any Scalar.
template <typename Scalar>
using Arg = std::type_identity_t<Scalar>;

/// Tolerances shared by every module.
inline constexpr double kProbSumTol = 1e-12;
inline constexpr double kValueTol = 1e-12;
/// Relative bisection tolerance on the solved level (fraction of the value range).
inline constexpr double kSolverTol = 1e-13;
/// Absolute tolerance for adaptive Simpson quadrature.
inline constexpr double kQuadTol = 1e-9;
inline constexpr long kMaxQuadEvals = 1000000;

template <typename Scalar>
constexpr Scalar infinity() {
  return std::numeric_limits<Scalar>::infinity();
}

enum class ErrorCode {
  InvalidArgument,
  InvalidDistribution,
  LevelInfeasible,
  PartitionInvalid,
  SupportMismatch,
  DistortionTooLow,
  ChannelDegenerate,
  InfeasiblePair,
  LengthInfeasible,
  ScheduleInvalid,
  EnergyInfeasible,
  CompositionNotIntegral,
  AlphabetTooLarge,
  NoConvergence,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::InvalidDistribution: return "INVALID_DISTRIBUTION";
    case ErrorCode::LevelInfeasible: return "LEVEL_INFEASIBLE";
    case ErrorCode::PartitionInvalid: return "PARTITION_INVALID";
    case ErrorCode::SupportMismatch: return "SUPPORT_MISMATCH";
    case ErrorCode::DistortionTooLow: return "DISTORTION_TOO_LOW";
    case ErrorCode::ChannelDegenerate: return "CHANNEL_DEGENERATE";
    case ErrorCode::InfeasiblePair: return "INFEASIBLE_PAIR";
    case ErrorCode::LengthInfeasible: return "LENGTH_INFEASIBLE";
    case ErrorCode::ScheduleInvalid: return "SCHEDULE_INVALID";
    case ErrorCode::EnergyInfeasible: return "ENERGY_INFEASIBLE";
    case ErrorCode::CompositionNotIntegral: return "COMPOSITION_NOT_INTEGRAL";
    case ErrorCode::AlphabetTooLarge: return "ALPHABET_TOO_LARGE";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
  }
  return "UNKNOWN";
}

/// Numerical failures are the only codes that are not caused by the input.
inline bool is_numerical_failure(ErrorCode code) {
  return code == ErrorCode::NoConvergence;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Outcome of a level/distortion inversion that did not fail outright.
enum class SolveStatus {
  Interior,
  /// Target sits on the support boundary: finite rate, force is +/- infinity.
  Extreme,
  /// Target lies above the zero-force mean; the zero-rate point is returned.
  AboveZeroForce,
};

/// Throws InvalidDistribution unless v is a finite, nonnegative vector summing to 1.
template <typename Derived>
void check_probability_vector(const Eigen::MatrixBase<Derived>& v, const std::string& name) {
  if (v.size() == 0) throw Error(ErrorCode::InvalidDistribution, name + " is empty");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(static_cast<double>(v(i))) || v(i) < 0) {
      throw Error(ErrorCode::InvalidDistribution, name + " has a negative or non-finite entry");
    }
  }
  if (std::abs(static_cast<double>(v.sum()) - 1.0) > kProbSumTol) {
    throw Error(ErrorCode::InvalidDistribution, name + " does not sum to 1");
  }
}

}  // namespace tiltwork
