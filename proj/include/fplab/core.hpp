#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fplab {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;
template <int Dim>
using Matrix = Eigen::Matrix<double, Dim, Dim>;

template <int Dim>
using ScalarField = std::function<double(const Point<Dim>&)>;
template <int Dim>
using VectorField = std::function<Point<Dim>(const Point<Dim>&)>;
template <int Dim>
using MatrixField = std::function<Matrix<Dim>(const Point<Dim>&)>;

enum class ErrorCode {
  InvalidArgument,
  InvalidRadius,
  RefinementTooDeep,
  InvalidBox,
  MeshFormat,
  NonFiniteValue,
  NonPositiveDensity,
  SingularElement,
  NonEllipticSample,
  EmptyInterior,
  MeshMismatch,
  UnknownPreset,
  DegenerateRadius,
  SingularMass,
  MissingDerivative,
  DensityNotPositive,
  KernelDimensionError,
  DimensionUnsupported,
  SolverDivergence,
  ContractionViolation,
  SubmarkovViolation,
  IndefiniteSystem,
  InvalidRadii,
  ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidRadius: return "InvalidRadius";
    case ErrorCode::RefinementTooDeep: return "RefinementTooDeep";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::MeshFormat: return "MeshFormat";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonPositiveDensity: return "NonPositiveDensity";
    case ErrorCode::SingularElement: return "SingularElement";
    case ErrorCode::NonEllipticSample: return "NonEllipticSample";
    case ErrorCode::EmptyInterior: return "EmptyInterior";
    case ErrorCode::MeshMismatch: return "MeshMismatch";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::DegenerateRadius: return "DegenerateRadius";
    case ErrorCode::SingularMass: return "SingularMass";
    case ErrorCode::MissingDerivative: return "MissingDerivative";
    case ErrorCode::DensityNotPositive: return "DensityNotPositive";
    case ErrorCode::KernelDimensionError: return "KernelDimensionError";
    case ErrorCode::DimensionUnsupported: return "DimensionUnsupported";
    case ErrorCode::SolverDivergence: return "SolverDivergence";
    case ErrorCode::ContractionViolation: return "ContractionViolation";
    case ErrorCode::SubmarkovViolation: return "SubmarkovViolation";
    case ErrorCode::IndefiniteSystem: return "IndefiniteSystem";
    case ErrorCode::InvalidRadii: return "InvalidRadii";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

inline bool is_finite(double v) { return std::isfinite(v); }

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

inline constexpr int factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

}  // namespace fplab
