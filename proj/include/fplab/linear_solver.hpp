#pragma once

#include "fplab/core.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <memory>
#include <string>

namespace fplab {

enum class SolverBackend { direct, krylov };

inline std::string to_string(SolverBackend b) { return b == SolverBackend::direct ? "direct" : "krylov"; }

inline SolverBackend parse_solver_backend(const std::string& s) {
  if (s == "direct") return SolverBackend::direct;
  if (s == "krylov") return SolverBackend::krylov;
  fail(ErrorCode::InvalidArgument, "unknown solver backend '" + s + "'");
}

struct SolverOptions {
  SolverBackend backend = SolverBackend::direct;
  double tolerance = 1e-10;
  int max_iterations = 10000;

  bool operator==(const SolverOptions&) const = default;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

// Sparse LU by default; BiCGSTAB with an incomplete-LU preconditioner otherwise.
class LinearSolver {
 public:
  LinearSolver() = default;
  LinearSolver(const SparseMatrix& a, SolverOptions opts, ErrorCode on_singular = ErrorCode::SolverDivergence) {
    factor(a, opts, on_singular);
  }

  void factor(const SparseMatrix& a, SolverOptions opts, ErrorCode on_singular = ErrorCode::SolverDivergence) {
    opts_ = opts;
    matrix_ = a;
    if (opts.backend == SolverBackend::direct) {
      lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
      lu_->analyzePattern(matrix_);
      lu_->factorize(matrix_);
      require(lu_->info() == Eigen::Success, on_singular, "sparse LU factorization failed: " + lu_->lastErrorMessage());
    } else {
      krylov_ = std::make_unique<Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>>>();
      krylov_->setTolerance(opts.tolerance);
      krylov_->setMaxIterations(opts.max_iterations);
      krylov_->compute(matrix_);
      require(krylov_->info() == Eigen::Success, on_singular, "incomplete LU preconditioner failed");
    }
  }

  Vector solve(const Vector& b, SolveStats* stats = nullptr) const {
    Vector x;
    SolveStats st;
    if (lu_) {
      x = lu_->solve(b);
      st.iterations = 1;
    } else {
      require(krylov_ != nullptr, ErrorCode::InvalidArgument, "solver used before factorization");
      x = krylov_->solve(b);
      st.iterations = static_cast<int>(krylov_->iterations());
    }
    require(x.allFinite(), ErrorCode::SolverDivergence, "solution is not finite");
    const double bn = b.norm();
    st.relative_residual = bn > 0.0 ? (matrix_ * x - b).norm() / bn : (matrix_ * x).norm();
    if (krylov_) {
      require(krylov_->info() == Eigen::Success && st.relative_residual <= 10.0 * opts_.tolerance, ErrorCode::SolverDivergence,
              "BiCGSTAB did not reach tolerance within " + std::to_string(opts_.max_iterations) + " iterations (residual " +
                  std::to_string(st.relative_residual) + ")");
    }
    if (stats) *stats = st;
    return x;
  }

  const SparseMatrix& matrix() const { return matrix_; }

 private:
  SolverOptions opts_;
  SparseMatrix matrix_;
  std::unique_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
  std::unique_ptr<Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>>> krylov_;
};

}  // namespace fplab
