#pragma once

#include <Eigen/Dense>

namespace opsplit {

// Values with |x| >= box_infinity are treated as unbounded box/band entries.
inline constexpr double box_infinity = 1e300;

// Largest singular value, via power iteration on M^T M.
// Relative tolerance 1e-10, iteration cap 100000; throws on non-convergence.
double spectral_norm(const Eigen::MatrixXd& m);

// Largest eigenvalue of a real symmetric matrix (power iteration with a
// Gershgorin shift so the dominant eigenvalue of the shifted matrix is the
// largest one). Same tolerance/cap contract as spectral_norm.
double lambda_max(const Eigen::MatrixXd& m);

// Smallest eigenvalue of a real symmetric matrix, lambda_min(M) = -lambda_max(-M).
double lambda_min(const Eigen::MatrixXd& m);

// sqrt(sum_i w_i * ||x_i||^2) over agent columns of x. Weights must be positive.
double weighted_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights);

// Euclidean projection onto the unit simplex {u >= 0, sum u = 1}.
// Sort-based exact algorithm.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

// Componentwise clamp onto [lower, upper].
Eigen::VectorXd project_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper);

// Solve Ax = b for square nonsingular A (full-pivot LU, pivot threshold 1e-12).
// Throws if A is singular or the residual exceeds 1e-8 * (1 + ||b||).
Eigen::VectorXd solve_linear(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

// Dense convex QP:
//   minimize   (1/2) u^T P u + q^T u
//   subject to lower <= u <= upper            (box)
//              band_lower <= S u <= band_upper (band rows; equal bounds allowed)
// P symmetric PSD. Box/band entries beyond +-box_infinity are unbounded.
struct QPProblem {
  Eigen::MatrixXd p;
  Eigen::VectorXd q;
  Eigen::VectorXd lower, upper;
  Eigen::MatrixXd s;
  Eigen::VectorXd band_lower, band_upper;

  int dim() const { return static_cast<int>(q.size()); }
};

struct QPResult {
  Eigen::VectorXd x;
  bool converged = false;
  int iterations = 0;
  double kkt_residual = 0.0;
};

// Operator-splitting (ADMM, fixed penalty 1.0, over-relaxation 1.6) with
// KKT-residual stopping. Deterministic iteration order. Returns the last
// iterate with converged=false when the iteration cap is hit.
QPResult qp_solve(const QPProblem& qp, double tol = 1e-10, int max_iterations = 200000);

}  // namespace opsplit
