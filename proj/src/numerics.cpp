#include "opsplit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace opsplit {

namespace {

constexpr double kPowerTol = 1e-10;
constexpr int kPowerCap = 100000;

// Deterministic non-degenerate start vector (splitmix64 fill).
Eigen::VectorXd power_start(Eigen::Index n) {
  Eigen::VectorXd v(n);
  std::uint64_t s = 0x9E3779B97F4A7C15ULL;
  for (Eigen::Index i = 0; i < n; ++i) {
    s += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
    v[i] = 0.5 + static_cast<double>(z >> 11) / 9007199254740992.0;  // in (0.5, 1.5)
  }
  return v.normalized();
}

// Dominant (largest) eigenvalue of a symmetric PSD matrix by power iteration.
double dominant_eigenvalue_psd(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 0.0;
  if (a.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Eigen::VectorXd v = power_start(n);
  double lam = v.dot(a * v);
  for (int it = 0; it < kPowerCap; ++it) {
    Eigen::VectorXd w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;  // v landed in the kernel; eigenvalue 0 dominates
    v = w / norm;
    const double lam_next = v.dot(a * v);
    const double diff = std::abs(lam_next - lam);
    lam = lam_next;
    if (diff <= kPowerTol * std::max(1.0, std::abs(lam))) return lam;
  }
  throw std::runtime_error("power iteration did not converge within the iteration cap");
}

}  // namespace

double lambda_max(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("lambda_max: matrix must be square");
  // Gershgorin bound makes M + cI PSD with lambda_max(M + cI) = lambda_max(M) + c.
  const double c = m.cwiseAbs().rowwise().sum().maxCoeff();
  Eigen::MatrixXd shifted = m;
  shifted.diagonal().array() += c;
  return dominant_eigenvalue_psd(shifted) - c;
}

double lambda_min(const Eigen::MatrixXd& m) { return -lambda_max(-m); }

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  const Eigen::MatrixXd gram =
      (m.rows() <= m.cols()) ? Eigen::MatrixXd(m * m.transpose()) : Eigen::MatrixXd(m.transpose() * m);
  return std::sqrt(std::max(0.0, dominant_eigenvalue_psd(gram)));
}

double weighted_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights) {
  if (weights.size() != x.cols())
    throw std::invalid_argument("weighted_norm: one weight per agent column required");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    if (weights[i] <= 0.0) throw std::invalid_argument("weighted_norm: weights must be positive");
    acc += weights[i] * x.col(i).squaredNorm();
  }
  return std::sqrt(acc);
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index p = v.size();
  if (p < 1) throw std::invalid_argument("project_simplex: empty vector");
  std::vector<double> u(v.data(), v.data() + p);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    css += u[j];
    const double t = (css - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0);
}

Eigen::VectorXd project_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper) {
  if (lower.size() != v.size() || upper.size() != v.size())
    throw std::invalid_argument("project_box: bound dimension mismatch");
  return v.cwiseMax(lower).cwiseMin(upper);
}

Eigen::VectorXd solve_linear(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw std::invalid_argument("solve_linear: shape mismatch");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw std::runtime_error("solve_linear: matrix is singular");
  Eigen::VectorXd x = lu.solve(b);
  const double resid = (a * x - b).norm();
  if (resid > 1e-8 * (1.0 + b.norm()))
    throw std::runtime_error("solve_linear: residual check failed");
  return x;
}

namespace {

double complementarity(const Eigen::VectorXd& cu, const Eigen::VectorXd& dual,
                       const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < cu.size(); ++j) {
    const double yp = std::max(dual[j], 0.0);
    const double yn = std::max(-dual[j], 0.0);
    const double up_gap = (hi[j] >= box_infinity) ? 1.0 : std::abs(hi[j] - cu[j]);
    const double lo_gap = (lo[j] <= -box_infinity) ? 1.0 : std::abs(cu[j] - lo[j]);
    worst = std::max(worst, yp * up_gap);
    worst = std::max(worst, yn * lo_gap);
  }
  return worst;
}

}  // namespace

QPResult qp_solve(const QPProblem& qp, double tol, int max_iterations) {
  const int n = qp.dim();
  if (qp.p.rows() != n || qp.p.cols() != n) throw std::invalid_argument("qp_solve: P shape mismatch");
  const int m_band = static_cast<int>(qp.s.rows());
  if (m_band > 0 && qp.s.cols() != n) throw std::invalid_argument("qp_solve: S shape mismatch");

  // Stacked constraint map C = [I; S], bounds [lower;band_lower] .. [upper;band_upper].
  const int m = n + m_band;
  Eigen::MatrixXd c(m, n);
  c.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  if (m_band > 0) c.bottomRows(m_band) = qp.s;
  Eigen::VectorXd lo(m), hi(m);
  lo.head(n) = qp.lower;
  hi.head(n) = qp.upper;
  if (m_band > 0) {
    lo.tail(m_band) = qp.band_lower;
    hi.tail(m_band) = qp.band_upper;
  }

  const double rho = 1.0;
  const double relax = 1.6;
  Eigen::LDLT<Eigen::MatrixXd> kkt(qp.p + rho * c.transpose() * c);
  if (kkt.info() != Eigen::Success)
    throw std::runtime_error("qp_solve: factorization of P + C^T C failed");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  QPResult out;
  for (int it = 1; it <= max_iterations; ++it) {
    x = kkt.solve(-qp.q + c.transpose() * (rho * z - y));
    const Eigen::VectorXd cx = c * x;
    const Eigen::VectorXd ch = relax * cx + (1.0 - relax) * z;
    z = (ch + y / rho).cwiseMax(lo).cwiseMin(hi);
    y += rho * (ch - z);

    const double stat = (qp.p * x + qp.q + c.transpose() * y).lpNorm<Eigen::Infinity>();
    const double prim = (cx - cx.cwiseMax(lo).cwiseMin(hi)).lpNorm<Eigen::Infinity>();
    const double comp = complementarity(cx, y, lo, hi);
    const double kkt_resid = std::max({stat, prim, comp});
    if (kkt_resid <= tol) {
      out.x = x;
      out.converged = true;
      out.iterations = it;
      out.kkt_residual = kkt_resid;
      return out;
    }
    if (it == max_iterations) {
      out.x = x;
      out.converged = false;
      out.iterations = it;
      out.kkt_residual = kkt_resid;
    }
  }
  return out;
}

}  // namespace opsplit
