#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace evap {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Domain errors (bad inputs, broken invariants) are thrown as Error so the
// CLI can turn them into nonzero exits with a message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return r;
}

inline double hermiticity_defect(const Matrix& a) {
  return (a - a.adjoint()).norm();
}

// Relative Hermiticity defect against the matrix scale; zero matrices pass.
inline bool is_hermitian(const Matrix& a, double rel_tol = 1e-12) {
  const double scale = std::max(a.norm(), 1.0);
  return hermiticity_defect(a) <= rel_tol * scale;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace evap
