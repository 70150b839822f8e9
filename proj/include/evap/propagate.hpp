#pragma once

#include <cmath>
#include <string>

#include <Eigen/Sparse>

#include "evap/common.hpp"
#include "evap/fock.hpp"

namespace evap {

// Dense-spectral propagator: diagonalize once, then exp(-itH) psi is exact to
// roundoff for any t. Used below the configured Fock-dimension threshold and
// as the oracle the Krylov path is tested against.
struct SpectralPropagator {
  Matrix vecs;
  RealVector vals;

  static SpectralPropagator build(const Matrix& H) {
    require(is_hermitian(H, 1e-10), "Hamiltonian is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    require(es.info() == Eigen::Success, "Hamiltonian eigendecomposition failed");
    return SpectralPropagator{es.eigenvectors(), es.eigenvalues()};
  }

  Vector apply(const Vector& amp, double t) const {
    Vector coeff = vecs.adjoint() * amp;
    for (Eigen::Index k = 0; k < coeff.size(); ++k) {
      coeff(k) *= std::exp(Complex(0.0, -vals(k) * t));
    }
    return vecs * coeff;
  }
};

namespace detail {

// One Lanczos pass with full reorthogonalization. Returns the size actually
// built, the tridiagonal coefficients, and the extension beta for the error
// estimate.
template <typename Apply>
int lanczos(const Apply& apply, const Vector& v0, int m_max, Matrix& V,
            RealVector& alpha, RealVector& beta, double& beta_ext) {
  const double nrm = v0.norm();
  V.col(0) = v0 / nrm;
  int m = 0;
  beta_ext = 0.0;
  for (int j = 0; j < m_max; ++j) {
    Vector w = apply(V.col(j));
    const double a = std::real(V.col(j).dot(w));
    alpha(j) = a;
    w -= a * V.col(j);
    if (j > 0) w -= beta(j - 1) * V.col(j - 1);
    for (int i = 0; i <= j; ++i) {
      w -= V.col(i).dot(w) * V.col(i);
    }
    const double b = w.norm();
    m = j + 1;
    if (j + 1 == m_max) {
      beta_ext = b;
      break;
    }
    if (b < 1e-14 * std::max(1.0, std::abs(a))) {
      beta_ext = 0.0;  // happy breakdown: Krylov space is invariant
      break;
    }
    beta(j) = b;
    V.col(j + 1) = w / b;
  }
  return m;
}

inline Vector expi_tridiag(const RealVector& alpha, const RealVector& beta, int m,
                           double t) {
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    T(i, i) = alpha(i);
    if (i + 1 < m) {
      T(i, i + 1) = beta(i);
      T(i + 1, i) = beta(i);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  Vector phase(m);
  for (int k = 0; k < m; ++k) {
    phase(k) = std::exp(Complex(0.0, -es.eigenvalues()(k) * t));
  }
  const Eigen::VectorXd first_row = es.eigenvectors().row(0).transpose();
  Vector out = Vector::Zero(m);
  for (int k = 0; k < m; ++k) {
    out += phase(k) * first_row(k) * es.eigenvectors().col(k).cast<Complex>();
  }
  return out;  // exp(-itT) e_1
}

}  // namespace detail

struct KrylovOptions {
  int m_max = 30;
  int max_substeps = 100000;
};

struct KrylovResult {
  Vector amp;
  double residual = 0.0;  // accumulated local error estimates
  int substeps = 0;
  bool converged = true;
};

// exp(-itH) v for Hermitian H given as a matvec, residual-controlled by
// adaptive substepping. The per-substep error estimate is the standard
// last-component indicator beta_ext * |(exp(-i tau T) e_1)_m|.
template <typename Apply>
KrylovResult krylov_expv(const Apply& apply, const Vector& v, double t, double tol,
                         const KrylovOptions& opt = {}) {
  KrylovResult res;
  res.amp = v;
  if (t == 0.0 || v.norm() == 0.0) return res;

  const int n = static_cast<int>(v.size());
  const int m_max = std::min(opt.m_max, n);
  Matrix V(n, m_max);
  RealVector alpha(m_max), beta(std::max(1, m_max - 1));

  double done = 0.0;
  const double sign = (t >= 0.0) ? 1.0 : -1.0;
  const double total = std::abs(t);
  double tau = total;

  while (done < total) {
    const double nrm = res.amp.norm();
    double beta_ext = 0.0;
    const int m = detail::lanczos(apply, res.amp, m_max, V, alpha, beta, beta_ext);
    tau = std::min(tau, total - done);

    double err = 0.0;
    Vector small;
    for (;;) {
      small = detail::expi_tridiag(alpha, beta, m, sign * tau);
      err = beta_ext * std::abs(small(m - 1)) * tau;
      const double budget = tol * std::max(tau / total, 1e-6);
      if (err <= budget || tau <= total * 1e-12) break;
      tau *= 0.5;
    }

    res.amp = nrm * (V.leftCols(m) * small);
    done += tau;
    res.residual += err;
    ++res.substeps;
    if (res.substeps > opt.max_substeps || tau <= total * 1e-12) {
      res.converged = false;
      break;
    }
    // try growing the step again
    tau *= 2.0;
  }
  return res;
}

struct ExactPropagation {
  ManyBodyState state;
  double residual = 0.0;
  std::string method;
};

// e^{-itH} psi for a Hermitian many-body Hamiltonian. Full diagonalization
// below `dense_threshold` Fock dimensions, Krylov with adaptive substepping
// above. Non-convergence of the Krylov path is an error carrying the
// achieved residual.
inline ExactPropagation propagate_exact(const Eigen::SparseMatrix<Complex>& H,
                                        const ManyBodyState& psi, double t,
                                        double tol = 1e-12, int dense_threshold = 512) {
  require(std::abs(psi.norm() - 1.0) <= 1e-8, "state must be normalized");
  ExactPropagation out;
  out.state = psi;
  if (H.rows() < dense_threshold) {
    const SpectralPropagator prop = SpectralPropagator::build(Matrix(H));
    out.state.amp = prop.apply(psi.amp, t);
    out.method = "spectral";
    return out;
  }
  auto apply = [&H](const Vector& x) -> Vector { return H * x; };
  KrylovResult k = krylov_expv(apply, psi.amp, t, tol);
  if (!k.converged) {
    throw Error("Krylov propagation did not reach tolerance; achieved residual " +
                std::to_string(k.residual));
  }
  out.state.amp = std::move(k.amp);
  out.residual = k.residual;
  out.method = "krylov";
  return out;
}

}  // namespace evap
