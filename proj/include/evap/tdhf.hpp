#pragma once

#include <cmath>

#include "evap/common.hpp"
#include "evap/counting.hpp"
#include "evap/model.hpp"

namespace evap {

struct TdhfState {
  Matrix orbitals;  // d x N, orthonormal columns
  double t = 0.0;

  int dim() const { return static_cast<int>(orbitals.rows()); }
  int particles() const { return static_cast<int>(orbitals.cols()); }

  Matrix projector() const { return orbitals * orbitals.adjoint(); }

  double gram_defect() const {
    const int N = particles();
    return (orbitals.adjoint() * orbitals - Matrix::Identity(N, N)).norm();
  }

  void validate() const {
    require(gram_defect() <= 1e-10, "TDHF orbitals are not orthonormal");
  }
};

// Direct and exchange fields of the mean-field operator, without the
// coupling: direct[a,b] = sum_{c,e} V[a,c,b,e] p[e,c],
//           exchange[a,b] = sum_{c,e} V[a,c,e,b] p[e,c].
struct MeanFieldTerms {
  Matrix direct;
  Matrix exchange;
};

inline MeanFieldTerms mean_field_terms(const FiniteBasisModel& model, const Matrix& p) {
  const int d = model.d;
  require(p.rows() == d && p.cols() == d, "projector dimension mismatch");
  MeanFieldTerms out;
  out.direct = Matrix::Zero(d, d);
  out.exchange = Matrix::Zero(d, d);
  if (model.V.is_zero()) return out;

  if (model.V.is_kernel_diagonal()) {
    const RealMatrix& v = model.V.kernel();
    RealVector f(d);
    for (int c = 0; c < d; ++c) f(c) = p(c, c).real();
    for (int a = 0; a < d; ++a) {
      double acc = 0.0;
      for (int c = 0; c < d; ++c) acc += v(a, c) * f(c);
      out.direct(a, a) = acc;
    }
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) out.exchange(a, b) = v(a, b) * p(a, b);
    return out;
  }

  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      Complex dir(0.0, 0.0), exch(0.0, 0.0);
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) {
          dir += model.V(a, c, b, e) * p(e, c);
          exch += model.V(a, c, e, b) * p(e, c);
        }
      out.direct(a, b) = dir;
      out.exchange(a, b) = exch;
    }
  return out;
}

// Effective mean-field Hamiltonian h + lambda (direct - exchange).
inline Matrix mean_field_hamiltonian(const FiniteBasisModel& model, const Matrix& p,
                                     bool include_exchange = true) {
  const MeanFieldTerms mf = mean_field_terms(model, p);
  Matrix h = model.h + model.lambda * mf.direct;
  if (include_exchange) h -= model.lambda * mf.exchange;
  return h;
}

inline Matrix unitary_exp(const Matrix& hermitian, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian);
  require(es.info() == Eigen::Success, "field eigendecomposition failed");
  Vector phase(hermitian.rows());
  for (Eigen::Index k = 0; k < phase.size(); ++k) {
    phase(k) = std::exp(Complex(0.0, -es.eigenvalues()(k) * t));
  }
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

// QR re-orthonormalization with positive real diagonal of R, which keeps the
// orbitals continuous along the trajectory.
inline Matrix reorthonormalize(const Matrix& orbitals) {
  Eigen::HouseholderQR<Matrix> qr(orbitals);
  Matrix Q = qr.householderQ() * Matrix::Identity(orbitals.rows(), orbitals.cols());
  const Matrix R = Q.adjoint() * orbitals;
  for (Eigen::Index k = 0; k < orbitals.cols(); ++k) {
    const Complex rkk = R(k, k);
    if (std::abs(rkk) > 0.0) Q.col(k) *= rkk / std::abs(rkk);
  }
  return Q;
}

struct TdhfOptions {
  int field_refinements = 1;     // fixed-point refinements of the midpoint field
  bool include_exchange = true;  // Hartree-only comparisons disable this
  double ortho_abort_tol = 1e-6;
};

// Exponential-midpoint step for i dp/dt = [h_HF(p), p] in orbital form:
// refine the midpoint field by propagating half a step, then advance the
// full step with the refined field.
inline TdhfState tdhf_step(const FiniteBasisModel& model, const TdhfState& state,
                           double dt, const TdhfOptions& opt = {}) {
  Matrix field = mean_field_hamiltonian(model, state.projector(), opt.include_exchange);
  for (int r = 0; r < opt.field_refinements; ++r) {
    const Matrix half = unitary_exp(field, 0.5 * dt) * state.orbitals;
    field = mean_field_hamiltonian(model, half * half.adjoint(), opt.include_exchange);
  }
  TdhfState out;
  out.orbitals = unitary_exp(field, dt) * state.orbitals;
  out.t = state.t + dt;

  const double defect = out.gram_defect();
  if (defect > opt.ortho_abort_tol) {
    throw Error("TDHF lost orthonormality: Gram defect " + std::to_string(defect) +
                " at t = " + std::to_string(out.t));
  }
  out.orbitals = reorthonormalize(out.orbitals);
  return out;
}

inline TdhfState propagate_tdhf(const FiniteBasisModel& model, TdhfState state,
                                double dt, int steps, const TdhfOptions& opt = {}) {
  require(dt > 0.0, "TDHF step size must be positive");
  state.validate();
  for (int k = 0; k < steps; ++k) {
    state = tdhf_step(model, state, dt, opt);
  }
  return state;
}

struct HfObservables {
  double t = 0.0;
  double energy = 0.0;    // nu + Tr[h p] + (lambda/2) (direct - exchange)
  double kinetic = 0.0;   // Tr[T p]
  double direct_energy = 0.0;
  double exchange_energy = 0.0;
};

// `include_exchange = false` reports the Hartree-only energy functional, the
// conserved quantity of the exchange-stripped propagation.
inline HfObservables hf_observables(const FiniteBasisModel& model, const TdhfState& state,
                                    bool include_exchange = true) {
  const Matrix p = state.projector();
  const MeanFieldTerms mf = mean_field_terms(model, p);
  HfObservables obs;
  obs.t = state.t;
  obs.direct_energy = 0.5 * model.lambda * (mf.direct * p).trace().real();
  obs.exchange_energy = 0.5 * model.lambda * (mf.exchange * p).trace().real();
  obs.energy = model.nu + (model.h * p).trace().real() + obs.direct_energy;
  if (include_exchange) obs.energy -= obs.exchange_energy;
  obs.kinetic = (model.kinetic * p).trace().real();
  return obs;
}

// Lowest-N eigenvectors of the one-body matrix: the Slater initial data.
inline Matrix lowest_orbitals(const FiniteBasisModel& model, int N) {
  require(N >= 0 && N <= model.d, "orbital count out of range");
  Eigen::SelfAdjointEigenSolver<Matrix> es(model.h);
  require(es.info() == Eigen::Success, "one-body eigendecomposition failed");
  return es.eigenvectors().leftCols(N);
}

// Slater orbitals rotated by `angle` in the plane of the highest occupied
// and lowest unoccupied orbital; realizes a controllable nonzero
// ||gamma_0 - p_0|| when the exact side keeps the unrotated Slater state.
inline Matrix perturbed_orbitals(const FiniteBasisModel& model, int N, double angle) {
  require(N >= 1 && N < model.d, "perturbed start needs 1 <= N < d");
  Eigen::SelfAdjointEigenSolver<Matrix> es(model.h);
  Matrix orbitals = es.eigenvectors().leftCols(N);
  const Vector lumo = es.eigenvectors().col(N);
  orbitals.col(N - 1) = std::cos(angle) * orbitals.col(N - 1) + std::sin(angle) * lumo;
  return orbitals;
}

}  // namespace evap
