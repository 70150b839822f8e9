#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "evap/common.hpp"
#include "evap/fock.hpp"
#include "evap/rotation.hpp"

namespace evap {

// Rank-N orthogonal projector p on the single-particle space; q = 1 - p.
struct SlaterProjector {
  Matrix p;
  int N = 0;

  static SlaterProjector from_matrix(const Matrix& p, int N) {
    SlaterProjector out;
    out.p = p;
    out.N = N;
    out.validate();
    return out;
  }

  static SlaterProjector from_orbitals(const Matrix& orbitals) {
    SlaterProjector out;
    out.p = orbitals * orbitals.adjoint();
    out.N = static_cast<int>(orbitals.cols());
    out.validate();
    return out;
  }

  int dim() const { return static_cast<int>(p.rows()); }
  Matrix q() const { return Matrix::Identity(dim(), dim()) - p; }

  void validate() const {
    require(p.rows() == p.cols(), "projector must be square");
    require(is_hermitian(p, 1e-10), "projector is not Hermitian");
    require((p * p - p).norm() <= 1e-10, "matrix is not idempotent");
    require(std::abs(p.trace().real() - N) <= 1e-10 && std::abs(p.trace().imag()) <= 1e-10,
            "projector trace != N");
  }
};

// Monotone weight g(0..N); g(x) = 0 for x < 0 and g(x) = g(N) for x > N.
struct WeightFunction {
  std::vector<double> values;

  static WeightFunction identity(int N) {
    WeightFunction g;
    g.values.resize(N + 1);
    for (int m = 0; m <= N; ++m) g.values[m] = m;
    return g;
  }

  static WeightFunction from_values(std::vector<double> v) {
    WeightFunction g;
    g.values = std::move(v);
    g.validate();
    return g;
  }

  int max_index() const { return static_cast<int>(values.size()) - 1; }

  double operator()(int m) const {
    if (m < 0) return 0.0;
    if (m > max_index()) return values.back();
    return values[m];
  }

  void validate() const {
    require(!values.empty(), "weight function needs at least g(0)");
    for (std::size_t i = 0; i < values.size(); ++i) {
      require(values[i] >= 0.0, "weight values must be nonnegative");
      if (i > 0) {
        require(values[i] + 1e-14 >= values[i - 1], "weight function must be monotone");
      }
    }
  }

  bool is_monotone() const {
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] + 1e-14 < values[i - 1]) return false;
    }
    return true;
  }
};

// g_theta(x) = N^{1-theta} x on [0, N^theta], N above. The two branches agree
// at the knee, so integer tabulation is insensitive to rounding of N^theta.
inline WeightFunction weight_g_theta(int N, double theta) {
  require(N >= 1, "g_theta needs N >= 1");
  require(theta > 0.0 && theta <= 1.0, "theta must lie in (0, 1]");
  const double knee = std::pow(static_cast<double>(N), theta);
  const double slope = std::pow(static_cast<double>(N), 1.0 - theta);
  WeightFunction g;
  g.values.resize(N + 1);
  for (int m = 0; m <= N; ++m) {
    g.values[m] = (m <= knee) ? std::min(slope * m, static_cast<double>(N))
                              : static_cast<double>(N);
  }
  return g;
}

// Resolution of a state by the spectral projections P_m of dGamma(q):
// amplitudes rotated into an orthonormal basis adapted to ran(p) + ran(q)
// (p-modes first), classified by occupation outside ran(p).
struct CountingDecomposition {
  std::shared_ptr<const FockBasis> basis;
  Matrix adapted;              // columns 0..N-1 span ran(p), the rest ran(q)
  Vector rotated;              // amplitudes in the adapted basis
  std::vector<int> sector;     // m per basis index
  std::vector<double> sector_norm2;  // ||P_m psi||^2, m = 0..N

  // P_m psi in the adapted basis.
  Vector component(int m) const {
    Vector out = Vector::Zero(rotated.size());
    for (Eigen::Index i = 0; i < rotated.size(); ++i) {
      if (sector[static_cast<std::size_t>(i)] == m) out(i) = rotated(i);
    }
    return out;
  }

  // sum_m w(m) P_m psi in the adapted basis.
  Vector weighted(const std::vector<double>& w) const {
    Vector out(rotated.size());
    for (Eigen::Index i = 0; i < rotated.size(); ++i) {
      out(i) = w[static_cast<std::size_t>(sector[static_cast<std::size_t>(i)])] * rotated(i);
    }
    return out;
  }

  // Back to the original single-particle basis.
  Vector to_original(const Vector& adapted_amp) const {
    return fock_unitary_apply(adapted, basis, adapted_amp);
  }
};

// Orthonormal basis adapted to ran(p) + ran(q), p-modes first.
inline Matrix adapted_basis(const SlaterProjector& proj) {
  const int d = proj.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> es(proj.p);
  require(es.info() == Eigen::Success, "projector eigendecomposition failed");
  Matrix U(d, d);
  // eigenvalues ascend, so ran(p) occupies the trailing N columns
  U.leftCols(proj.N) = es.eigenvectors().rightCols(proj.N);
  U.rightCols(d - proj.N) = es.eigenvectors().leftCols(d - proj.N);
  return U;
}

inline CountingDecomposition counting_components(const ManyBodyState& psi,
                                                 const SlaterProjector& proj) {
  const FockBasis& basis = *psi.basis;
  require(proj.dim() == basis.d, "projector dimension mismatch");
  require(proj.N == basis.N, "projector rank must equal the particle number");

  CountingDecomposition out;
  out.basis = psi.basis;
  out.adapted = adapted_basis(proj);
  // coefficients in the adapted frame: Phi(U)+ psi = Phi(U+) psi
  out.rotated = fock_unitary_apply(out.adapted.adjoint(), psi.basis, psi.amp);

  const std::uint64_t qmask = ((std::uint64_t{1} << basis.d) - 1) ^
                              ((std::uint64_t{1} << basis.N) - 1);
  out.sector.resize(basis.size());
  out.sector_norm2.assign(basis.N + 1, 0.0);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const int m = std::popcount(basis.states[i] & qmask);
    out.sector[i] = m;
    out.sector_norm2[m] += std::norm(out.rotated(static_cast<Eigen::Index>(i)));
  }
  return out;
}

// S_g = sum_m g(m) ||P_m psi||^2.
inline double evaporation_degree(const CountingDecomposition& dec, const WeightFunction& g) {
  double s = 0.0;
  for (std::size_t m = 0; m < dec.sector_norm2.size(); ++m) {
    s += g(static_cast<int>(m)) * dec.sector_norm2[m];
  }
  return s;
}

inline double evaporation_degree(const ManyBodyState& psi, const SlaterProjector& proj,
                                 const WeightFunction& g) {
  return evaporation_degree(counting_components(psi, proj), g);
}

// The weighted states entering the Gronwall terms:
//   psi^{[j]}  = sum_m sqrt(g(m) - g(m-j)) P_m psi     (j = 1, 2)
//   psi^{[-j]} = sum_m sqrt(g(m+j) - g(m)) P_m psi
// Radicands are nonnegative for monotone g. Amplitudes live in the adapted
// basis of the decomposition.
inline Vector weighted_state(const CountingDecomposition& dec, const WeightFunction& g,
                             int j) {
  require(j != 0, "weighted state index must be nonzero");
  require(g.is_monotone(), "weighted states need a monotone weight");
  const int N = dec.basis->N;
  std::vector<double> w(N + 1);
  for (int m = 0; m <= N; ++m) {
    const double radicand = (j > 0) ? g(m) - g(m - j) : g(m - j) - g(m);
    w[m] = std::sqrt(std::max(0.0, radicand));
  }
  return dec.weighted(w);
}

}  // namespace evap
