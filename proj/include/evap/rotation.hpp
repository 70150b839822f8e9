#pragma once

#include <cstdint>
#include <vector>

#include "evap/common.hpp"
#include "evap/fock.hpp"

namespace evap {

// Second-quantized action of a single-particle unitary W on the N-particle
// sector: Phi(W) a+_k Phi(W)+ = sum_i W(i,k) a+_i. Matrix elements on the
// occupation basis are the N x N minors <I|Phi(W)|J> = det W[I,J].

namespace detail {

struct TwoModeFactor {
  int i, j;          // i < j
  Complex gii, gij, gji, gjj;
};

// QR by complex Givens rotations: G_m ... G_1 W = diag(phases), hence
// W = G_1+ ... G_m+ D. Factors are returned in application order for
// Phi(W), i.e. apply `phases` first, then factors back to front.
struct GivensChain {
  std::vector<TwoModeFactor> factors;  // adjoints of the eliminating rotations
  std::vector<Complex> phases;
};

inline GivensChain givens_decompose(Matrix W) {
  const int d = static_cast<int>(W.rows());
  require(W.cols() == d, "unitary must be square");
  require((W.adjoint() * W - Matrix::Identity(d, d)).norm() <= 1e-10 * d,
          "matrix is not unitary");
  GivensChain chain;
  for (int k = 0; k < d; ++k) {
    for (int i = d - 1; i > k; --i) {
      const Complex a = W(k, k);
      const Complex b = W(i, k);
      if (std::abs(b) < 1e-300) continue;
      const double r = std::sqrt(std::norm(a) + std::norm(b));
      const Complex c = std::conj(a) / r;
      const Complex s = std::conj(b) / r;
      // G rows (k,i): [c s; -conj(s) conj(c)], annihilates W(i,k).
      for (int col = 0; col < d; ++col) {
        const Complex wk = W(k, col);
        const Complex wi = W(i, col);
        W(k, col) = c * wk + s * wi;
        W(i, col) = -std::conj(s) * wk + std::conj(c) * wi;
      }
      TwoModeFactor f;
      f.i = k;
      f.j = i;
      // adjoint of G restricted to modes (k,i)
      f.gii = std::conj(c);
      f.gij = -s;
      f.gji = std::conj(s);
      f.gjj = c;
      chain.factors.push_back(f);
    }
  }
  chain.phases.resize(d);
  for (int k = 0; k < d; ++k) chain.phases[k] = W(k, k);
  return chain;
}

// Apply the Fock lift of a two-mode unitary in place. Bitsets with both
// modes occupied pick up det(g); singly occupied pairs mix with the parity
// of the modes strictly between them. Each mixing pair is visited once, via
// its member that has mode i occupied.
inline void apply_two_mode_factor(const TwoModeFactor& f, const FockBasis& basis,
                                  Vector& amp) {
  const std::uint64_t bi = std::uint64_t{1} << f.i;
  const std::uint64_t bj = std::uint64_t{1} << f.j;
  const std::uint64_t between = ((std::uint64_t{1} << f.j) - 1) &
                                ~((std::uint64_t{1} << (f.i + 1)) - 1);
  const Complex det = f.gii * f.gjj - f.gij * f.gji;
  for (std::size_t n = 0; n < basis.size(); ++n) {
    const std::uint64_t mask = basis.states[n];
    const bool oi = mask & bi;
    const bool oj = mask & bj;
    if (oi && oj) {
      amp(static_cast<Eigen::Index>(n)) *= det;
    } else if (oi && !oj) {
      const std::uint64_t partner = (mask ^ bi) | bj;
      const auto m = static_cast<Eigen::Index>(basis.index_of(partner));
      const auto k = static_cast<Eigen::Index>(n);
      const double sgn = (std::popcount(mask & between) & 1) ? -1.0 : 1.0;
      const Complex x = amp(k);  // mode i occupied
      const Complex y = amp(m);  // mode j occupied
      amp(k) = f.gii * x + sgn * f.gij * y;
      amp(m) = sgn * f.gji * x + f.gjj * y;
    }
  }
}

}  // namespace detail

// amp' = Phi(W) amp via a Givens factorization of W; O(d^2 |basis|).
inline Vector fock_unitary_apply(const Matrix& W,
                                 const std::shared_ptr<const FockBasis>& basis,
                                 const Vector& amp) {
  require(W.rows() == basis->d && W.cols() == basis->d,
          "unitary dimension mismatch");
  detail::GivensChain chain = detail::givens_decompose(W);
  Vector out = amp;

  // diagonal phase part first
  for (std::size_t n = 0; n < basis->size(); ++n) {
    std::uint64_t mask = basis->states[n];
    Complex phase(1.0, 0.0);
    while (mask) {
      phase *= chain.phases[std::countr_zero(mask)];
      mask &= mask - 1;
    }
    out(static_cast<Eigen::Index>(n)) *= phase;
  }

  for (auto it = chain.factors.rbegin(); it != chain.factors.rend(); ++it) {
    detail::apply_two_mode_factor(*it, *basis, out);
  }
  return out;
}

// Dense matrix of Phi(W) from the minors formula; quadratic in the basis
// size, kept as the independent oracle for fock_unitary_apply.
inline Matrix fock_unitary_matrix(const Matrix& W,
                                  const std::shared_ptr<const FockBasis>& basis) {
  const int N = basis->N;
  const auto dim = static_cast<Eigen::Index>(basis->size());
  Matrix out(dim, dim);
  std::vector<int> rows, cols;
  Matrix minor(N, N);
  for (Eigen::Index cj = 0; cj < dim; ++cj) {
    detail::occupied_modes(basis->states[static_cast<std::size_t>(cj)], cols);
    for (Eigen::Index ri = 0; ri < dim; ++ri) {
      detail::occupied_modes(basis->states[static_cast<std::size_t>(ri)], rows);
      for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) minor(a, b) = W(rows[a], cols[b]);
      out(ri, cj) = (N == 0) ? Complex(1.0, 0.0) : minor.determinant();
    }
  }
  return out;
}

}  // namespace evap
