#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "evap/common.hpp"
#include "evap/model.hpp"

namespace evap {

// Occupation basis of the N-particle antisymmetric sector. A state is a
// bitmask over the d single-particle modes; the reference ordering of
// creation operators is ascending mode index, so
//   |mask> = a+_{i1} a+_{i2} ... a+_{iN} |0>,   i1 < i2 < ... < iN.
struct FockBasis {
  int d = 0;
  int N = 0;
  std::vector<std::uint64_t> states;  // ascending bit patterns
  std::unordered_map<std::uint64_t, int> index;

  std::size_t size() const { return states.size(); }

  int index_of(std::uint64_t mask) const {
    auto it = index.find(mask);
    require(it != index.end(), "occupation pattern not in basis");
    return it->second;
  }
};

inline std::shared_ptr<const FockBasis> enumerate_basis(int d, int N) {
  require(d >= 0 && d <= 62, "basis dimension out of range");
  require(N >= 0, "particle number must be nonnegative");
  require(N <= d, "cannot place more fermions than modes");
  auto basis = std::make_shared<FockBasis>();
  basis->d = d;
  basis->N = N;
  const std::uint64_t count = binomial(d, N);
  basis->states.reserve(count);
  if (N == 0) {
    basis->states.push_back(0);
  } else {
    // Gosper's hack walks N-bit subsets in increasing numeric order, which is
    // the lexicographic order on bitsets read from the top mode down.
    std::uint64_t v = (std::uint64_t{1} << N) - 1;
    const std::uint64_t limit = std::uint64_t{1} << d;
    while (v < limit) {
      basis->states.push_back(v);
      const std::uint64_t c = v & (~v + 1);
      const std::uint64_t r = v + c;
      v = (((r ^ v) >> 2) / c) | r;
    }
  }
  require(basis->states.size() == count, "basis enumeration miscounted");
  basis->index.reserve(basis->states.size());
  for (std::size_t i = 0; i < basis->states.size(); ++i) {
    basis->index.emplace(basis->states[i], static_cast<int>(i));
  }
  return basis;
}

struct ManyBodyState {
  std::shared_ptr<const FockBasis> basis;
  Vector amp;

  double norm() const { return amp.norm(); }
  void normalize() {
    const double n = amp.norm();
    require(n > 0.0, "cannot normalize the zero state");
    amp /= n;
  }
};

inline ManyBodyState zero_state(std::shared_ptr<const FockBasis> basis) {
  ManyBodyState s;
  s.amp = Vector::Zero(static_cast<Eigen::Index>(basis->size()));
  s.basis = std::move(basis);
  return s;
}

namespace detail {

inline int parity_below(std::uint64_t mask, int p) {
  const std::uint64_t below = mask & ((std::uint64_t{1} << p) - 1);
  return (std::popcount(below) & 1) ? -1 : 1;
}

// a_p |mask>; returns sign and updates mask, or 0 if p is empty.
inline int annihilate(std::uint64_t& mask, int p) {
  const std::uint64_t bit = std::uint64_t{1} << p;
  if (!(mask & bit)) return 0;
  const int sign = parity_below(mask, p);
  mask ^= bit;
  return sign;
}

// a+_p |mask>; returns sign and updates mask, or 0 if p is occupied.
inline int create(std::uint64_t& mask, int p) {
  const std::uint64_t bit = std::uint64_t{1} << p;
  if (mask & bit) return 0;
  const int sign = parity_below(mask, p);
  mask |= bit;
  return sign;
}

inline void occupied_modes(std::uint64_t mask, std::vector<int>& out) {
  out.clear();
  while (mask) {
    const int p = std::countr_zero(mask);
    out.push_back(p);
    mask &= mask - 1;
  }
}

}  // namespace detail

// dGamma(A) psi = sum_{p,q} A(p,q) a+_p a_q psi. The input need not be
// normalized; the output is whatever the operator produces.
inline ManyBodyState dgamma_apply(const Matrix& A, const ManyBodyState& psi) {
  const FockBasis& basis = *psi.basis;
  require(A.rows() == basis.d && A.cols() == basis.d, "one-body matrix dimension mismatch");
  ManyBodyState out = zero_state(psi.basis);
  std::vector<int> occ;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Complex c = psi.amp(static_cast<Eigen::Index>(i));
    if (c == Complex(0.0, 0.0)) continue;
    const std::uint64_t mask = basis.states[i];
    detail::occupied_modes(mask, occ);
    for (int q : occ) {
      std::uint64_t m1 = mask;
      const int s1 = detail::annihilate(m1, q);
      for (int p = 0; p < basis.d; ++p) {
        if (A(p, q) == Complex(0.0, 0.0)) continue;
        std::uint64_t m2 = m1;
        const int s2 = detail::create(m2, p);
        if (s2 == 0) continue;
        out.amp(basis.index_of(m2)) += A(p, q) * static_cast<double>(s1 * s2) * c;
      }
    }
  }
  return out;
}

// dGamma2(B) psi = sum_{p,q,r,s} <pq|B|rs> a+_p a+_q a_s a_r psi, for B a
// (not necessarily antisymmetrized) operator on the two-fold product space.
template <typename BKernel>
ManyBodyState dgamma2_apply_kernel(const BKernel& B, const ManyBodyState& psi) {
  const FockBasis& basis = *psi.basis;
  ManyBodyState out = zero_state(psi.basis);
  std::vector<int> occ;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Complex c = psi.amp(static_cast<Eigen::Index>(i));
    if (c == Complex(0.0, 0.0)) continue;
    const std::uint64_t mask = basis.states[i];
    detail::occupied_modes(mask, occ);
    for (int r : occ) {
      std::uint64_t m1 = mask;
      const int s1 = detail::annihilate(m1, r);
      for (int s : occ) {
        if (s == r) continue;
        std::uint64_t m2 = m1;
        const int s2 = detail::annihilate(m2, s);
        for (int q = 0; q < basis.d; ++q) {
          std::uint64_t m3 = m2;
          const int s3 = detail::create(m3, q);
          if (s3 == 0) continue;
          for (int p = 0; p < basis.d; ++p) {
            const Complex b = B(p, q, r, s);
            if (b == Complex(0.0, 0.0)) continue;
            std::uint64_t m4 = m3;
            const int s4 = detail::create(m4, p);
            if (s4 == 0) continue;
            out.amp(basis.index_of(m4)) +=
                b * static_cast<double>(s1 * s2 * s3 * s4) * c;
          }
        }
      }
    }
  }
  return out;
}

inline ManyBodyState dgamma2_apply(const TwoBodyTensor& V, const ManyBodyState& psi) {
  require(V.is_zero() || V.dim() == psi.basis->d, "two-body tensor dimension mismatch");
  if (V.is_zero()) return zero_state(psi.basis);
  if (V.is_kernel_diagonal()) {
    // V[p,q,r,s] = v(p,q) delta_pr delta_qs makes dGamma2 diagonal.
    const RealMatrix& v = V.kernel();
    ManyBodyState out = zero_state(psi.basis);
    std::vector<int> occ;
    for (std::size_t i = 0; i < psi.basis->size(); ++i) {
      detail::occupied_modes(psi.basis->states[i], occ);
      double w = 0.0;
      for (std::size_t a = 0; a < occ.size(); ++a)
        for (std::size_t b = 0; b < occ.size(); ++b)
          if (a != b) w += v(occ[a], occ[b]);
      out.amp(static_cast<Eigen::Index>(i)) = w * psi.amp(static_cast<Eigen::Index>(i));
    }
    return out;
  }
  return dgamma2_apply_kernel([&](int p, int q, int r, int s) { return V(p, q, r, s); },
                              psi);
}

inline Complex inner(const ManyBodyState& a, const ManyBodyState& b) {
  return a.amp.dot(b.amp);
}

// Dense matrices of dGamma / dGamma2 on the N-particle sector (test oracles
// and the small dense audits).
inline Matrix dgamma_matrix(const Matrix& A, const std::shared_ptr<const FockBasis>& basis) {
  const auto dim = static_cast<Eigen::Index>(basis->size());
  Matrix out(dim, dim);
  ManyBodyState unit = zero_state(basis);
  for (Eigen::Index j = 0; j < dim; ++j) {
    unit.amp.setZero();
    unit.amp(j) = 1.0;
    out.col(j) = dgamma_apply(A, unit).amp;
  }
  return out;
}

template <typename BKernel>
Matrix dgamma2_matrix(const BKernel& B, const std::shared_ptr<const FockBasis>& basis) {
  const auto dim = static_cast<Eigen::Index>(basis->size());
  Matrix out(dim, dim);
  ManyBodyState unit = zero_state(basis);
  for (Eigen::Index j = 0; j < dim; ++j) {
    unit.amp.setZero();
    unit.amp(j) = 1.0;
    out.col(j) = dgamma2_apply_kernel(B, unit).amp;
  }
  return out;
}

// H = nu + dGamma(h) + (lambda/2) dGamma2(V) assembled on the occupation
// basis with fermionic signs.
inline Eigen::SparseMatrix<Complex> build_many_body_hamiltonian(
    const FiniteBasisModel& model, const std::shared_ptr<const FockBasis>& basis) {
  require(model.d == basis->d, "model and basis dimension mismatch");
  const auto dim = static_cast<Eigen::Index>(basis->size());
  std::vector<Eigen::Triplet<Complex>> trips;
  std::vector<int> occ;

  const bool kernel_diag = model.V.is_kernel_diagonal();
  const bool zero_v = model.V.is_zero() || model.lambda == 0.0;

  for (std::size_t j = 0; j < basis->size(); ++j) {
    const std::uint64_t mask = basis->states[j];
    detail::occupied_modes(mask, occ);
    const auto col = static_cast<Eigen::Index>(j);

    Complex diag = model.nu;

    // one-body term
    for (int q : occ) {
      std::uint64_t m1 = mask;
      const int s1 = detail::annihilate(m1, q);
      for (int p = 0; p < model.d; ++p) {
        if (model.h(p, q) == Complex(0.0, 0.0)) continue;
        std::uint64_t m2 = m1;
        const int s2 = detail::create(m2, p);
        if (s2 == 0) continue;
        const Complex val = model.h(p, q) * static_cast<double>(s1 * s2);
        if (m2 == mask) {
          diag += val;
        } else {
          trips.emplace_back(basis->index_of(m2), col, val);
        }
      }
    }

    // interaction
    if (!zero_v) {
      if (kernel_diag) {
        const RealMatrix& v = model.V.kernel();
        double w = 0.0;
        for (std::size_t a = 0; a < occ.size(); ++a)
          for (std::size_t b = a + 1; b < occ.size(); ++b) w += v(occ[a], occ[b]);
        diag += model.lambda * w;
      } else {
        for (int r : occ) {
          std::uint64_t m1 = mask;
          const int s1 = detail::annihilate(m1, r);
          for (int s : occ) {
            if (s == r) continue;
            std::uint64_t m2 = m1;
            const int s2 = detail::annihilate(m2, s);
            for (int q = 0; q < model.d; ++q) {
              std::uint64_t m3 = m2;
              const int s3 = detail::create(m3, q);
              if (s3 == 0) continue;
              for (int p = 0; p < model.d; ++p) {
                const Complex b = model.V(p, q, r, s);
                if (b == Complex(0.0, 0.0)) continue;
                std::uint64_t m4 = m3;
                const int s4 = detail::create(m4, p);
                if (s4 == 0) continue;
                const Complex val =
                    0.5 * model.lambda * b * static_cast<double>(s1 * s2 * s3 * s4);
                if (m4 == mask) {
                  diag += val;
                } else {
                  trips.emplace_back(basis->index_of(m4), col, val);
                }
              }
            }
          }
        }
      }
    }

    trips.emplace_back(col, col, diag);
  }

  Eigen::SparseMatrix<Complex> H(dim, dim);
  H.setFromTriplets(trips.begin(), trips.end());
  H.makeCompressed();
  return H;
}

// Determinantal state of N orthonormal orbitals (columns). Amplitudes are the
// N x N minors of the orbital matrix.
inline ManyBodyState slater_state(const Matrix& orbitals,
                                  const std::shared_ptr<const FockBasis>& basis) {
  const int d = basis->d;
  const int N = basis->N;
  require(orbitals.rows() == d && orbitals.cols() == N,
          "orbital matrix must be d x N");
  const Matrix gram = orbitals.adjoint() * orbitals;
  const double defect = (gram - Matrix::Identity(N, N)).norm();
  require(defect <= 1e-10,
          "orbitals are not orthonormal (Gram defect " + std::to_string(defect) + ")");

  ManyBodyState out = zero_state(basis);
  std::vector<int> occ;
  Matrix minor(N, N);
  for (std::size_t i = 0; i < basis->size(); ++i) {
    detail::occupied_modes(basis->states[i], occ);
    for (int a = 0; a < N; ++a) minor.row(a) = orbitals.row(occ[a]);
    out.amp(static_cast<Eigen::Index>(i)) = (N == 0) ? Complex(1.0, 0.0) : minor.determinant();
  }
  return out;
}

// One-particle density gamma[p,q] = <psi| a+_q a_p |psi>, so that
// Tr[gamma A] = <psi, dGamma(A) psi> and Tr[gamma] = N.
inline Matrix reduced_density1(const ManyBodyState& psi) {
  const FockBasis& basis = *psi.basis;
  Matrix gamma = Matrix::Zero(basis.d, basis.d);
  std::vector<int> occ;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Complex c = psi.amp(static_cast<Eigen::Index>(i));
    if (c == Complex(0.0, 0.0)) continue;
    const std::uint64_t mask = basis.states[i];
    detail::occupied_modes(mask, occ);
    for (int p : occ) {
      std::uint64_t m1 = mask;
      const int s1 = detail::annihilate(m1, p);
      for (int q = 0; q < basis.d; ++q) {
        std::uint64_t m2 = m1;
        const int s2 = detail::create(m2, q);
        if (s2 == 0) continue;
        gamma(p, q) += std::conj(psi.amp(basis.index_of(m2))) *
                       static_cast<double>(s1 * s2) * c;
      }
    }
  }
  return gamma;
}

inline Matrix reduced_density2(const ManyBodyState& psi);

// k-particle reduced density, k = 1 (d x d) or k = 2 (wedge-pair basis).
inline Matrix reduced_density(const ManyBodyState& psi, int k) {
  require(k == 1 || k == 2, "reduced density supports k in {1, 2}");
  return (k == 1) ? reduced_density1(psi) : reduced_density2(psi);
}

// Ordered list of mode pairs (r < s) indexing the antisymmetric two-particle
// space of dimension C(d,2).
inline std::vector<std::pair<int, int>> pair_basis(int d) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(binomial(d, 2));
  for (int r = 0; r < d; ++r)
    for (int s = r + 1; s < d; ++s) pairs.emplace_back(r, s);
  return pairs;
}

// Two-particle density on the wedge-pair basis, normalized to
// Tr gamma2 = N(N-1): gamma2[(p<q),(r<s)] = 2 <psi| a+_p a+_q a_s a_r |psi>.
inline Matrix reduced_density2(const ManyBodyState& psi) {
  const FockBasis& basis = *psi.basis;
  const auto pairs = pair_basis(basis.d);
  std::vector<int> pair_index(static_cast<std::size_t>(basis.d) * basis.d, -1);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    pair_index[pairs[k].first * basis.d + pairs[k].second] = static_cast<int>(k);
  }

  const auto np = static_cast<Eigen::Index>(pairs.size());
  Matrix gamma2 = Matrix::Zero(np, np);
  std::vector<int> occ;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Complex c = psi.amp(static_cast<Eigen::Index>(i));
    if (c == Complex(0.0, 0.0)) continue;
    const std::uint64_t mask = basis.states[i];
    detail::occupied_modes(mask, occ);
    for (std::size_t a = 0; a < occ.size(); ++a) {
      for (std::size_t b = a + 1; b < occ.size(); ++b) {
        const int r = occ[a], s = occ[b];
        std::uint64_t m1 = mask;
        const int s1 = detail::annihilate(m1, r);
        std::uint64_t m2 = m1;
        const int s2 = detail::annihilate(m2, s);
        const int ket = pair_index[r * basis.d + s];
        for (int p = 0; p < basis.d; ++p) {
          const std::uint64_t bp = std::uint64_t{1} << p;
          if (m2 & bp) continue;
          for (int q = p + 1; q < basis.d; ++q) {
            const std::uint64_t bq = std::uint64_t{1} << q;
            if (m2 & bq) continue;
            std::uint64_t m3 = m2;
            const int s3 = detail::create(m3, q);
            std::uint64_t m4 = m3;
            const int s4 = detail::create(m4, p);
            const int bra = pair_index[p * basis.d + q];
            // Tr[gamma2 |p^q><r^s|] = 2 <a+_p a+_q a_s a_r> puts the created
            // pair in the column slot.
            gamma2(ket, bra) += 2.0 * std::conj(psi.amp(basis.index_of(m4))) *
                                static_cast<double>(s1 * s2 * s3 * s4) * c;
          }
        }
      }
    }
  }
  return gamma2;
}

}  // namespace evap
