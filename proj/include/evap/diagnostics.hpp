#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "evap/common.hpp"
#include "evap/counting.hpp"
#include "evap/fock.hpp"
#include "evap/model.hpp"
#include "evap/tdhf.hpp"

namespace evap {

// (trace norm, Hilbert-Schmidt norm) of the Hermitian difference gamma - p.
inline std::pair<double, double> trace_distance(const Matrix& gamma, const Matrix& p) {
  require(gamma.rows() == p.rows() && gamma.cols() == p.cols(),
          "trace_distance: dimension mismatch");
  const Matrix diff = gamma - p;
  require(hermiticity_defect(diff) <= 1e-10 * std::max(1.0, diff.norm()),
          "trace_distance: difference is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff);
  double tn = 0.0, hs2 = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double ev = es.eigenvalues()(k);
    tn += std::abs(ev);
    hs2 += ev * ev;
  }
  return {tn, std::sqrt(hs2)};
}

// ---------------------------------------------------------------------------
// Degree-of-evaporation property audit
// ---------------------------------------------------------------------------

struct EvaporationAudit {
  double s_g = 0.0;
  double s_id = 0.0;
  double trace_dist = 0.0;
  double hs_dist = 0.0;
  // signed slacks, nonnegative when the inequality holds
  double lower_bound_slack = 0.0;   // S_g - inf g
  double upper_bound_slack = 0.0;   // sup g - S_g
  double hs_slack = 0.0;            // 2 S_Id - ||gamma - p||_HS^2
  double trace_slack = 0.0;         // sqrt(8 S_g / N) - (1/N)||gamma - p||_1
  bool trace_slack_applicable = false;  // needs g(0) = 0 and g >= Id
  double reverse_slack = 0.0;       // sup|g(x)/x| ||gamma - p||_1 - S_g
  // order preservation and linearity against a second weight
  double order_slack = 0.0;         // S_gmax - S_gmin
  double linearity_defect = 0.0;

  double min_slack() const {
    double m = std::min({lower_bound_slack, upper_bound_slack, hs_slack,
                         reverse_slack, order_slack});
    if (trace_slack_applicable) m = std::min(m, trace_slack);
    return m;
  }
};

inline EvaporationAudit evaporation_properties_audit(const ManyBodyState& psi,
                                                     const SlaterProjector& proj,
                                                     const WeightFunction& g,
                                                     const WeightFunction& g_other) {
  const int N = psi.basis->N;
  const CountingDecomposition dec = counting_components(psi, proj);

  EvaporationAudit audit;
  audit.s_g = evaporation_degree(dec, g);
  audit.s_id = evaporation_degree(dec, WeightFunction::identity(N));

  const Matrix gamma = reduced_density1(psi);
  std::tie(audit.trace_dist, audit.hs_dist) = trace_distance(gamma, proj.p);

  double inf_g = g(0), sup_g = g(0);
  for (int m = 0; m <= N; ++m) {
    inf_g = std::min(inf_g, g(m));
    sup_g = std::max(sup_g, g(m));
  }
  audit.lower_bound_slack = audit.s_g - inf_g;
  audit.upper_bound_slack = sup_g - audit.s_g;
  audit.hs_slack = 2.0 * audit.s_id - audit.hs_dist * audit.hs_dist;

  bool dominates_identity = g(0) == 0.0;
  for (int m = 1; m <= N; ++m) {
    if (g(m) < m - 1e-12) dominates_identity = false;
  }
  audit.trace_slack_applicable = dominates_identity && N >= 1;
  if (audit.trace_slack_applicable) {
    audit.trace_slack =
        std::sqrt(8.0 * audit.s_g / N) - audit.trace_dist / N;
  } else {
    audit.trace_slack = std::numeric_limits<double>::quiet_NaN();
  }

  double sup_ratio = 0.0;
  for (int m = 1; m <= N; ++m) sup_ratio = std::max(sup_ratio, std::abs(g(m) / m));
  audit.reverse_slack = sup_ratio * audit.trace_dist - audit.s_g;

  WeightFunction gmin, gmax, gmix;
  gmin.values.resize(N + 1);
  gmax.values.resize(N + 1);
  gmix.values.resize(N + 1);
  const double a = 0.7, b = 1.3;
  for (int m = 0; m <= N; ++m) {
    gmin.values[m] = std::min(g(m), g_other(m));
    gmax.values[m] = std::max(g(m), g_other(m));
    gmix.values[m] = a * g(m) + b * g_other(m);
  }
  audit.order_slack = evaporation_degree(dec, gmax) - evaporation_degree(dec, gmin);
  audit.linearity_defect =
      std::abs(evaporation_degree(dec, gmix) - a * audit.s_g -
               b * evaporation_degree(dec, g_other));
  return audit;
}

// ---------------------------------------------------------------------------
// Fermionic quadratic-form bound, commutation relation, weighted-state bounds
// ---------------------------------------------------------------------------

// ||A||_1 - lambda_max(dGamma(A)) on the N-particle sector.
inline double fermionic_form_bound_slack(const Matrix& A,
                                         const std::shared_ptr<const FockBasis>& basis) {
  require(is_hermitian(A, 1e-10), "trace-class bound needs self-adjoint A");
  Eigen::SelfAdjointEigenSolver<Matrix> one(A);
  const double trace_norm = one.eigenvalues().cwiseAbs().sum();
  const Matrix big = dgamma_matrix(A, basis);
  Eigen::SelfAdjointEigenSolver<Matrix> many(big);
  return trace_norm - many.eigenvalues().maxCoeff();
}

// dGamma^(M)(P_j h P_k) g^ - (tau_{j-k} g)^ dGamma^(M)(P_j h P_k) as dense
// matrices, with p the canonical projector onto the first N modes. Returns
// the Frobenius norm of the defect.
inline double commutation_relation_defect(const std::shared_ptr<const FockBasis>& basis,
                                          const Matrix& h_small, const WeightFunction& g,
                                          int M, int j, int k) {
  const int d = basis->d;
  const int N = basis->N;
  require(M == 1 || M == 2, "commutation audit supports M in {1,2}");
  require(0 <= j && j <= M && 0 <= k && k <= M, "sector indices out of range");

  auto sector1 = [N](int mode) { return mode < N ? 0 : 1; };

  Matrix op;
  if (M == 1) {
    require(h_small.rows() == d && h_small.cols() == d, "h^{(1)} must be d x d");
    Matrix masked = Matrix::Zero(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        if (sector1(r) == j && sector1(c) == k) masked(r, c) = h_small(r, c);
      }
    op = dgamma_matrix(masked, basis);
  } else {
    require(h_small.rows() == d * d && h_small.cols() == d * d,
            "h^{(2)} must be d^2 x d^2");
    auto kernel = [&](int p, int q, int r, int s) -> Complex {
      if (sector1(p) + sector1(q) != j || sector1(r) + sector1(s) != k) {
        return Complex(0.0, 0.0);
      }
      return h_small(p * d + q, r * d + s);
    };
    op = dgamma2_matrix(kernel, basis);
  }

  const std::uint64_t qmask =
      ((std::uint64_t{1} << d) - 1) ^ ((std::uint64_t{1} << N) - 1);
  const auto dim = static_cast<Eigen::Index>(basis->size());
  Vector gdiag(dim), gshift(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const int m = std::popcount(basis->states[static_cast<std::size_t>(i)] & qmask);
    gdiag(i) = g(m);
    gshift(i) = g(m - (j - k));
  }
  const Matrix lhs = op * gdiag.asDiagonal();
  const Matrix rhs = gshift.asDiagonal() * op;
  return (lhs - rhs).norm();
}

struct WeightedStateBounds {
  int j = 0;
  double trace = 0.0;       // Tr rho^{[j]}
  double count = 0.0;       // Tr[dGamma(q) rho^{[j]}]
  double pair_count = 0.0;  // Tr[dGamma2(q x q) rho^{[j]}]
  double trace_slack = 0.0;
  double count_slack = 0.0;
  double pair_slack = 0.0;

  double min_slack() const { return std::min({trace_slack, count_slack, pair_slack}); }
};

// The three g_theta inequalities for j in {-2,-1,1,2}. All quantities are
// diagonal in the adapted basis, where dGamma(q) counts modes outside ran(p).
inline std::vector<WeightedStateBounds> weighted_state_bounds_audit(
    const ManyBodyState& psi, const SlaterProjector& proj, double theta) {
  const int N = psi.basis->N;
  const WeightFunction g = weight_g_theta(N, theta);
  const CountingDecomposition dec = counting_components(psi, proj);
  const double s_gtheta = evaporation_degree(dec, g);
  const double n_pow_1mt = std::pow(static_cast<double>(N), 1.0 - theta);
  const double n_pow_t = std::pow(static_cast<double>(N), theta);

  std::vector<WeightedStateBounds> out;
  for (int j : {-2, -1, 1, 2}) {
    const Vector w = weighted_state(dec, g, j);
    WeightedStateBounds b;
    b.j = j;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double m = dec.sector[static_cast<std::size_t>(i)];
      const double w2 = std::norm(w(i));
      b.trace += w2;
      b.count += m * w2;
      b.pair_count += m * (m - 1.0) * w2;
    }
    const double aj = std::abs(j);
    b.trace_slack = aj * n_pow_1mt - b.trace;
    b.count_slack = aj * (aj + 1.0) * s_gtheta - b.count;
    b.pair_slack = aj * (aj + 1.0) * (aj + 1.0) * n_pow_t * s_gtheta - b.pair_count;
    out.push_back(b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gronwall decomposition dS_g/dt = lambda (T1 + T2 + T3)
// ---------------------------------------------------------------------------

struct GronwallTerms {
  double T1 = 0.0;
  double T2 = 0.0;
  double T3 = 0.0;

  double sum() const { return T1 + T2 + T3; }
};

namespace detail {

// V rotated into the adapted frame: Vt[a,b,c,d] =
// sum conj(U[p,a]) conj(U[q,b]) V[p,q,r,s] U[r,c] U[s,d]; four O(d^5) passes.
inline std::vector<Complex> rotate_two_body(const TwoBodyTensor& V, const Matrix& U) {
  const int d = static_cast<int>(U.rows());
  auto at = [d](std::vector<Complex>& t, int a, int b, int c, int e) -> Complex& {
    return t[((static_cast<std::size_t>(a) * d + b) * d + c) * d + e];
  };
  std::vector<Complex> cur = V.to_dense();
  std::vector<Complex> next(cur.size());

  // contract first index with conj(U)
  std::fill(next.begin(), next.end(), Complex(0.0, 0.0));
  for (int p = 0; p < d; ++p)
    for (int a = 0; a < d; ++a) {
      const Complex u = std::conj(U(p, a));
      if (u == Complex(0.0, 0.0)) continue;
      for (int q = 0; q < d; ++q)
        for (int r = 0; r < d; ++r)
          for (int s = 0; s < d; ++s) at(next, a, q, r, s) += u * at(cur, p, q, r, s);
    }
  cur.swap(next);

  std::fill(next.begin(), next.end(), Complex(0.0, 0.0));
  for (int q = 0; q < d; ++q)
    for (int b = 0; b < d; ++b) {
      const Complex u = std::conj(U(q, b));
      if (u == Complex(0.0, 0.0)) continue;
      for (int a = 0; a < d; ++a)
        for (int r = 0; r < d; ++r)
          for (int s = 0; s < d; ++s) at(next, a, b, r, s) += u * at(cur, a, q, r, s);
    }
  cur.swap(next);

  std::fill(next.begin(), next.end(), Complex(0.0, 0.0));
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      const Complex u = U(r, c);
      if (u == Complex(0.0, 0.0)) continue;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          for (int s = 0; s < d; ++s) at(next, a, b, c, s) += u * at(cur, a, b, r, s);
    }
  cur.swap(next);

  std::fill(next.begin(), next.end(), Complex(0.0, 0.0));
  for (int s = 0; s < d; ++s)
    for (int e = 0; e < d; ++e) {
      const Complex u = U(s, e);
      if (u == Complex(0.0, 0.0)) continue;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          for (int c = 0; c < d; ++c) at(next, a, b, c, e) += u * at(cur, a, b, c, s);
    }
  cur.swap(next);
  return cur;
}

}  // namespace detail

// The three lambda-stripped terms of Prop. "dS_g/dt" in projection form,
// evaluated in the adapted frame where p = diag(1_N, 0):
//   T1 = Im Tr[(dG2(P1 v P0) - 2 dG(P1 v_HF P0)) rho^{[-1,1]}]
//   T2 = Im Tr[dG2(P2 v P0) rho^{[-2,2]}]
//   T3 = Im Tr[dG2(P2 v P1) rho^{[-1,1]}]
// with rho^{[-j,j]} = |psi^{[-j]}><psi^{[j]}|.
// `include_exchange` selects the mean field the reference dynamics uses: the
// identity dS_g/dt = lambda (T1+T2+T3) holds with the matching one-body field
// in T1, for full TDHF and for the Hartree-only comparison alike.
inline GronwallTerms gronwall_decomposition(const ManyBodyState& psi,
                                            const SlaterProjector& proj,
                                            const FiniteBasisModel& model,
                                            const WeightFunction& g,
                                            bool include_exchange = true) {
  require(g.is_monotone(), "Gronwall decomposition needs a monotone weight");
  require(std::abs(psi.norm() - 1.0) <= 1e-8, "state must be normalized");
  const int d = model.d;
  const int N = psi.basis->N;
  require(proj.dim() == d && psi.basis->d == d, "dimension mismatch");

  GronwallTerms out;
  if (model.V.is_zero() || N == d || N == 0) return out;

  const CountingDecomposition dec = counting_components(psi, proj);
  const std::vector<Complex> Vt = detail::rotate_two_body(model.V, dec.adapted);
  auto V = [&](int p, int q, int r, int s) -> Complex {
    return Vt[((static_cast<std::size_t>(p) * d + q) * d + r) * d + s];
  };
  auto sec = [N](int mode) { return mode < N ? 0 : 1; };

  // lambda-stripped mean field of the canonical projector in the adapted frame
  Matrix vhf = Matrix::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      Complex acc(0.0, 0.0);
      for (int c = 0; c < N; ++c) {
        acc += V(a, c, b, c);
        if (include_exchange) acc -= V(a, c, c, b);
      }
      vhf(a, b) = acc;
    }
  Matrix qvp = Matrix::Zero(d, d);  // P1 v_HF P0
  for (int a = N; a < d; ++a)
    for (int b = 0; b < N; ++b) qvp(a, b) = vhf(a, b);

  ManyBodyState w1{psi.basis, weighted_state(dec, g, 1)};
  ManyBodyState wm1{psi.basis, weighted_state(dec, g, -1)};
  ManyBodyState w2{psi.basis, weighted_state(dec, g, 2)};
  ManyBodyState wm2{psi.basis, weighted_state(dec, g, -2)};

  auto masked = [&](int jrow, int kcol) {
    return [&, jrow, kcol](int p, int q, int r, int s) -> Complex {
      if (sec(p) + sec(q) != jrow || sec(r) + sec(s) != kcol) return Complex(0.0, 0.0);
      return V(p, q, r, s);
    };
  };

  const Complex t1a = inner(w1, dgamma2_apply_kernel(masked(1, 0), wm1));
  const Complex t1b = inner(w1, dgamma_apply(qvp, wm1));
  out.T1 = std::imag(t1a - 2.0 * t1b);
  out.T2 = std::imag(inner(w2, dgamma2_apply_kernel(masked(2, 0), wm2)));
  out.T3 = std::imag(inner(w1, dgamma2_apply_kernel(masked(2, 1), wm1)));
  return out;
}

// ---------------------------------------------------------------------------
// Term bounds (Props. on A_t, B_t, C_t) and the theorem right-hand sides
// ---------------------------------------------------------------------------

// Paper coefficients, kept as spelled formulas.
inline double coeff_a_bound() { return std::pow(5.0, -5.0 / 6.0) * 72.0 * std::cbrt(M_PI); }
inline double coeff_b_bound() { return std::cbrt(2.0) * std::pow(M_PI, 2.0 / 3.0); }
inline double coeff_c_bound() { return 4.0 * std::sqrt(2.0); }

// Lattice-embedded density functionals used by the bound evaluators. `f` is
// the site occupancy (sums to N); the embedding treats f/spacing as the
// density and spacing * sum as the integral.
struct LatticeDensityNorms {
  double l1 = 0.0;       // integral of f = N
  double l53 = 0.0;      // ||f||_{5/3}
  double vconv_max = 0.0;  // ||v^2 * f||_inf on the grid
  double vconv_l1 = 0.0;   // ||(v^2 * f) f||_1
};

inline LatticeDensityNorms lattice_density_norms(const FiniteBasisModel& model,
                                                 const Matrix& p) {
  LatticeDensityNorms out;
  const int d = model.d;
  const double h = model.meta.spacing;
  RealVector f(d);
  for (int j = 0; j < d; ++j) f(j) = std::max(0.0, p(j, j).real());
  out.l1 = f.sum();
  double acc53 = 0.0;
  for (int j = 0; j < d; ++j) acc53 += std::pow(f(j) / h, 5.0 / 3.0) * h;
  out.l53 = std::pow(acc53, 3.0 / 5.0);
  if (model.V.is_kernel_diagonal()) {
    const RealMatrix& v = model.V.kernel();
    for (int j = 0; j < d; ++j) {
      double u = 0.0;
      for (int k = 0; k < d; ++k) u += v(j, k) * v(j, k) * f(k);
      out.vconv_max = std::max(out.vconv_max, u);
      out.vconv_l1 += u * f(j);
    }
  }
  return out;
}

struct TermBoundsReport {
  double s_gtheta = 0.0;
  double T1 = 0.0, T2 = 0.0, T3 = 0.0;
  double a_rhs = 0.0, b_rhs = 0.0, c_rhs = 0.0;
  double f53_norm = 0.0;
  double vconv_max = 0.0;
  bool indicative = true;  // finite-basis non-Coulomb models: report only
  // structural note, not an assertion: of the three terms only the T2 bound
  // carries the additive N^{1-theta} summand
  std::string annotation =
      "only the T2 right-hand side carries the additive N^(1-theta) term";
};

// Evaluate the three right-hand sides with a supplied density profile; the
// report is indicative on lattice models (the theorem hypotheses concern 3D
// Coulomb), so it is never asserted against T1..T3.
inline TermBoundsReport term_bounds_audit(const ManyBodyState& psi,
                                          const SlaterProjector& proj,
                                          const FiniteBasisModel& model, double theta,
                                          const LatticeDensityNorms& density,
                                          bool include_exchange = true) {
  require(theta > 0.0 && theta <= 1.0, "theta out of range");
  require(density.l1 > 0.0, "term bounds need a density with mass N");
  const int N = psi.basis->N;
  TermBoundsReport rep;
  const WeightFunction g = weight_g_theta(N, theta);
  rep.s_gtheta = evaporation_degree(psi, proj, g);
  const GronwallTerms t = gronwall_decomposition(psi, proj, model, g, include_exchange);
  rep.T1 = t.T1;
  rep.T2 = t.T2;
  rep.T3 = t.T3;
  rep.f53_norm = density.l53;
  rep.vconv_max = density.vconv_max;

  const double n16 = std::pow(static_cast<double>(N), 1.0 / 6.0);
  const double f56 = std::pow(density.l53, 5.0 / 6.0);
  rep.a_rhs = coeff_a_bound() * n16 * f56 * rep.s_gtheta;
  rep.b_rhs = coeff_b_bound() * f56 * n16 *
              (6.0 * rep.s_gtheta + std::pow(static_cast<double>(N), 1.0 - theta));
  rep.c_rhs = coeff_c_bound() * std::sqrt(density.vconv_max) *
              std::pow(static_cast<double>(N), theta / 2.0) * rep.s_gtheta;
  return rep;
}

// ---------------------------------------------------------------------------
// Theorem right-hand-side evaluators
// ---------------------------------------------------------------------------

struct BoundInputs {
  double N = 1.0;
  double lambda = 0.0;
  double K = 0.0;
  double t = 0.0;
  double delta0 = 0.0;  // (1/N) ||gamma_0 - p_0||_1
  double S0 = 0.0;      // S_{g_{1/3}}(0)

  void validate() const {
    require(N >= 1.0 && lambda >= 0.0 && K >= 0.0 && t >= 0.0 && delta0 >= 0.0 &&
                S0 >= 0.0,
            "bound inputs must be nonnegative");
    require(delta0 <= 2.0, "delta0 exceeds the trace-distance cap 2");
  }
};

struct BoundValues {
  double growth_rate = 0.0;  // C = 30 lambda sqrt(K) N^{1/6}
  double main_rhs = 0.0;
  double s_rhs = 0.0;
  bool overflow = false;
};

inline BoundValues bound_evaluators(const BoundInputs& in) {
  in.validate();
  BoundValues out;
  out.growth_rate = 30.0 * in.lambda * std::sqrt(in.K) * std::pow(in.N, 1.0 / 6.0);
  const double ct = out.growth_rate * in.t;
  if (ct > 700.0) {
    out.overflow = true;
    out.main_rhs = std::numeric_limits<double>::infinity();
    out.s_rhs = std::numeric_limits<double>::infinity();
    return out;
  }
  const double ect = std::exp(ct);
  const double expm1ct = std::expm1(ct);
  out.main_rhs = std::sqrt(8.0) * std::sqrt(std::pow(in.N, 2.0 / 3.0) * in.delta0 * ect +
                                            std::pow(in.N, -1.0 / 3.0) * expm1ct);
  out.s_rhs = in.S0 * ect + std::pow(in.N, 2.0 / 3.0) * expm1ct;
  return out;
}

// ---------------------------------------------------------------------------
// Per-timestep record
// ---------------------------------------------------------------------------

struct DiagnosticsRecord {
  double t = 0.0;
  double S_g = 0.0;
  double dSdt_fd = 0.0;
  double T1 = 0.0, T2 = 0.0, T3 = 0.0;
  double trace_dist = 0.0;
  double hs_dist = 0.0;
  double K_hf = 0.0;
  double E_hf = 0.0;
  double E_exact = 0.0;
  double bound_main_rhs = 0.0;
  double bound_S_rhs = 0.0;
  double momentum_drift = 0.0;

  static const char* csv_header() {
    return "t,S_g,dSdt_fd,T1,T2,T3,trace_dist,hs_dist,K_hf,E_hf,E_exact,"
           "bound_main_rhs,bound_S_rhs,momentum_drift";
  }

  bool finite() const {
    for (double v : {t, S_g, dSdt_fd, T1, T2, T3, trace_dist, hs_dist, K_hf, E_hf,
                     E_exact, bound_main_rhs, bound_S_rhs, momentum_drift}) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  std::string csv_row() const {
    char buf[512];
    auto fmt = [](char* out, std::size_t cap, double v) {
      std::snprintf(out, cap, "%.17g", v);
    };
    std::string row;
    char num[40];
    const double vals[] = {t,  S_g,  dSdt_fd, T1,   T2,   T3,  trace_dist,
                           hs_dist, K_hf, E_hf, E_exact, bound_main_rhs,
                           bound_S_rhs, momentum_drift};
    (void)buf;
    for (std::size_t i = 0; i < std::size(vals); ++i) {
      fmt(num, sizeof(num), vals[i]);
      if (i) row += ',';
      row += num;
    }
    return row;
  }
};

}  // namespace evap
