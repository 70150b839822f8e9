#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evap/common.hpp"

namespace evap {

// Two-body matrix elements V[p,q,r,s] = <pq| v |rs> on the full (not
// antisymmetrized) product space. Lattice models with a translation-invariant
// kernel are stored compressed: V[p,q,r,s] = v(x_p - x_q) delta_pr delta_qs.
class TwoBodyTensor {
 public:
  TwoBodyTensor() = default;

  static TwoBodyTensor zero(int d) {
    TwoBodyTensor t;
    t.d_ = d;
    t.kind_ = Kind::Zero;
    return t;
  }

  static TwoBodyTensor dense(int d, std::vector<Complex> values) {
    require(static_cast<std::uint64_t>(values.size()) ==
                static_cast<std::uint64_t>(d) * d * d * d,
            "TwoBodyTensor::dense: value count != d^4");
    TwoBodyTensor t;
    t.d_ = d;
    t.kind_ = Kind::Dense;
    t.values_ = std::move(values);
    return t;
  }

  static TwoBodyTensor kernel_diagonal(RealMatrix kernel) {
    require(kernel.rows() == kernel.cols(), "kernel matrix must be square");
    require((kernel - kernel.transpose()).norm() <= 1e-12 * std::max(1.0, kernel.norm()),
            "kernel matrix must be symmetric");
    TwoBodyTensor t;
    t.d_ = static_cast<int>(kernel.rows());
    t.kind_ = Kind::KernelDiagonal;
    t.kernel_ = std::move(kernel);
    return t;
  }

  int dim() const { return d_; }
  bool is_zero() const { return kind_ == Kind::Zero; }
  bool is_kernel_diagonal() const { return kind_ == Kind::KernelDiagonal; }

  Complex operator()(int p, int q, int r, int s) const {
    switch (kind_) {
      case Kind::Zero:
        return Complex(0.0, 0.0);
      case Kind::KernelDiagonal:
        return (p == r && q == s) ? Complex(kernel_(p, q), 0.0) : Complex(0.0, 0.0);
      case Kind::Dense:
      default:
        return values_[idx(p, q, r, s)];
    }
  }

  const RealMatrix& kernel() const {
    require(kind_ == Kind::KernelDiagonal, "tensor has no kernel form");
    return kernel_;
  }

  // Dense copy, used by the basis-rotation paths.
  std::vector<Complex> to_dense() const {
    std::vector<Complex> out(static_cast<std::size_t>(d_) * d_ * d_ * d_,
                             Complex(0.0, 0.0));
    if (kind_ == Kind::Dense) return values_;
    if (kind_ == Kind::KernelDiagonal) {
      for (int p = 0; p < d_; ++p)
        for (int q = 0; q < d_; ++q) out[idx(p, q, p, q)] = kernel_(p, q);
    }
    return out;
  }

  // max |V[p,q,r,s] - V[q,p,s,r]| and max |V[p,q,r,s] - conj(V[r,s,p,q])|.
  std::pair<double, double> symmetry_defects() const {
    if (kind_ != Kind::Dense) return {0.0, 0.0};
    double ex = 0.0, herm = 0.0;
    for (int p = 0; p < d_; ++p)
      for (int q = 0; q < d_; ++q)
        for (int r = 0; r < d_; ++r)
          for (int s = 0; s < d_; ++s) {
            const Complex v = values_[idx(p, q, r, s)];
            ex = std::max(ex, std::abs(v - values_[idx(q, p, s, r)]));
            herm = std::max(herm, std::abs(v - std::conj(values_[idx(r, s, p, q)])));
          }
    return {ex, herm};
  }

  double max_abs() const {
    double m = 0.0;
    if (kind_ == Kind::Dense) {
      for (const Complex& v : values_) m = std::max(m, std::abs(v));
    } else if (kind_ == Kind::KernelDiagonal) {
      m = kernel_.cwiseAbs().maxCoeff();
    }
    return m;
  }

 private:
  enum class Kind { Zero, Dense, KernelDiagonal };

  std::size_t idx(int p, int q, int r, int s) const {
    return ((static_cast<std::size_t>(p) * d_ + q) * d_ + r) * d_ + s;
  }

  int d_ = 0;
  Kind kind_ = Kind::Zero;
  std::vector<Complex> values_;
  RealMatrix kernel_;
};

struct ModelMeta {
  std::string name;
  std::string potential = "none";
  std::string boundary = "hard-wall";
  double spacing = 1.0;
  double softening = 1.0;
  double kinetic_prefactor = 0.5;
  // Semi-bound of the interaction kernel: min over the evaluation grid.
  double semi_bound_mu = 0.0;
};

struct FiniteBasisModel {
  int d = 0;
  Matrix h;        // one-body matrix, kinetic + external
  Matrix kinetic;  // kinetic part alone (K tracker, Lieb-Thirring chains)
  TwoBodyTensor V;
  double lambda = 0.0;
  double nu = 0.0;
  ModelMeta meta;
  // Lattice models expose -i d/dx as a central-difference stencil.
  std::optional<Matrix> momentum;
  std::optional<RealVector> sites;

  void validate() const {
    require(d >= 1, "model dimension must be positive");
    require(h.rows() == d && h.cols() == d, "one-body matrix has wrong shape");
    require(is_hermitian(h), "one-body matrix is not Hermitian");
    require(V.dim() == d || V.is_zero(), "two-body tensor dimension mismatch");
    require(lambda >= 0.0, "coupling must be nonnegative");
    const auto [ex, herm] = V.symmetry_defects();
    const double scale = std::max(1.0, V.max_abs());
    require(ex <= 1e-12 * scale, "two-body tensor breaks particle-exchange symmetry");
    require(herm <= 1e-12 * scale, "two-body tensor is not Hermitian");
  }
};

// Named radial kernels for lattice interactions. `softening` regularizes the
// singular ones at zero separation.
struct RadialKernelSpec {
  std::string kind = "none";  // none | soft-coulomb | yukawa | gaussian
  double softening = 1.0;

  bool singular_at_origin() const { return kind == "soft-coulomb" || kind == "yukawa"; }

  double operator()(double x) const {
    const double a = softening;
    if (kind == "none") return 0.0;
    if (kind == "soft-coulomb") return 1.0 / std::sqrt(x * x + a * a);
    if (kind == "yukawa") {
      const double r = std::sqrt(x * x + a * a);
      return std::exp(-r) / r;
    }
    if (kind == "gaussian") return std::exp(-x * x / (2.0 * a * a));
    throw Error("unknown radial kernel: " + kind);
  }
};

struct LatticeModelSpec {
  int d = 1;
  double spacing = 1.0;
  RadialKernelSpec potential;
  double lambda = 0.0;
  double nu = 0.0;
  std::vector<double> external;          // per-site potential, empty = free
  std::string boundary = "hard-wall";    // hard-wall | periodic
  double kinetic_prefactor = 0.5;        // a in -a d^2/dx^2
  std::string name = "lattice";
};

// 1D lattice with second-order central-difference kinetic stencil and a
// kernel-diagonal two-body interaction evaluated at grid separations.
inline FiniteBasisModel build_lattice_model(const LatticeModelSpec& spec) {
  require(spec.d >= 1, "lattice dimension must be >= 1");
  require(spec.spacing > 0.0, "lattice spacing must be positive");
  require(spec.lambda >= 0.0, "coupling must be nonnegative");
  require(spec.boundary == "hard-wall" || spec.boundary == "periodic",
          "boundary must be hard-wall or periodic");
  if (spec.potential.singular_at_origin()) {
    require(spec.potential.softening > 0.0,
            "singular kernel requires positive softening for coincident grid points");
  }
  if (!spec.external.empty()) {
    require(static_cast<int>(spec.external.size()) == spec.d,
            "external potential must list one value per site");
  }

  const int d = spec.d;
  const double h2 = spec.spacing * spec.spacing;
  const double t = spec.kinetic_prefactor / h2;

  Matrix kin = Matrix::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    kin(j, j) = 2.0 * t;
    if (j + 1 < d) {
      kin(j, j + 1) = -t;
      kin(j + 1, j) = -t;
    }
  }
  if (spec.boundary == "periodic" && d > 2) {
    kin(0, d - 1) = -t;
    kin(d - 1, 0) = -t;
  }

  Matrix one_body = kin;
  for (int j = 0; j < d && !spec.external.empty(); ++j) {
    one_body(j, j) += spec.external[j];
  }

  RealVector sites(d);
  for (int j = 0; j < d; ++j) sites(j) = j * spec.spacing;

  FiniteBasisModel model;
  model.d = d;
  model.h = one_body;
  model.kinetic = kin;
  model.lambda = spec.lambda;
  model.nu = spec.nu;
  model.sites = sites;

  double mu = 0.0;
  if (spec.potential.kind == "none") {
    model.V = TwoBodyTensor::zero(d);
  } else {
    RealMatrix kernel(d, d);
    bool first = true;
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q) {
        double dx = sites(p) - sites(q);
        if (spec.boundary == "periodic") {
          const double L = d * spec.spacing;
          dx = dx - L * std::round(dx / L);
        }
        kernel(p, q) = spec.potential(dx);
        mu = first ? kernel(p, q) : std::min(mu, kernel(p, q));
        first = false;
      }
    model.V = TwoBodyTensor::kernel_diagonal(std::move(kernel));
  }

  // -i d/dx, central differences; antisymmetric stencil keeps it Hermitian.
  Matrix mom = Matrix::Zero(d, d);
  const Complex mi(0.0, -1.0);
  for (int j = 0; j + 1 < d; ++j) {
    mom(j, j + 1) = mi / (2.0 * spec.spacing);
    mom(j + 1, j) = -mi / (2.0 * spec.spacing);
  }
  if (spec.boundary == "periodic" && d > 2) {
    mom(d - 1, 0) = mi / (2.0 * spec.spacing);
    mom(0, d - 1) = -mi / (2.0 * spec.spacing);
  }
  model.momentum = mom;

  model.meta.name = spec.name;
  model.meta.potential = spec.potential.kind;
  model.meta.boundary = spec.boundary;
  model.meta.spacing = spec.spacing;
  model.meta.softening = spec.potential.softening;
  model.meta.kinetic_prefactor = spec.kinetic_prefactor;
  model.meta.semi_bound_mu = mu;

  model.validate();
  return model;
}

struct ScalingPreset {
  std::string kind;
  int N = 1;
  double lambda = 0.0;
  double kinetic_prefactor = 0.5;
};

// lambda and kinetic prefactor for the standard mean-field scalings.
inline ScalingPreset apply_scaling_preset(const std::string& kind, int N) {
  require(N >= 1, "particle number must be >= 1");
  ScalingPreset p;
  p.kind = kind;
  p.N = N;
  if (kind == "large-volume") {
    p.lambda = std::pow(static_cast<double>(N), -2.0 / 3.0);
    p.kinetic_prefactor = 0.5;
  } else if (kind == "semi-classical") {
    p.lambda = std::pow(static_cast<double>(N), -2.0 / 3.0);
    p.kinetic_prefactor = 0.5 / std::cbrt(static_cast<double>(N));
  } else if (kind == "inverse-N") {
    p.lambda = 1.0 / static_cast<double>(N);
    p.kinetic_prefactor = 0.5;
  } else {
    throw Error("unknown scaling preset: " + kind);
  }
  return p;
}

}  // namespace evap
