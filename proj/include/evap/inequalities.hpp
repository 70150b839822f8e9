#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "evap/common.hpp"
#include "evap/model.hpp"
#include "evap/tdhf.hpp"

namespace evap {

inline double lieb_thirring_constant() {
  return 9.0 / 5.0 * std::pow(2.0 * M_PI, 2.0 / 3.0);
}

// Radial 3D density profiles with the closed-form moments the inequality
// suite needs. `gaussian` is the density of the normalized orbital
// exp(-a r^2): f(r) = (2a/pi)^{3/2} exp(-2 a r^2); `hydrogenic` the 1s
// density (Z^3/pi) exp(-2 Z r). Tabulated profiles integrate numerically.
struct RadialDensity {
  std::string kind = "gaussian";  // gaussian | hydrogenic | tabulated | zero
  double parameter = 1.0;         // a or Z
  double scale = 1.0;             // particle count multiplier
  std::vector<double> r;          // tabulated support
  std::vector<double> values;

  double mass() const {          // integral of f
    if (kind == "zero") return 0.0;
    if (kind == "gaussian" || kind == "hydrogenic") return scale;
    return moment([](double f) { return f; });
  }

  double integral_f53() const {
    if (kind == "zero") return 0.0;
    if (kind == "gaussian") {
      return scale_pow(5.0 / 3.0) * std::pow(2.0 * parameter / M_PI, 5.0 / 2.0) *
             std::pow(3.0 * M_PI / (10.0 * parameter), 3.0 / 2.0);
    }
    if (kind == "hydrogenic") {
      return scale_pow(5.0 / 3.0) * 0.216 * std::pow(M_PI, -2.0 / 3.0) * parameter *
             parameter;
    }
    return moment([](double f) { return std::pow(f, 5.0 / 3.0); });
  }

  double integral_f_over_r2() const {
    if (kind == "zero") return 0.0;
    if (kind == "gaussian") return scale * 4.0 * parameter;
    if (kind == "hydrogenic") return scale * 2.0 * parameter * parameter;
    double acc = 0.0;
    for (std::size_t i = 1; i < r.size(); ++i) {
      const double dr = r[i] - r[i - 1];
      acc += 2.0 * M_PI * (values[i] + values[i - 1]) * dr;  // 4 pi r^2 f / r^2
    }
    return acc;
  }

  // sup_x (v * f)(x) for v = 1/|x|; radially decreasing profiles peak at 0.
  double coulomb_convolution_max() const {
    if (kind == "zero") return 0.0;
    if (kind == "gaussian") return scale * 2.0 * std::sqrt(2.0 * parameter / M_PI);
    if (kind == "hydrogenic") return scale * parameter;
    double acc = 0.0;
    for (std::size_t i = 1; i < r.size(); ++i) {
      const double dr = r[i] - r[i - 1];
      const double rm = 0.5 * (r[i] + r[i - 1]);
      acc += 4.0 * M_PI * rm * 0.5 * (values[i] + values[i - 1]) * dr;
    }
    return acc;
  }

  void validate() const {
    if (kind == "zero") return;
    if (kind == "gaussian" || kind == "hydrogenic") {
      require(parameter > 0.0, "radial density parameter must be positive");
      require(scale >= 0.0, "density scale must be nonnegative");
      return;
    }
    require(kind == "tabulated", "unknown radial density kind: " + kind);
    require(r.size() == values.size() && r.size() >= 2, "tabulated density too short");
    const double m = mass();
    require(std::isfinite(m) && m > 0.0, "density is not normalizable");
  }

 private:
  double scale_pow(double p) const { return std::pow(scale, p); }

  template <typename F>
  double moment(F f_of_f) const {
    double acc = 0.0;
    for (std::size_t i = 1; i < r.size(); ++i) {
      const double dr = r[i] - r[i - 1];
      const double rm = 0.5 * (r[i] + r[i - 1]);
      const double fm = 0.5 * (values[i] + values[i - 1]);
      acc += 4.0 * M_PI * rm * rm * f_of_f(fm) * dr;
    }
    return acc;
  }
};

struct AnalyticInequalityReport {
  double kinetic = 0.0;
  double lt_left = 0.0, lt_right = 0.0, lt_slack = 0.0;
  double hardy_left = 0.0, hardy_right = 0.0, hardy_slack = 0.0;
  // || v * f ||_inf against the Young-Holder bound minimized over the split
  // radius R: (8 pi)^{2/5} R^{1/5} ||f||_{5/3} + R^{-1} ||f||_1.
  double vconv_exact = 0.0;
  double vconv_bound = 0.0;
  double vconv_slack = 0.0;
  double optimal_radius = 0.0;
};

inline AnalyticInequalityReport analytic_inequalities(const RadialDensity& density,
                                                      double kinetic) {
  density.validate();
  require(kinetic >= 0.0, "kinetic energy must be nonnegative");

  AnalyticInequalityReport rep;
  rep.kinetic = kinetic;
  rep.lt_left = lieb_thirring_constant() * density.integral_f53();
  rep.lt_right = kinetic;
  rep.lt_slack = rep.lt_right - rep.lt_left;
  rep.hardy_left = density.integral_f_over_r2();
  rep.hardy_right = 4.0 * kinetic;
  rep.hardy_slack = rep.hardy_right - rep.hardy_left;

  const double l1 = density.mass();
  const double l53 = std::pow(density.integral_f53(), 3.0 / 5.0);
  rep.vconv_exact = density.coulomb_convolution_max();
  if (l1 > 0.0 && l53 > 0.0) {
    const double c1 = std::pow(8.0 * M_PI, 2.0 / 5.0) * l53;
    rep.optimal_radius = std::pow(5.0 * l1 / c1, 5.0 / 6.0);
    rep.vconv_bound = c1 * std::pow(rep.optimal_radius, 0.2) + l1 / rep.optimal_radius;
  }
  rep.vconv_slack = rep.vconv_bound - rep.vconv_exact;
  return rep;
}

// ---------------------------------------------------------------------------
// Kinetic-energy bounds per scenario
// ---------------------------------------------------------------------------

struct EnergyBoundParams {
  double N = 1.0;
  double Z = 1.0;        // atom: nuclear charge; molecule: max charge
  double M = 1.0;        // molecule: nucleus count
  double alpha = 1.0;    // fine-structure constant / coupling
  double lambda = 0.0;   // attractive-free coupling
  double energy = 0.0;   // E(Phi_HF,0)
  double e_gs = std::numeric_limits<double>::quiet_NaN();  // optional
};

struct EnergyBoundReport {
  std::string scenario;
  double k_bound = 0.0;
  double neg_egs_bound = std::numeric_limits<double>::quiet_NaN();
  std::string formula;
};

// Default constant of the attractive-case chain K <= 2E + C lambda^2 N^{7/3},
// produced by this artifact's own Lieb-Thirring route.
inline double attractive_kinetic_constant() {
  const double c = 6.0 * std::pow(5.0, -5.0 / 6.0) * std::cbrt(8.0 * M_PI) /
                   std::sqrt(lieb_thirring_constant());
  return 0.25 * c * c;
}

inline std::string attractive_kinetic_constant_formula() {
  return "(6*5^(-5/6)*(8*pi)^(1/3))^2 / (4*C_LT)";
}

inline EnergyBoundReport energy_bounds(const std::string& scenario,
                                       const EnergyBoundParams& p) {
  EnergyBoundReport rep;
  rep.scenario = scenario;
  if (scenario == "atom") {
    require(p.N >= 1.0 && p.alpha > 0.0, "atom scenario needs N >= 1 and alpha > 0");
    rep.neg_egs_bound = 2.31 * p.alpha * p.alpha * std::pow(p.N, 7.0 / 3.0);
    rep.formula = "-E_gs <= 2.31 alpha^2 N^{7/3}; K <= -4 E_gs for E <= 0";
    if (!std::isnan(p.e_gs)) {
      require(p.e_gs <= 0.0, "general bound needs E_gs <= 0");
      require(p.energy >= p.e_gs, "energy below the ground state");
      const double root = std::sqrt(p.energy - p.e_gs) + std::sqrt(-p.e_gs);
      rep.k_bound = root * root;
    } else {
      rep.k_bound = 4.0 * rep.neg_egs_bound;
    }
  } else if (scenario == "molecule") {
    require(p.N >= 1.0 && p.M >= 1.0 && p.Z > 0.0 && p.alpha > 0.0,
            "molecule scenario needs N, M >= 1 and Z, alpha > 0");
    const double bracket = 1.0 + 2.16 * p.Z * std::cbrt(p.M / p.N);
    rep.neg_egs_bound = 0.231 * p.alpha * p.alpha * p.N * bracket * bracket;
    rep.formula = "-E_gs <= 0.231 alpha^2 N [1 + 2.16 Z (M/N)^{1/3}]^2";
    if (!std::isnan(p.e_gs)) {
      require(p.e_gs <= 0.0, "general bound needs E_gs <= 0");
      require(p.energy >= p.e_gs, "energy below the ground state");
      const double root = std::sqrt(p.energy - p.e_gs) + std::sqrt(-p.e_gs);
      rep.k_bound = root * root;
    } else {
      rep.k_bound = 4.0 * rep.neg_egs_bound;
    }
  } else if (scenario == "repulsive-free") {
    require(p.energy >= 0.0, "repulsive free energy is nonnegative");
    rep.k_bound = p.energy;
    rep.formula = "K <= E(Phi_HF,0)";
  } else if (scenario == "attractive-free") {
    require(p.N >= 1.0 && p.lambda >= 0.0, "attractive scenario needs N >= 1");
    rep.k_bound = 2.0 * p.energy + attractive_kinetic_constant() * p.lambda * p.lambda *
                                       std::pow(p.N, 7.0 / 3.0);
    rep.formula =
        "K <= 2 E + C lambda^2 N^{7/3}, C = " + attractive_kinetic_constant_formula();
  } else {
    throw Error("unknown energy-bound scenario: " + scenario);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Momentum drift (free-evolution heuristic, lattice version)
// ---------------------------------------------------------------------------

struct MomentumDrift {
  double drift = 0.0;  // |Tr(p [h_HF, P])| / N
  double bound = 0.0;  // one-body commutators carried explicitly + direct-term
                       // majorant 3 lambda ||(v^2 * f) f||_1 / N
};

inline MomentumDrift momentum_drift(const FiniteBasisModel& model, const Matrix& p) {
  require(model.momentum.has_value(), "model exposes no momentum operator");
  const Matrix& P = *model.momentum;
  const int d = model.d;
  const double N = std::max(1.0, p.trace().real());

  const MeanFieldTerms mf = mean_field_terms(model, p);
  const Matrix h_hf = model.h + model.lambda * (mf.direct - mf.exchange);

  MomentumDrift out;
  out.drift = std::abs((p * (h_hf * P - P * h_hf)).trace()) / N;

  const double one_body = std::abs((p * (model.h * P - P * model.h)).trace());
  const double exch =
      model.lambda * std::abs((p * (mf.exchange * P - P * mf.exchange)).trace());
  double direct_majorant = 0.0;
  if (model.V.is_kernel_diagonal() && model.lambda > 0.0) {
    const RealMatrix& v = model.V.kernel();
    RealVector f(d);
    for (int j = 0; j < d; ++j) f(j) = std::max(0.0, p(j, j).real());
    for (int j = 0; j < d; ++j) {
      double u = 0.0;
      for (int k = 0; k < d; ++k) u += v(j, k) * v(j, k) * f(k);
      direct_majorant += u * f(j);
    }
    direct_majorant *= 3.0 * model.lambda;
  } else if (model.lambda > 0.0 && !model.V.is_zero()) {
    direct_majorant = model.lambda * std::abs((p * (mf.direct * P - P * mf.direct)).trace());
  }
  out.bound = (one_body + exch + direct_majorant) / N;
  return out;
}

}  // namespace evap
