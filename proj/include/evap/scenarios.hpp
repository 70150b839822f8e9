#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "evap/config.hpp"
#include "evap/counting.hpp"
#include "evap/diagnostics.hpp"
#include "evap/fdll.hpp"
#include "evap/fock.hpp"
#include "evap/inequalities.hpp"
#include "evap/model.hpp"
#include "evap/propagate.hpp"
#include "evap/tdhf.hpp"

namespace evap {

using ordered_json = nlohmann::ordered_json;

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot open output file: " + path);
  out << content;
  require(out.good(), "write failed: " + path);
}

struct ScenarioResult {
  int exit_code = 0;
  std::vector<std::string> failures;
  std::vector<std::string> output_files;
  ordered_json summary;
};

namespace detail {

// Deterministic per-index seeds; results land in caller-owned slots, so the
// outputs do not depend on the worker count.
template <typename Body>
void parallel_for(int n, int workers, const Body& body) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Matrix random_orthonormal(std::mt19937_64& rng, int d, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = q.adjoint() * a;
  for (int k = 0; k < d; ++k) {
    if (std::abs(r(k, k)) > 0.0) q.col(k) *= r(k, k) / std::abs(r(k, k));
  }
  return q.leftCols(n);
}

inline Matrix random_hermitian(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
  return 0.5 * (a + a.adjoint());
}

inline ManyBodyState random_state(std::mt19937_64& rng,
                                  std::shared_ptr<const FockBasis> basis) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ManyBodyState s = zero_state(std::move(basis));
  for (Eigen::Index i = 0; i < s.amp.size(); ++i) {
    s.amp(i) = Complex(gauss(rng), gauss(rng));
  }
  s.normalize();
  return s;
}

inline WeightFunction random_monotone_weight(std::mt19937_64& rng, int N) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  WeightFunction g;
  g.values.resize(N + 1);
  double acc = unif(rng);
  for (int m = 0; m <= N; ++m) {
    g.values[m] = acc;
    acc += unif(rng);
  }
  return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

namespace detail {

// Exact side of the co-propagation: spectral replay from t = 0 below the
// dense threshold, incremental Krylov steps above.
struct ExactSide {
  Eigen::SparseMatrix<Complex> H;
  std::shared_ptr<const FockBasis> basis;
  Vector initial;
  bool spectral = false;
  SpectralPropagator prop;
  double tol = 1e-12;

  static ExactSide build(const FiniteBasisModel& model,
                         std::shared_ptr<const FockBasis> basis, const Vector& psi0,
                         double tol) {
    ExactSide side;
    side.H = build_many_body_hamiltonian(model, basis);
    side.basis = std::move(basis);
    side.initial = psi0;
    side.tol = tol;
    side.spectral = side.H.rows() < 512;
    if (side.spectral) side.prop = SpectralPropagator::build(Matrix(side.H));
    return side;
  }

  Vector at(double t, const Vector& current, double t_current) const {
    if (spectral) return prop.apply(initial, t);
    const KrylovResult k = krylov_expv(
        [this](const Vector& x) -> Vector { return H * x; }, current, t - t_current, tol);
    require(k.converged, "Krylov propagation failed to converge");
    return k.amp;
  }

  double energy(const Vector& amp) const {
    return std::real(amp.dot(H * amp));
  }
};

}  // namespace detail

inline ScenarioResult run_simulate(const RunConfig& cfg) {
  cfg.validate();
  ScenarioResult result;
  std::vector<std::string>& failures = result.failures;

  const FiniteBasisModel model = cfg.build_model();
  const auto basis = enumerate_basis(cfg.d, cfg.N);
  const WeightFunction g = cfg.weight();

  const Matrix slater_orbitals = lowest_orbitals(model, cfg.N);
  Matrix psi_orbitals = slater_orbitals;
  if (cfg.initial == "perturbed") {
    psi_orbitals = perturbed_orbitals(model, cfg.N, cfg.perturbation_angle);
  }
  const ManyBodyState psi0 = slater_state(psi_orbitals, basis);
  TdhfState hf;
  hf.orbitals = slater_orbitals;
  TdhfOptions tdhf_opt;
  tdhf_opt.include_exchange = cfg.include_exchange;

  const detail::ExactSide exact =
      detail::ExactSide::build(model, basis, psi0.amp, cfg.tol);

  const auto [d0_trace, d0_hs] =
      trace_distance(reduced_density1(psi0), hf.projector());
  const double delta0 = d0_trace / cfg.N;
  const double s0 =
      evaporation_degree(psi0, SlaterProjector::from_orbitals(slater_orbitals),
                         weight_g_theta(cfg.N, 1.0 / 3.0));

  const int steps = static_cast<int>(std::llround(cfg.t_max / cfg.dt));
  require(steps >= 1, "t_max shorter than one step");

  double k_sup = 0.0;
  double max_identity_residual = 0.0;
  double max_projector_residual = 0.0;
  double max_trace_residual = 0.0;
  double min_exchange_margin = std::numeric_limits<double>::infinity();
  double min_momentum_margin = std::numeric_limits<double>::infinity();
  double max_trace_dist = 0.0;

  std::vector<DiagnosticsRecord> records;

  auto sample = [&](double t, const Vector& amp, const TdhfState& state) {
    const Matrix p = state.projector();
    const SlaterProjector proj = SlaterProjector::from_orbitals(state.orbitals);
    ManyBodyState psi{basis, amp};

    DiagnosticsRecord rec;
    rec.t = t;

    const double idem = (p * p - p).norm();
    const double trres = std::abs(p.trace().real() - cfg.N);
    max_projector_residual = std::max(max_projector_residual, idem);
    max_trace_residual = std::max(max_trace_residual, trres);
    if (idem > 1e-8) failures.push_back("projector idempotency residual " + fmt17(idem) +
                                        " at t = " + fmt17(t));
    if (trres > 1e-10) failures.push_back("projector trace residual " + fmt17(trres) +
                                          " at t = " + fmt17(t));

    const HfObservables obs = hf_observables(model, state, cfg.include_exchange);
    rec.K_hf = obs.kinetic;
    rec.E_hf = obs.energy;
    k_sup = std::max(k_sup, obs.kinetic);
    const double exchange_margin = obs.direct_energy - std::abs(obs.exchange_energy);
    min_exchange_margin = std::min(min_exchange_margin, exchange_margin);
    if (exchange_margin < -1e-12) {
      failures.push_back("exchange energy exceeds direct energy at t = " + fmt17(t));
    }

    const CountingDecomposition dec = counting_components(psi, proj);
    rec.S_g = evaporation_degree(dec, g);
    const GronwallTerms terms =
        gronwall_decomposition(psi, proj, model, g, cfg.include_exchange);
    rec.T1 = terms.T1;
    rec.T2 = terms.T2;
    rec.T3 = terms.T3;

    // central-difference derivative of S_g with both dynamics advanced by
    // the high-accuracy propagators
    const double delta = cfg.fd_delta;
    auto s_shifted = [&](double sign) {
      Vector amp_s = exact.at(t + sign * delta, amp, t);
      TdhfState hf_s = state;
      const double sub = sign * delta / cfg.fd_substeps;
      for (int k = 0; k < cfg.fd_substeps; ++k) {
        hf_s = tdhf_step(model, hf_s, sub, tdhf_opt);
      }
      return evaporation_degree(ManyBodyState{basis, amp_s},
                                SlaterProjector::from_orbitals(hf_s.orbitals), g);
    };
    rec.dSdt_fd = (s_shifted(1.0) - s_shifted(-1.0)) / (2.0 * delta);

    const double identity_residual =
        std::abs(rec.dSdt_fd - model.lambda * terms.sum());
    max_identity_residual = std::max(max_identity_residual, identity_residual);
    const bool identity_regime =
        cfg.d <= 8 && cfg.N <= 3 && cfg.fd_delta <= 1.5e-3 && model.lambda <= 1.0;
    if (identity_regime && identity_residual > 1e-6) {
      failures.push_back("Gronwall identity residual " + fmt17(identity_residual) +
                         " at t = " + fmt17(t));
    }

    const Matrix gamma = reduced_density1(psi);
    std::tie(rec.trace_dist, rec.hs_dist) = trace_distance(gamma, p);
    max_trace_dist = std::max(max_trace_dist, rec.trace_dist);
    rec.E_exact = exact.energy(amp);

    BoundInputs bi;
    bi.N = cfg.N;
    bi.lambda = model.lambda;
    bi.K = k_sup;
    bi.t = t;
    bi.delta0 = delta0;
    bi.S0 = s0;
    const BoundValues bv = bound_evaluators(bi);
    rec.bound_main_rhs = bv.main_rhs;
    rec.bound_S_rhs = bv.s_rhs;

    const MomentumDrift md = momentum_drift(model, p);
    rec.momentum_drift = md.drift;
    const double momentum_margin = md.bound - md.drift;
    min_momentum_margin = std::min(min_momentum_margin, momentum_margin);
    if (momentum_margin < -1e-10) {
      failures.push_back("momentum drift exceeds its bound at t = " + fmt17(t));
    }

    if (!rec.finite()) {
      failures.push_back("non-finite diagnostics at t = " + fmt17(t));
    }
    records.push_back(rec);
  };

  sample(0.0, psi0.amp, hf);
  Vector amp = psi0.amp;
  for (int k = 1; k <= steps; ++k) {
    const double t = k * cfg.dt;
    hf = tdhf_step(model, hf, cfg.dt, tdhf_opt);
    amp = exact.at(t, amp, t - cfg.dt);
    if (k % cfg.stride == 0 || k == steps) sample(t, amp, hf);
  }

  // energy-drift self-test: the same trajectory at dt and dt/2
  double drift_dt = 0.0, drift_half = 0.0;
  if (cfg.selftest) {
    auto drift_at = [&](double dt) {
      TdhfState s;
      s.orbitals = slater_orbitals;
      const double e0 = hf_observables(model, s, cfg.include_exchange).energy;
      const int n = static_cast<int>(std::llround(cfg.t_max / dt));
      double worst = 0.0;
      for (int k = 0; k < n; ++k) {
        s = tdhf_step(model, s, dt, tdhf_opt);
        worst = std::max(worst,
                         std::abs(hf_observables(model, s, cfg.include_exchange).energy - e0));
      }
      return worst / cfg.t_max;
    };
    drift_dt = drift_at(cfg.dt);
    drift_half = drift_at(0.5 * cfg.dt);
    if (drift_dt > 1e-8) {
      failures.push_back("HF energy drift " + fmt17(drift_dt) + " per unit time at dt");
    }
    if (drift_half > 1e-8) {
      failures.push_back("HF energy drift " + fmt17(drift_half) +
                         " per unit time at dt/2");
    }
  }

  // outputs
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  fs::create_directories(cfg.out_dir + "/plots");

  std::string csv = DiagnosticsRecord::csv_header();
  csv += '\n';
  for (const auto& r : records) {
    csv += r.csv_row();
    csv += '\n';
  }
  const std::string csv_path = cfg.out_dir + "/diagnostics.csv";
  write_text_file(csv_path, csv);
  result.output_files.push_back(csv_path);

  const char* quantity_names[] = {"S_g",        "dSdt_fd",     "T1",
                                  "T2",         "T3",          "trace_dist",
                                  "hs_dist",    "K_hf",        "E_hf",
                                  "E_exact",    "bound_main_rhs", "bound_S_rhs",
                                  "momentum_drift"};
  for (int q = 0; q < 13; ++q) {
    std::string data;
    for (const auto& r : records) {
      const double vals[] = {r.S_g,        r.dSdt_fd,     r.T1,
                             r.T2,         r.T3,          r.trace_dist,
                             r.hs_dist,    r.K_hf,        r.E_hf,
                             r.E_exact,    r.bound_main_rhs, r.bound_S_rhs,
                             r.momentum_drift};
      data += fmt17(r.t) + " " + fmt17(vals[q]) + "\n";
    }
    const std::string path = cfg.out_dir + "/plots/" + quantity_names[q] + ".dat";
    write_text_file(path, data);
    result.output_files.push_back(path);
  }

  // indicative term-bound evaluation on the final co-propagated state
  const SlaterProjector final_proj = SlaterProjector::from_orbitals(hf.orbitals);
  const TermBoundsReport tb =
      term_bounds_audit(ManyBodyState{basis, amp}, final_proj, model, cfg.theta,
                        lattice_density_norms(model, final_proj.p),
                        cfg.include_exchange);

  ordered_json summary;
  summary["scenario"] = "simulate";
  summary["config"] = cfg.config_echo;
  summary["records"] = records.size();
  summary["fock_dimension"] = basis->size();
  summary["exact_method"] = exact.spectral ? "spectral" : "krylov";
  summary["K"] = k_sup;
  summary["delta0"] = delta0;
  summary["S0"] = s0;
  summary["max_trace_dist"] = max_trace_dist;
  summary["max_identity_residual"] = max_identity_residual;
  summary["max_projector_residual"] = max_projector_residual;
  summary["max_trace_residual"] = max_trace_residual;
  summary["min_slack"] = ordered_json{{"exchange_dominance", min_exchange_margin},
                                      {"momentum_bound", min_momentum_margin}};
  if (cfg.selftest) {
    summary["energy_drift_per_unit_time"] =
        ordered_json{{"dt", drift_dt}, {"dt_half", drift_half}};
  }
  summary["term_bounds_indicative"] =
      ordered_json{{"s_gtheta", tb.s_gtheta},  {"T1", tb.T1},
                   {"T2", tb.T2},              {"T3", tb.T3},
                   {"a_rhs", tb.a_rhs},        {"b_rhs", tb.b_rhs},
                   {"c_rhs", tb.c_rhs},        {"f53_norm", tb.f53_norm},
                   {"vconv_max", tb.vconv_max}, {"annotation", tb.annotation}};
  summary["checks_failed"] = failures;
  result.exit_code = failures.empty() ? 0 : 1;
  summary["exit_code"] = result.exit_code;
  const std::string summary_path = cfg.out_dir + "/summary.json";
  write_text_file(summary_path, summary.dump(2) + "\n");
  result.output_files.push_back(summary_path);
  result.summary = std::move(summary);
  return result;
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

inline ScenarioResult run_audit(const RunConfig& cfg) {
  cfg.validate();
  ScenarioResult result;

  struct InstanceRow {
    int d = 0, N = 0;
    double min_evap_slack = 0.0;
    double linearity_defect = 0.0;
    double form_bound_slack = 0.0;
    double min_weighted_slack = 0.0;
    double commutation_defect = 0.0;
    double doe1 = 0.0, doe2 = 0.0, doe3 = 0.0, sgid = 0.0;
  };
  std::vector<InstanceRow> rows(cfg.instances);

  detail::parallel_for(cfg.instances, cfg.workers, [&](int i) {
    std::mt19937_64 rng(detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    std::uniform_int_distribution<int> pick_d(2, 6);
    const int d = pick_d(rng);
    std::uniform_int_distribution<int> pick_n(1, std::min(3, d));
    const int N = pick_n(rng);

    const auto basis = enumerate_basis(d, N);
    const ManyBodyState psi = detail::random_state(rng, basis);
    const SlaterProjector proj =
        SlaterProjector::from_orbitals(detail::random_orthonormal(rng, d, N));
    const WeightFunction g = weight_g_theta(N, 1.0 / 3.0);
    const WeightFunction other = detail::random_monotone_weight(rng, N);

    InstanceRow row;
    row.d = d;
    row.N = N;
    const EvaporationAudit audit = evaporation_properties_audit(psi, proj, g, other);
    row.min_evap_slack = audit.min_slack();
    row.linearity_defect = audit.linearity_defect;
    row.doe1 = std::min(audit.lower_bound_slack, audit.upper_bound_slack);
    row.doe2 = audit.hs_slack;
    row.doe3 = audit.trace_slack;
    row.sgid = audit.reverse_slack;

    row.form_bound_slack =
        fermionic_form_bound_slack(detail::random_hermitian(rng, d), basis);

    double min_weighted = std::numeric_limits<double>::infinity();
    for (const auto& b : weighted_state_bounds_audit(psi, proj, 1.0 / 3.0)) {
      min_weighted = std::min(min_weighted, b.min_slack());
    }
    row.min_weighted_slack = min_weighted;

    // commutation relation on its own small instance (dense matrices)
    std::uniform_int_distribution<int> pick_dc(2, 5);
    const int dc = pick_dc(rng);
    std::uniform_int_distribution<int> pick_nc(1, std::min(3, dc));
    const int nc = pick_nc(rng);
    const auto cbasis = enumerate_basis(dc, nc);
    const WeightFunction cg = detail::random_monotone_weight(rng, nc);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix h1(dc, dc);
    for (int a = 0; a < dc; ++a)
      for (int b = 0; b < dc; ++b) h1(a, b) = Complex(gauss(rng), gauss(rng));
    double defect = 0.0;
    for (int j = 0; j <= 1; ++j)
      for (int k = 0; k <= 1; ++k) {
        defect = std::max(defect, commutation_relation_defect(cbasis, h1, cg, 1, j, k));
      }
    if (nc >= 2) {
      Matrix h2(dc * dc, dc * dc);
      for (int a = 0; a < dc * dc; ++a)
        for (int b = 0; b < dc * dc; ++b) h2(a, b) = Complex(gauss(rng), gauss(rng));
      for (int j = 0; j <= 2; ++j)
        for (int k = 0; k <= 2; ++k) {
          defect =
              std::max(defect, commutation_relation_defect(cbasis, h2, cg, 2, j, k));
        }
    }
    row.commutation_defect = defect;
    rows[static_cast<std::size_t>(i)] = row;
  });

  double min_evap = std::numeric_limits<double>::infinity();
  double min_doe1 = min_evap, min_doe2 = min_evap, min_doe3 = min_evap,
         min_sgid = min_evap;
  double min_form = min_evap, min_weighted = min_evap;
  double max_linearity = 0.0, max_commutation = 0.0;
  std::string csv =
      "instance,d,N,min_evap_slack,doe1_slack,doe2_slack,doe3_slack,sgid_slack,"
      "linearity_defect,form_bound_slack,min_weighted_slack,commutation_defect\n";
  for (int i = 0; i < cfg.instances; ++i) {
    const InstanceRow& r = rows[static_cast<std::size_t>(i)];
    min_evap = std::min(min_evap, r.min_evap_slack);
    min_doe1 = std::min(min_doe1, r.doe1);
    min_doe2 = std::min(min_doe2, r.doe2);
    min_doe3 = std::min(min_doe3, r.doe3);
    min_sgid = std::min(min_sgid, r.sgid);
    min_form = std::min(min_form, r.form_bound_slack);
    min_weighted = std::min(min_weighted, r.min_weighted_slack);
    max_linearity = std::max(max_linearity, r.linearity_defect);
    max_commutation = std::max(max_commutation, r.commutation_defect);
    csv += std::to_string(i) + "," + std::to_string(r.d) + "," + std::to_string(r.N) +
           "," + fmt17(r.min_evap_slack) + "," + fmt17(r.doe1) + "," + fmt17(r.doe2) +
           "," + fmt17(r.doe3) + "," + fmt17(r.sgid) + "," +
           fmt17(r.linearity_defect) + "," + fmt17(r.form_bound_slack) + "," +
           fmt17(r.min_weighted_slack) + "," + fmt17(r.commutation_defect) + "\n";
  }

  auto check = [&](bool ok, const std::string& what) {
    if (!ok) result.failures.push_back(what);
  };
  check(min_evap >= -1e-10, "evaporation property slack below -1e-10");
  check(min_form >= -1e-10, "fermionic form bound slack below -1e-10");
  check(min_weighted >= -1e-10, "weighted-state bound slack below -1e-10");
  check(max_linearity <= 1e-10, "linearity defect above 1e-10");
  check(max_commutation <= 1e-12, "commutation relation defect above 1e-12");

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::string csv_path = cfg.out_dir + "/audit.csv";
  write_text_file(csv_path, csv);
  result.output_files.push_back(csv_path);

  ordered_json summary;
  summary["scenario"] = "audit";
  summary["config"] = cfg.config_echo;
  summary["instances"] = cfg.instances;
  summary["min_slack"] =
      ordered_json{{"evaporation_properties", min_evap},
                   {"doe1", min_doe1},
                   {"doe2", min_doe2},
                   {"doe3", min_doe3},
                   {"s_g_leq_s_id", min_sgid},
                   {"fermionic_form_bound", min_form},
                   {"weighted_state_bounds", min_weighted}};
  summary["max_linearity_defect"] = max_linearity;
  summary["max_commutation_defect"] = max_commutation;
  summary["checks_failed"] = result.failures;
  result.exit_code = result.failures.empty() ? 0 : 1;
  summary["exit_code"] = result.exit_code;
  const std::string summary_path = cfg.out_dir + "/summary.json";
  write_text_file(summary_path, summary.dump(2) + "\n");
  result.output_files.push_back(summary_path);
  result.summary = std::move(summary);
  return result;
}

// ---------------------------------------------------------------------------
// fdll-check
// ---------------------------------------------------------------------------

inline ScenarioResult run_fdll_check(const RunConfig& cfg) {
  ScenarioResult result;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) result.failures.push_back(what);
  };

  std::vector<double> grid;
  for (int k = 0; k < 40; ++k) grid.push_back(0.1 * std::pow(10.0, 2.0 * k / 39.0));

  std::string table_csv = "potential,r,g_v,admissibility_margin\n";
  std::string recon_csv = "potential,x,value,expected,rel_error,residual\n";

  // Coulomb: |g_v| saturates the envelope, reconstruction returns 1/x
  const PotentialWeight cw = weight_from_potential(RadialPotential::coulomb(), grid);
  double max_rel_gv = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double expect = 16.0 / (M_PI * std::pow(grid[i], 5));
    max_rel_gv =
        std::max(max_rel_gv, std::abs(std::abs(cw.report.g_values[i]) - expect) / expect);
    table_csv += "coulomb," + fmt17(grid[i]) + "," + fmt17(cw.report.g_values[i]) + "," +
                 fmt17(cw.report.margin[i]) + "\n";
  }
  check(max_rel_gv <= 1e-10, "Coulomb g_v deviates from 16/(pi r^5)");
  check(cw.report.decay_ok, "Coulomb decay checks failed");

  double max_coulomb_rel = 0.0;
  for (double x : {0.25, 0.5, 1.0, 2.0, 5.0}) {
    const ReconstructionResult res = reconstruct_coulomb(x);
    const double rel = std::abs(res.value - 1.0 / x) * x;
    max_coulomb_rel = std::max(max_coulomb_rel, rel);
    recon_csv += "coulomb," + fmt17(x) + "," + fmt17(res.value) + "," + fmt17(1.0 / x) +
                 "," + fmt17(rel) + "," + fmt17(res.residual) + "\n";
  }
  check(max_coulomb_rel <= 1e-6, "Coulomb reconstruction error above 1e-6");

  // Yukawa: admissible weight, round-trip through the decomposition
  const RadialPotential yk = RadialPotential::yukawa();
  const PotentialWeight yw = weight_from_potential(yk, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    table_csv += "yukawa," + fmt17(grid[i]) + "," + fmt17(yw.report.g_values[i]) + "," +
                 fmt17(yw.report.margin[i]) + "\n";
  }
  check(yw.report.min_margin >= -1e-12, "Yukawa weight breaks admissibility");
  check(yw.report.decay_ok, "Yukawa decay checks failed");

  FdllQuadrature quad;
  quad.range_factor = 200.0;
  double max_yukawa_rel = 0.0;
  for (double x : {0.5, 1.0, 2.0}) {
    const ReconstructionResult res = reconstruct_potential(x, yw.g, quad);
    const double rel = std::abs(res.value - yk.v(x)) / yk.v(x);
    max_yukawa_rel = std::max(max_yukawa_rel, rel);
    recon_csv += "yukawa," + fmt17(x) + "," + fmt17(res.value) + "," + fmt17(yk.v(x)) +
                 "," + fmt17(rel) + "," + fmt17(res.residual) + "\n";
  }
  check(max_yukawa_rel <= 1e-5, "Yukawa round-trip error above 1e-5");

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::string table_path = cfg.out_dir + "/fdll_weights.csv";
  const std::string recon_path = cfg.out_dir + "/fdll_reconstruction.csv";
  write_text_file(table_path, table_csv);
  write_text_file(recon_path, recon_csv);
  result.output_files.push_back(table_path);
  result.output_files.push_back(recon_path);

  ordered_json summary;
  summary["scenario"] = "fdll-check";
  summary["config"] = cfg.config_echo;
  summary["max_coulomb_weight_rel_error"] = max_rel_gv;
  summary["max_coulomb_reconstruction_rel_error"] = max_coulomb_rel;
  summary["max_yukawa_roundtrip_rel_error"] = max_yukawa_rel;
  summary["yukawa_min_admissibility_margin"] = yw.report.min_margin;
  summary["checks_failed"] = result.failures;
  result.exit_code = result.failures.empty() ? 0 : 1;
  summary["exit_code"] = result.exit_code;
  const std::string summary_path = cfg.out_dir + "/summary.json";
  write_text_file(summary_path, summary.dump(2) + "\n");
  result.output_files.push_back(summary_path);
  result.summary = std::move(summary);
  return result;
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

inline ScenarioResult run_bounds(const RunConfig& cfg) {
  ScenarioResult result;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) result.failures.push_back(what);
  };

  std::string csv = "lambda,K,N,t,C,bound_main_rhs,bound_S_rhs,overflow\n";
  double prev_main = -1.0, prev_s = -1.0;
  bool monotone_t = true;
  for (double lam : cfg.bounds_lambda) {
    for (double K : cfg.bounds_K) {
      for (double N : cfg.bounds_N) {
        prev_main = -1.0;
        prev_s = -1.0;
        for (double t : cfg.bounds_t) {
          BoundInputs in;
          in.lambda = lam;
          in.K = K;
          in.N = N;
          in.t = t;
          in.delta0 = cfg.bounds_delta0;
          in.S0 = cfg.bounds_S0;
          const BoundValues v = bound_evaluators(in);
          csv += fmt17(lam) + "," + fmt17(K) + "," + fmt17(N) + "," + fmt17(t) + "," +
                 fmt17(v.growth_rate) + "," + fmt17(v.main_rhs) + "," +
                 fmt17(v.s_rhs) + "," + (v.overflow ? "1" : "0") + "\n";
          if (t == 0.0) {
            check(v.s_rhs == cfg.bounds_S0, "bound_S at t = 0 is not S0");
            if (cfg.bounds_delta0 == 0.0) {
              check(v.main_rhs == 0.0, "bound_main at t = 0, delta0 = 0 is nonzero");
            }
          }
          if (!v.overflow) {
            if (prev_main >= 0.0 && (v.main_rhs + 1e-14 < prev_main ||
                                     v.s_rhs + 1e-14 < prev_s)) {
              monotone_t = false;
            }
            prev_main = v.main_rhs;
            prev_s = v.s_rhs;
          }
        }
      }
    }
  }
  check(monotone_t, "bound evaluators not monotone along the t grid");

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::string csv_path = cfg.out_dir + "/bounds.csv";
  write_text_file(csv_path, csv);
  result.output_files.push_back(csv_path);

  ordered_json summary;
  summary["scenario"] = "bounds";
  summary["config"] = cfg.config_echo;
  summary["grid_size"] = cfg.bounds_lambda.size() * cfg.bounds_K.size() *
                         cfg.bounds_N.size() * cfg.bounds_t.size();
  summary["checks_failed"] = result.failures;
  result.exit_code = result.failures.empty() ? 0 : 1;
  summary["exit_code"] = result.exit_code;
  const std::string summary_path = cfg.out_dir + "/summary.json";
  write_text_file(summary_path, summary.dump(2) + "\n");
  result.output_files.push_back(summary_path);
  result.summary = std::move(summary);
  return result;
}

inline ScenarioResult run_scenario(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.scenario == "simulate") return run_simulate(cfg);
  if (cfg.scenario == "audit") return run_audit(cfg);
  if (cfg.scenario == "fdll-check") return run_fdll_check(cfg);
  if (cfg.scenario == "bounds") return run_bounds(cfg);
  throw Error("unknown scenario: " + cfg.scenario);
}

}  // namespace evap
