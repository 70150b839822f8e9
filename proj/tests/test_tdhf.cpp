#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "evap/diagnostics.hpp"
#include "evap/fock.hpp"
#include "evap/model.hpp"
#include "evap/propagate.hpp"
#include "evap/tdhf.hpp"
#include "test_util.hpp"

using namespace evap;
using testutil::random_complex;
using testutil::random_hermitian;
using testutil::random_orthonormal;

namespace {

FiniteBasisModel soft_coulomb_model(int d, double lambda) {
  LatticeModelSpec spec;
  spec.d = d;
  spec.potential.kind = "soft-coulomb";
  spec.potential.softening = 1.0;
  spec.lambda = lambda;
  return build_lattice_model(spec);
}

// Tr_2[V (1 - X) (1 x p)] assembled on the d^2-dimensional product space
// with an explicit swap operator; oracle for mean_field_terms.
Matrix partial_trace_oracle(const FiniteBasisModel& model, const Matrix& p) {
  const int d = model.d;
  Matrix V2 = Matrix::Zero(d * d, d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) V2(a * d + b, c * d + e) = model.V(a, b, c, e);

  Matrix X = Matrix::Zero(d * d, d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) X(a * d + b, b * d + a) = 1.0;

  Matrix onep = Matrix::Zero(d * d, d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int e = 0; e < d; ++e) onep(a * d + b, a * d + e) = p(b, e);

  const Matrix big = V2 * (Matrix::Identity(d * d, d * d) - X) * onep;
  Matrix out = Matrix::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int c = 0; c < d; ++c) {
      Complex acc(0.0, 0.0);
      for (int b = 0; b < d; ++b) acc += big(a * d + b, c * d + b);
      out(a, c) = acc;
    }
  return out;
}

}  // namespace

TEST_CASE("mean-field Hamiltonian") {
  std::mt19937_64 rng(51);

  SECTION("lambda = 0 reduces to the one-body matrix") {
    auto model = soft_coulomb_model(5, 0.0);
    const Matrix p = random_orthonormal(rng, 5, 2) * random_orthonormal(rng, 5, 2).adjoint();
    CHECK((mean_field_hamiltonian(model, p) - model.h).norm() < 1e-14);
  }

  SECTION("self-interaction cancels for N = 1") {
    auto model = soft_coulomb_model(5, 1.3);
    const Matrix phi = random_orthonormal(rng, 5, 1);
    const Matrix p = phi * phi.adjoint();
    const MeanFieldTerms mf = mean_field_terms(model, p);
    CHECK(((mf.direct - mf.exchange) * phi).norm() < 1e-12);
  }

  SECTION("matches the dense partial-trace oracle with explicit swap") {
    for (bool dense : {false, true}) {
      auto model = soft_coulomb_model(5, 0.7);
      if (dense) model.V = TwoBodyTensor::dense(5, model.V.to_dense());
      const Matrix phi = random_orthonormal(rng, 5, 2);
      const Matrix p = phi * phi.adjoint();
      const MeanFieldTerms mf = mean_field_terms(model, p);
      const Matrix oracle = partial_trace_oracle(model, p);
      CHECK((mf.direct - mf.exchange - oracle).norm() < 1e-11);
      CHECK(hermiticity_defect(mean_field_hamiltonian(model, p)) < 1e-12);
    }
  }
}

TEST_CASE("free TDHF matches the one-body exponential") {
  std::mt19937_64 rng(53);
  auto model = soft_coulomb_model(6, 0.0);
  TdhfState state;
  state.orbitals = random_orthonormal(rng, 6, 3);
  const Matrix p0 = state.projector();

  const double t = 1.0;
  const TdhfState out = propagate_tdhf(model, state, 1e-2, 100);
  const Matrix U = unitary_exp(model.h, t);
  CHECK((out.projector() - U * p0 * U.adjoint()).norm() < 1e-10);
}

TEST_CASE("projector structure is preserved") {
  std::mt19937_64 rng(57);
  auto model = soft_coulomb_model(6, 0.9);
  TdhfState state;
  state.orbitals = random_orthonormal(rng, 6, 2);

  const TdhfState out = propagate_tdhf(model, state, 1e-3, 1000);
  const Matrix p = out.projector();
  CHECK((p * p - p).norm() < 1e-8);
  CHECK(std::abs(p.trace().real() - 2.0) < 1e-10);
  CHECK(out.gram_defect() < 1e-12);
}

TEST_CASE("energy conservation and convergence order under dt halving") {
  std::mt19937_64 rng(59);
  auto model = soft_coulomb_model(6, 0.9);
  TdhfState state;
  state.orbitals = lowest_orbitals(model, 2);
  // kick the state away from a stationary point
  state.orbitals = perturbed_orbitals(model, 2, 0.4);

  const double t_final = 1.0;
  auto drift = [&](double dt) {
    TdhfState s = state;
    const int steps = static_cast<int>(std::lround(t_final / dt));
    const double e0 = hf_observables(model, s).energy;
    double worst = 0.0;
    for (int k = 0; k < steps; ++k) {
      s = tdhf_step(model, s, dt);
      worst = std::max(worst, std::abs(hf_observables(model, s).energy - e0));
    }
    return worst / t_final;
  };

  const double d1 = drift(1e-3);
  const double d2 = drift(5e-4);
  CHECK(d1 < 1e-8);
  CHECK(d2 < 1e-8);
  // second order: quartering expected, allow slack for roundoff floors
  if (d1 > 1e-13) CHECK(d2 < 0.5 * d1);
}

TEST_CASE("step-size and orthonormality guards") {
  std::mt19937_64 rng(63);
  auto model = soft_coulomb_model(5, 0.5);
  TdhfState good;
  good.orbitals = random_orthonormal(rng, 5, 2);
  CHECK_THROWS_AS(propagate_tdhf(model, good, 0.0, 10), Error);
  CHECK_THROWS_AS(propagate_tdhf(model, good, -1e-3, 10), Error);

  TdhfState broken;
  broken.orbitals = random_orthonormal(rng, 5, 2);
  broken.orbitals.col(0) *= 1.5;  // ruin the Gram matrix
  CHECK_THROWS_AS(tdhf_step(model, broken, 1e-3), Error);
}

TEST_CASE("Hartree-only propagation conserves its own functional") {
  std::mt19937_64 rng(67);
  auto model = soft_coulomb_model(6, 0.8);
  TdhfState s;
  s.orbitals = perturbed_orbitals(model, 2, 0.3);
  TdhfOptions opt;
  opt.include_exchange = false;
  const double e0 = hf_observables(model, s, false).energy;
  for (int k = 0; k < 500; ++k) {
    s = tdhf_step(model, s, 1e-3, opt);
  }
  CHECK(std::abs(hf_observables(model, s, false).energy - e0) < 1e-9);
  // the full-HF functional is not the conserved one here
  CHECK(hf_observables(model, s).energy != Catch::Approx(e0).margin(1e-12));
}

TEST_CASE("hf observables") {
  std::mt19937_64 rng(61);

  SECTION("free energy is Tr[h p]") {
    auto model = soft_coulomb_model(5, 0.0);
    TdhfState s;
    s.orbitals = random_orthonormal(rng, 5, 2);
    const HfObservables obs = hf_observables(model, s);
    CHECK(obs.energy ==
          Catch::Approx((model.h * s.projector()).trace().real()).margin(1e-12));
  }

  SECTION("lowest Slater energy is the sum of the lowest eigenvalues") {
    auto model = soft_coulomb_model(6, 0.0);
    TdhfState s;
    s.orbitals = lowest_orbitals(model, 3);
    Eigen::SelfAdjointEigenSolver<Matrix> es(model.h);
    const double expect =
        es.eigenvalues()(0) + es.eigenvalues()(1) + es.eigenvalues()(2);
    CHECK(hf_observables(model, s).energy == Catch::Approx(expect).margin(1e-10));
  }

  SECTION("direct and exchange energies match dense contractions") {
    auto model = soft_coulomb_model(5, 0.8);
    TdhfState s;
    s.orbitals = random_orthonormal(rng, 5, 2);
    const Matrix p = s.projector();
    Complex dir(0.0, 0.0), exch(0.0, 0.0);
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b)
        for (int c = 0; c < 5; ++c)
          for (int e = 0; e < 5; ++e) {
            dir += model.V(a, b, c, e) * p(c, a) * p(e, b);
            exch += model.V(a, b, c, e) * p(e, a) * p(c, b);
          }
    const HfObservables obs = hf_observables(model, s);
    CHECK(obs.direct_energy ==
          Catch::Approx(0.5 * model.lambda * dir.real()).margin(1e-10));
    CHECK(obs.exchange_energy ==
          Catch::Approx(0.5 * model.lambda * exch.real()).margin(1e-10));
    CHECK(std::abs(obs.exchange_energy) <= obs.direct_energy + 1e-12);
  }
}

TEST_CASE("non-interacting co-propagation keeps gamma equal to p") {
  auto model = soft_coulomb_model(6, 0.0);
  const auto basis = enumerate_basis(6, 2);
  const auto H = build_many_body_hamiltonian(model, basis);
  const SpectralPropagator exact = SpectralPropagator::build(Matrix(H));

  TdhfState hf;
  hf.orbitals = lowest_orbitals(model, 2);
  ManyBodyState psi = slater_state(hf.orbitals, basis);

  const double dt = 1e-2;
  for (int k = 1; k <= 100; ++k) {
    hf = tdhf_step(model, hf, dt);
    psi.amp = exact.apply(psi.amp, dt);
    const Matrix gamma = reduced_density1(psi);
    const auto [tn, hs] = trace_distance(gamma, hf.projector());
    CHECK(tn < 1e-8);
    CHECK(hs <= tn + 1e-12);
  }
}
