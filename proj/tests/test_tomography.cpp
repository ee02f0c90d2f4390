#include <gtest/gtest.h>

#include "choi_fit.hpp"
#include "luders/channels.hpp"
#include "luders/dynamics.hpp"
#include "luders/error.hpp"
#include "luders/linalg.hpp"
#include "luders/random.hpp"
#include "luders/tomography.hpp"
#include "test_util.hpp"

using namespace luders;

namespace {

ReconstructionResult fit(const TomographyDataset& d, std::uint64_t seed = 1) {
  ReconstructOptions o;
  o.seed = seed;
  return reconstruct(d, o);
}

double round_trip_fidelity(const ProcessChoi& source, int shots, std::uint64_t seed, double eps = 0.0) {
  const auto data = simulate_dataset(source, shots, seed, eps);
  return process_fidelity(fit(data, seed).chi, source);
}

// Counts drawn from given probabilities (for hand-built forward models).
TomographyDataset sample(const Grid& p, int shots, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::array<int, 81> counts{};
  for (std::size_t k = 0; k < 81; ++k) counts[k] = std::binomial_distribution<int>(shots, p[k])(rng);
  return TomographyDataset(counts, shots, TomographyDataset::Loaded{"test"});
}

// Detection pulses over-rotated by (1 + delta): measurement effects
// |psi'_j><psi'_j| no longer resolve the identity with the ideal weights.
Grid overrotated_probabilities(const ProcessChoi& chi, double delta) {
  const auto& set = preparation_set();
  Grid p{};
  for (std::size_t j = 0; j < 9; ++j) {
    ComplexMatrix u = ComplexMatrix::identity(3);
    for (const Pulse& pulse : set[j].pulses) u = u * rotation_unitary(pulse.level, pulse.axis, pulse.angle * (1 + delta));
    const std::vector<Complex> psi{u(0, 0), u(1, 0), u(2, 0)};
    const ComplexMatrix effect = outer(psi, psi);
    for (std::size_t i = 0; i < 9; ++i) {
      const ComplexMatrix out = apply(chi, density(set[i].state));
      p[grid_index(i, j)] = std::clamp((effect * out).trace().real(), 0.0, 1.0);
    }
  }
  return p;
}

}  // namespace

TEST(Probabilities, IdentityChannelOverlaps) {
  const Grid p = probabilities(identity_channel());
  const auto& set = preparation_set();
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 9; ++j) {
      Complex overlap = 0.0;
      for (std::size_t l = 0; l < 3; ++l) overlap += std::conj(set[j].state[l]) * set[i].state[l];
      EXPECT_NEAR(p[grid_index(i, j)], std::norm(overlap), 1e-14);
    }
    EXPECT_NEAR(p[grid_index(i, i)], 1.0, 1e-14);
  }
}

TEST(Probabilities, LuedersExamples) {
  const Grid p = probabilities(measurement_channel(0.0));
  EXPECT_NEAR(p[grid_index(8, 8)], 1.0, 1e-14);
  EXPECT_NEAR(p[grid_index(6, 6)], 0.5, 1e-14);
}

TEST(Probabilities, RejectsNonPsd) {
  ComplexMatrix m = identity_channel().matrix();
  m(1, 1) = -0.5;
  try {
    probabilities(ProcessChoi(m));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPSD);
  }
}

TEST(Probabilities, InUnitIntervalForTraceNonIncreasing) {
  std::mt19937_64 rng(40);
  for (int k = 0; k < 100; ++k) {
    const ComplexMatrix b = test::random_matrix(9, 9, rng);
    ComplexMatrix m = hermitian_part(b * b.adjoint());
    const auto tr = herm_eig(partial_trace(m, 3, 3, Subsystem::A)).values.back();
    m *= Complex(1.0 / tr);
    const Grid p = probabilities(ProcessChoi(hermitian_part(m)));
    for (double v : p) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Simulate, DeterministicCells) {
  const auto d = simulate_dataset(identity_channel(), 1000, 3);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(d.count(i, i), 1000);
  EXPECT_EQ(d.count(0, 1), 0);  // <1|0> = 0
  EXPECT_EQ(d.count(1, 2), 0);
}

TEST(Simulate, Reproducible) {
  const ProcessChoi chi = measurement_channel(0.5);
  const auto a = simulate_dataset(chi, 1000, 99);
  const auto b = simulate_dataset(chi, 1000, 99);
  const auto c = simulate_dataset(chi, 1000, 100);
  EXPECT_EQ(a.counts(), b.counts());
  EXPECT_NE(a.counts(), c.counts());
  const auto* prov = std::get_if<TomographyDataset::Simulated>(&a.provenance());
  ASSERT_NE(prov, nullptr);
  EXPECT_EQ(prov->seed, 99u);
}

TEST(Simulate, FrequenciesApproachProbabilities) {
  const ProcessChoi chi = measurement_channel(0.3);
  const Grid p = probabilities(chi);
  const Grid f = simulate_dataset(chi, 1'000'000, 5).frequencies();
  for (std::size_t k = 0; k < 81; ++k) EXPECT_NEAR(f[k], p[k], 5 * std::sqrt(0.25 / 1e6) + 1e-12);
}

TEST(Dataset, Validation) {
  std::array<int, 81> counts{};
  counts[5] = 1500;
  try {
    TomographyDataset(counts, 1000, TomographyDataset::Loaded{"x"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RangeError);
  }
  EXPECT_THROW(simulate_dataset(identity_channel(), 0, 1), Error);
}

TEST(FitInternals, ParameterRoundTrip) {
  const ComplexMatrix chi = (measurement_channel({0.4, 0.2}).matrix() * Complex(0.9)) +
                            ComplexMatrix::identity(9) * Complex(0.1 / 3.0);
  const auto x = detail::params_from_choi(chi);
  EXPECT_LE(max_abs_diff(detail::choi_from_params(x), chi), 1e-12);
}

TEST(FitInternals, NewtonSystemMatchesFiniteDifferences) {
  const ProcessChoi truth = measurement_channel({0.5, 0.1});
  const auto data = simulate_dataset(truth, 1000, 17);
  std::mt19937_64 rng(18);
  std::normal_distribution<double> jitter(0.0, 0.02);
  for (FitLoss loss : {FitLoss::LeastSquares, FitLoss::BinomialLikelihood}) {
    detail::FitObjective objective(data, loss);
    objective.drop_caps();
    std::array<double, detail::kTpTerms> mult{};
    for (double& m : mult) m = jitter(rng) * 10;
    objective.set_penalty(50.0, mult);

    const ComplexMatrix mixed = truth.matrix() * Complex(0.8) + ComplexMatrix::identity(9) * Complex(0.2 / 3.0);
    auto x = detail::params_from_choi(mixed);
    for (double& v : x) v += jitter(rng);

    std::vector<double> values, grad, hess;
    detail::newton_system(x, objective, values, grad, hess);
    auto f = [&](const detail::Params& y) { return objective.total(detail::functional_values(y)); };
    auto g = [&](const detail::Params& y) {
      std::vector<double> v, gr, h;
      detail::newton_system(y, objective, v, gr, h);
      return gr;
    };
    const double h = 1e-6;
    double worst_g = 0.0, worst_h = 0.0, scale_g = 0.0, scale_h = 0.0;
    for (std::size_t a = 0; a < detail::kParams; ++a) {
      auto xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      worst_g = std::max(worst_g, std::abs((f(xp) - f(xm)) / (2 * h) - grad[a]));
      scale_g = std::max(scale_g, std::abs(grad[a]));
      const auto gp = g(xp), gm = g(xm);
      for (std::size_t b = 0; b < detail::kParams; ++b) {
        worst_h = std::max(worst_h, std::abs((gp[b] - gm[b]) / (2 * h) - hess[a * detail::kParams + b]));
        scale_h = std::max(scale_h, std::abs(hess[a * detail::kParams + b]));
      }
    }
    EXPECT_LE(worst_g, 1e-5 * std::max(1.0, scale_g)) << static_cast<int>(loss);
    EXPECT_LE(worst_h, 1e-5 * std::max(1.0, scale_h)) << static_cast<int>(loss);
  }
}

TEST(Reconstruct, NoiselessRoundTrips) {
  for (const ProcessChoi& chi : {measurement_channel(0.0), identity_channel(), measurement_channel({0.5, 0.3})}) {
    const auto r = fit(dataset_from_probabilities(probabilities(chi)));
    EXPECT_GE(process_fidelity(r.chi, chi), 0.999);
    EXPECT_TRUE(r.chi.is_psd());
    EXPECT_LT(r.residual, 1e-12);
  }
}

TEST(Reconstruct, LikelihoodLossNoiseless) {
  const ProcessChoi chi = measurement_channel(0.6);
  ReconstructOptions o;
  o.loss = FitLoss::BinomialLikelihood;
  const auto r = reconstruct(dataset_from_probabilities(probabilities(chi), 100000), o);
  EXPECT_GE(process_fidelity(r.chi, chi), 0.999);
}

TEST(Reconstruct, RowCShotNoise) {
  ExperimentParams p;
  p.omega = angular_mhz(3.2);
  const ProcessChoi chi = measurement_channel(g0_adiabatic(p));
  std::vector<double> f;
  for (std::uint64_t s = 0; s < 20; ++s) f.push_back(round_trip_fidelity(chi, 1000, derive_seed(300, s)));
  EXPECT_GE(test::median(f), 0.97);
}

TEST(Reconstruct, GaugeInvariantObjective) {
  const auto data = dataset_from_probabilities(probabilities(measurement_channel(0.5)));
  ReconstructOptions o;
  o.start_identity = false;
  o.start_lueders = false;
  o.random_starts = 1;
  o.seed = 1;
  const auto a = reconstruct(data, o);
  o.seed = 2;
  const auto b = reconstruct(data, o);
  ASSERT_TRUE(a.converged);
  ASSERT_TRUE(b.converged);
  EXPECT_LE(std::abs(a.objective - b.objective), 1e-10);
}

TEST(Reconstruct, FidelityImprovesWithShots) {
  const ProcessChoi chi = measurement_channel(0.67);
  std::vector<double> low, high;
  for (std::uint64_t s = 0; s < 20; ++s) {
    low.push_back(round_trip_fidelity(chi, 100, derive_seed(400, s)));
    high.push_back(round_trip_fidelity(chi, 10000, derive_seed(401, s)));
  }
  EXPECT_GE(test::median(high), test::median(low));
}

TEST(ReconstructTp, InactiveConstraint) {
  const auto data = dataset_from_probabilities(probabilities(identity_channel()));
  const auto free = fit(data);
  const auto tp = reconstruct_tp(data);
  EXPECT_NEAR(process_fidelity(free.chi, tp.chi), 1.0, 1e-3);
  EXPECT_LT(tp.tp_deviation, 1e-8);
}

TEST(ReconstructTp, DominatedByFreeFit) {
  const ProcessChoi chi = measurement_channel(0.5);
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto data = simulate_dataset(chi, 1000, derive_seed(500, s), 0.05);
    const auto free = fit(data);
    const auto tp = reconstruct_tp(data);
    EXPECT_LT(tp.tp_deviation, 1e-8);
    EXPECT_GT(tp.residual, free.residual);
  }
}

TEST(Chi2Significance, OneDofIsAbsoluteZ) {
  // chi2_1 survival of z^2 is the two-sided normal tail of z.
  for (double z : {0.5, 1.0, 2.0, 3.0, 5.0}) EXPECT_NEAR(chi2_significance(z * z, 1), z, 1e-9);
  EXPECT_EQ(chi2_significance(0.0, 9), 0.0);
  EXPECT_EQ(chi2_significance(-1.0, 9), 0.0);
}

TEST(Chi2Significance, TwoDofSurvival) {
  double p = 0.0;
  chi2_significance(3.7, 2, &p);
  EXPECT_NEAR(p, std::exp(-3.7 / 2), 1e-14);
  EXPECT_THROW(chi2_significance(1.0, 0), Error);
}

TEST(Chi2Significance, MonotoneAndFiniteInDeepTail) {
  double prev = 0.0;
  for (double stat : {1.0, 10.0, 50.0, 200.0, 2000.0, 20000.0}) {
    const double s = chi2_significance(stat, 9);
    EXPECT_TRUE(std::isfinite(s));
    EXPECT_GE(s, prev);
    prev = s;
  }
}

TEST(LogLikelihood, ClipsBoundaryCells) {
  const auto data = simulate_dataset(identity_channel(), 1000, 2);
  EXPECT_TRUE(std::isfinite(log_likelihood(measurement_channel(0.0), data)));
}

TEST(TpTest, NoiselessNull) {
  const auto data = dataset_from_probabilities(probabilities(measurement_channel(0.5)), 1000);
  const auto t = tp_likelihood_ratio_test(data);
  EXPECT_LT(t.significance_sigma, 1.0);
  EXPECT_EQ(t.dof, 9);
  EXPECT_GE(t.statistic, 0.0);
}

TEST(TpTest, DetectsMeasurementOverRotation) {
  const Grid p = overrotated_probabilities(measurement_channel(0.5), 0.15);
  std::vector<double> sigma;
  for (std::uint64_t s = 0; s < 5; ++s) sigma.push_back(tp_likelihood_ratio_test(sample(p, 1000, 600 + s)).significance_sigma);
  EXPECT_GT(test::median(sigma), 3.0);
}

TEST(Bootstrap, Deterministic) {
  const auto data = simulate_dataset(measurement_channel(0.67), 1000, 7);
  const auto a = bootstrap_uncertainty(data, 100, 5);
  const auto b = bootstrap_uncertainty(data, 100, 5);
  EXPECT_EQ(a.re_lower, b.re_lower);
  EXPECT_EQ(a.im_upper, b.im_upper);
  EXPECT_THROW(bootstrap_uncertainty(data, 99, 5), Error);
}

TEST(Bootstrap, ShrinksWithShots) {
  const auto data = simulate_dataset(measurement_channel(0.67), 10'000'000, 8);
  const auto iv = bootstrap_uncertainty(data, 100, 9);
  for (std::size_t e = 0; e < 81; ++e) {
    EXPECT_LT(iv.re_upper[e] - iv.re_lower[e], 0.01);
    EXPECT_LT(iv.im_upper[e] - iv.im_lower[e], 0.01);
  }
}

TEST(Bootstrap, CoverageNearNominal) {
  // Coverage is correlated across elements of one dataset; average over several.
  const ProcessChoi chi = measurement_channel(0.67);
  double total = 0.0;
  const int datasets = 5;
  for (int d = 0; d < datasets; ++d) {
    const auto data = simulate_dataset(chi, 1000, derive_seed(700, d));
    const auto iv = bootstrap_uncertainty(data, 200, derive_seed(701, d));
    int inside = 0, counted = 0;
    for (std::size_t e = 0; e < 81; ++e) {
      const Complex z = chi(e / 9, e % 9);
      if (iv.re_upper[e] - iv.re_lower[e] > 1e-6) {
        ++counted;
        inside += z.real() >= iv.re_lower[e] && z.real() <= iv.re_upper[e];
      }
      if (iv.im_upper[e] - iv.im_lower[e] > 1e-6) {
        ++counted;
        inside += z.imag() >= iv.im_lower[e] && z.imag() <= iv.im_upper[e];
      }
    }
    ASSERT_GT(counted, 0);
    total += static_cast<double>(inside) / counted;
  }
  EXPECT_NEAR(total / datasets, 0.68, 0.10);
}
