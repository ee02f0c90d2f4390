#include <gtest/gtest.h>

#include <numbers>

#include "luders/channels.hpp"
#include "luders/error.hpp"
#include "luders/linalg.hpp"
#include "test_util.hpp"

using namespace luders;

namespace {

const double kS = 1.0 / std::sqrt(2.0);
const Complex kI{0.0, 1.0};

ComplexMatrix projector(std::initializer_list<std::size_t> levels) {
  ComplexMatrix p(3, 3);
  for (std::size_t l : levels) p(l, l) = 1.0;
  return p;
}

ComplexMatrix xi_prime_projector() {
  std::vector<Complex> v(9);
  for (std::size_t i = 0; i < 3; ++i) v[choi_index(i, i)] = 1.0;
  return outer(v, v);
}

Complex random_g0(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> r(0.0, 1.0);
  std::uniform_real_distribution<double> phi(-std::numbers::pi, std::numbers::pi);
  return std::polar(std::sqrt(r(rng)), phi(rng));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Lueders, TrivialObservableIsIdentity) {
  const std::vector<ComplexMatrix> ps{ComplexMatrix::identity(3)};
  EXPECT_LE(max_abs_diff(lueders_channel(ps).matrix(), xi_prime_projector()), 1e-15);
  EXPECT_LE(max_abs_diff(identity_channel().matrix(), xi_prime_projector()), 1e-15);
}

TEST(Lueders, GroundProjectorEqualsModelAtZero) {
  const std::vector<ComplexMatrix> ps{projector({0}), projector({1, 2})};
  EXPECT_LE(max_abs_diff(lueders_channel(ps).matrix(), measurement_channel(0.0).matrix()), 1e-15);
}

TEST(Lueders, FullDephasing) {
  const std::vector<ComplexMatrix> ps{projector({0}), projector({1}), projector({2})};
  ComplexMatrix flat(3, 3);
  for (auto& z : flat.entries()) z = 1.0 / 3.0;
  const ComplexMatrix out = apply(lueders_channel(ps), DensityMatrix(flat));
  EXPECT_LE(max_abs_diff(out, ComplexMatrix::identity(3) * Complex(1.0 / 3.0)), 1e-15);
}

TEST(Lueders, RejectsInvalidProjectors) {
  const std::vector<ComplexMatrix> incomplete{projector({0}), projector({1})};
  EXPECT_EQ(code_of([&] { lueders_channel(incomplete); }), ErrorCode::InvalidProjectors);
  const std::vector<ComplexMatrix> overlapping{projector({0, 1}), projector({1, 2})};
  EXPECT_EQ(code_of([&] { lueders_channel(overlapping); }), ErrorCode::InvalidProjectors);
  ComplexMatrix not_idempotent = projector({0});
  not_idempotent(0, 0) = 0.5;
  const std::vector<ComplexMatrix> bad{not_idempotent, projector({1, 2})};
  EXPECT_EQ(code_of([&] { lueders_channel(bad); }), ErrorCode::InvalidProjectors);
}

TEST(Lueders, Idempotent) {
  const std::vector<ComplexMatrix> ps{projector({0}), projector({1, 2})};
  const ProcessChoi x = lueders_channel(ps);
  EXPECT_LE(max_abs_diff(compose(x, x).matrix(), x.matrix()), 1e-10);
}

TEST(Lueders, CommutingObservablesCommute) {
  std::mt19937_64 rng(8);
  // Shared eigenbasis, rotated away from the computational one.
  const ComplexMatrix u = herm_eig(test::random_hermitian(3, rng)).vectors;
  auto rotated = [&](std::initializer_list<std::size_t> levels) { return u * projector(levels) * u.adjoint(); };
  const std::vector<ComplexMatrix> a{rotated({0}), rotated({1, 2})};
  const std::vector<ComplexMatrix> b{rotated({0, 1}), rotated({2})};
  const ProcessChoi xa = lueders_channel(a);
  const ProcessChoi xb = lueders_channel(b);
  EXPECT_LE(max_abs_diff(compose(xa, xb).matrix(), compose(xb, xa).matrix()), 1e-10);
}

TEST(MeasurementChannel, Limits) {
  EXPECT_LE(max_abs_diff(measurement_channel(1.0).matrix(), identity_channel().matrix()), 1e-15);
  const ProcessChoi chi = measurement_channel({0.3, -0.4});
  EXPECT_TRUE(chi.is_psd());
  EXPECT_LE(chi.tp_deviation(), 1e-12);
}

TEST(MeasurementChannel, CoherenceScalingExample) {
  // P_scatt = 1/3; rho with rho01 = 1/2.
  const double g0 = std::sqrt(2.0 / 3.0);
  const DensityMatrix rho(ComplexMatrix{{0.5, 0.5, 0.0}, {0.5, 0.5, 0.0}, {0.0, 0.0, 0.0}});
  const ComplexMatrix out = apply(measurement_channel(g0), rho);
  EXPECT_NEAR(out(0, 1).real(), 0.4082, 5e-5);
  EXPECT_NEAR(std::abs(out(0, 1) - g0 * 0.5), 0.0, 1e-15);
  EXPECT_EQ(out(1, 2), rho(1, 2));
}

TEST(MeasurementChannel, RejectsLargeG0) {
  EXPECT_EQ(code_of([] { measurement_channel(1.1); }), ErrorCode::InvalidG0);
  EXPECT_NO_THROW(measurement_channel(1.0 + 1e-13));
}

TEST(MeasurementChannel, CoherencePreservation) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 100; ++k) {
    const Complex g0 = random_g0(rng);
    const DensityMatrix rho = test::random_density(3, rng);
    const ComplexMatrix out = apply(measurement_channel(g0), rho);
    EXPECT_LE(std::abs(out(1, 2) - rho(1, 2)), 1e-15);
    EXPECT_LE(std::abs(out(0, 1) / rho(0, 1) - g0), 1e-12);
    EXPECT_LE(std::abs(out(0, 2) / rho(0, 2) - g0), 1e-12);
    EXPECT_LE(std::abs(out(0, 0) - rho(0, 0)), 1e-15);
  }
}

TEST(MeasurementModel, EffectsAndKraus) {
  std::mt19937_64 rng(50);
  for (int k = 0; k < 50; ++k) {
    const MeasurementModel m(random_g0(rng));
    EXPECT_GE(m.p_scatt(), 0.0);
    EXPECT_LE(m.p_scatt(), 1.0);
    EXPECT_EQ(m.effect_scatter() + m.effect_no_scatter(), ComplexMatrix::identity(3));
    const auto ks = m.kraus();
    TraceStatus status{};
    const ProcessChoi chi = kraus_channel(ks, &status);
    EXPECT_EQ(status, TraceStatus::Preserving);
    EXPECT_LE(max_abs_diff(chi.matrix(), measurement_channel(m.g0).matrix()), 1e-12);
  }
}

TEST(Kraus, IdentityAndDephasing) {
  const std::vector<ComplexMatrix> id{ComplexMatrix::identity(3)};
  EXPECT_LE(max_abs_diff(kraus_channel(id).matrix(), xi_prime_projector()), 1e-15);
  const std::vector<ComplexMatrix> deph{projector({0}), projector({1}), projector({2})};
  const ComplexMatrix chi = kraus_channel(deph).matrix();
  for (std::size_t r = 0; r < 9; ++r)
    for (std::size_t c = 0; c < 9; ++c) {
      const bool on = r == c && (r == 0 || r == 4 || r == 8);
      EXPECT_EQ(chi(r, c), Complex(on ? 1.0 : 0.0));
    }
}

TEST(Kraus, FlagsTraceStatus) {
  TraceStatus status{};
  const std::vector<ComplexMatrix> sub{ComplexMatrix::identity(3) * Complex(0.9)};
  EXPECT_NO_THROW(kraus_channel(sub, &status));
  EXPECT_EQ(status, TraceStatus::NonIncreasing);
  const std::vector<ComplexMatrix> over{ComplexMatrix::identity(3) * Complex(1.1)};
  kraus_channel(over, &status);
  EXPECT_EQ(status, TraceStatus::Increasing);
}

TEST(Kraus, ExtractionRoundTrip) {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 20; ++k) {
    const ComplexMatrix b = test::random_matrix(9, 4, rng);
    const ProcessChoi chi(hermitian_part(b * b.adjoint()));
    const auto ks = kraus_operators(chi);
    EXPECT_LE(ks.size(), 4u);
    EXPECT_LE(max_abs_diff(kraus_channel(ks).matrix(), chi.matrix()), 1e-9);
  }
}

TEST(Apply, IdentityAndSuperpositionInputs) {
  std::mt19937_64 rng(13);
  const DensityMatrix rho = test::random_density(3, rng);
  EXPECT_LE(max_abs_diff(apply(identity_channel(), rho), rho.matrix()), 1e-15);

  const Complex g0{0.6, 0.1};
  const ProcessChoi chi = measurement_channel(g0);
  const DensityMatrix in02 = density(QutritPureState({kS, 0.0, kI * kS}));
  const ComplexMatrix out02 = apply(chi, in02);
  EXPECT_LE(std::abs(out02(0, 2) - g0 * in02(0, 2)), 1e-15);
  EXPECT_LE(std::abs(out02(2, 0) - std::conj(g0) * in02(2, 0)), 1e-15);

  const DensityMatrix in12 = density(QutritPureState({0.0, kS, kI * kS}));
  EXPECT_EQ(apply(chi, in12), in12.matrix());
}

TEST(Apply, DimensionMismatch) {
  EXPECT_EQ(code_of([] { apply(identity_channel(), DensityMatrix(ComplexMatrix::identity(2) * Complex(0.5))); }),
            ErrorCode::DimensionMismatch);
}

TEST(PointerModel, ZeroHamiltonianIsIdentity) {
  const std::vector<Complex> init{1.0, 0.0};
  const std::vector<std::vector<Complex>> basis{{1.0, 0.0}, {0.0, 1.0}};
  const ProcessChoi chi = pointer_model_channel(ComplexMatrix(6, 6), 1.0, init, basis);
  EXPECT_LE(max_abs_diff(chi.matrix(), identity_channel().matrix()), 1e-12);
}

namespace {

// exp(-i H) = |0><0| (x) X + (|1><1| + |2><2|) (x) 1 for H = |0><0| (x) (pi/2)(1 - X).
ComplexMatrix controlled_shift_hamiltonian() {
  const double h = std::numbers::pi / 2;
  const ComplexMatrix pointer{{h, -h}, {-h, h}};
  return kron(projector({0}), pointer);
}

}  // namespace

TEST(PointerModel, ControlledShiftRealisesLueders) {
  const std::vector<Complex> init{1.0, 0.0};
  const std::vector<std::vector<Complex>> basis{{1.0, 0.0}, {0.0, 1.0}};
  const ProcessChoi chi = pointer_model_channel(controlled_shift_hamiltonian(), 1.0, init, basis);
  const std::vector<ComplexMatrix> ps{projector({0}), projector({1, 2})};
  EXPECT_LE(max_abs_diff(chi.matrix(), lueders_channel(ps).matrix()), 1e-10);
  EXPECT_LE(chi.tp_deviation(), 1e-10);
}

TEST(PointerModel, UnbiasedPointerIsCloserToIdentity) {
  // The pointer starts in an eigenstate of the shift, so the coupling leaves
  // no record and the process is the identity.
  const std::vector<Complex> plus{kS, kS};
  const std::vector<std::vector<Complex>> basis{{1.0, 0.0}, {0.0, 1.0}};
  const std::vector<Complex> zero{1.0, 0.0};
  const ProcessChoi unbiased = pointer_model_channel(controlled_shift_hamiltonian(), 1.0, plus, basis);
  const ProcessChoi recorded = pointer_model_channel(controlled_shift_hamiltonian(), 1.0, zero, basis);
  const double f_unbiased = process_fidelity(unbiased, identity_channel());
  const double f_recorded = process_fidelity(recorded, identity_channel());
  EXPECT_GT(f_unbiased, f_recorded);
  EXPECT_NEAR(f_unbiased, 1.0, 1e-9);
}

TEST(PointerModel, Errors) {
  const std::vector<Complex> init{1.0, 0.0};
  const std::vector<std::vector<Complex>> skew{{1.0, 0.0}, {kS, kS}};
  EXPECT_EQ(code_of([&] { pointer_model_channel(ComplexMatrix(6, 6), 1.0, init, skew); }),
            ErrorCode::NonOrthonormalBasis);
  const std::vector<std::vector<Complex>> basis{{1.0, 0.0}, {0.0, 1.0}};
  EXPECT_EQ(code_of([&] { pointer_model_channel(ComplexMatrix(5, 5), 1.0, init, basis); }),
            ErrorCode::DimensionMismatch);
}

TEST(Fidelity, IdentityVersusLueders) {
  // chi_id = |xi'><xi'| is rank one: F = <xi'|chi_L|xi'> / 9 = 5/9.
  EXPECT_NEAR(process_fidelity(identity_channel(), measurement_channel(0.0)), 5.0 / 9.0, 1e-9);
}

TEST(Fidelity, SelfFidelity) {
  for (double g0 : {0.0, 0.5, 1.0}) {
    const ProcessChoi chi = measurement_channel(g0);
    EXPECT_NEAR(process_fidelity(chi, chi), 1.0, 1e-9) << g0;
  }
}

TEST(Fidelity, SymmetricAndBounded) {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 20; ++k) {
    const ProcessChoi a = measurement_channel(random_g0(rng));
    const ComplexMatrix b = test::random_matrix(9, 9, rng);
    ComplexMatrix m = b * b.adjoint();
    m *= Complex(3.0 / m.trace().real());
    const ProcessChoi c(hermitian_part(m));
    const double f_ac = process_fidelity(a, c);
    EXPECT_NEAR(f_ac, process_fidelity(c, a), 1e-9);
    EXPECT_GE(f_ac, 0.0);
    EXPECT_LE(f_ac, 1.0 + 1e-12);
  }
}

TEST(Fidelity, RejectsNonPsd) {
  ComplexMatrix m = ComplexMatrix::identity(9);
  m(3, 3) = -0.1;
  EXPECT_EQ(code_of([&] { process_fidelity(ProcessChoi(m), identity_channel()); }), ErrorCode::NotPSD);
}
