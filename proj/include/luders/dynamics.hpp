#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "luders/matrix.hpp"
#include "luders/states.hpp"

namespace luders {

/// 2 pi x 1 MHz in rad/s.
constexpr double kTwoPiMHz = 2.0 * 3.14159265358979323846 * 1e6;

constexpr double angular_mhz(double mhz) { return mhz * kTwoPiMHz; }

/// Parameters of the measurement pulse. Angular frequencies in rad/s, times in
/// seconds. Uncertainties are one-sigma and only used by param_uncertainty().
struct ExperimentParams {
  double omega = 0.0;
  double omega_uncertainty = 0.0;
  double gamma = angular_mhz(21.65);
  double delta = angular_mhz(5.0);
  double delta_uncertainty = angular_mhz(2.0);
  double duration = 1e-6;
  double phase_r = 0.0;
  int shots = 1000;
  std::uint64_t seed = 1;

  /// Throws RangeError unless gamma > 0, duration >= 0 and shots >= 1.
  void validate() const;
};

/// Basis order of the four-level model.
enum Level : std::size_t { kGround = 0, kSpectator1 = 1, kSpectator2 = 2, kExcited = 3 };

/// H = Delta |e><e| + (Omega/2)(|e><0| + |0><e|), in units of hbar (rad/s).
ComplexMatrix interaction_hamiltonian(double omega, double delta);

/// Lindblad generator with the single jump operator sqrt(Gamma) |0><e|.
ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const ComplexMatrix& hamiltonian, double gamma);

struct TrajectorySample {
  double time;
  ComplexMatrix rho;
};

struct IntegrationResult {
  DensityMatrix state;
  std::vector<TrajectorySample> samples;
  double step;
  std::size_t steps;
};

/// RK4 step used by integrate() and g0_exact(): min(1e-10 s, t / 1000).
double default_step(double t_final);

/// Fixed-step RK4 integration of the four-level master equation up to
/// t_final. Hermiticity is restored after every step. When
/// `sample_every` > 0 the state is recorded every that many steps (and at the
/// end). Throws StepUnderflow past 1e8 steps.
IntegrationResult integrate(const DensityMatrix& rho0, const ExperimentParams& params,
                            double t_final, std::size_t sample_every = 0);

/// Coherence factor from the closed rho_01 / rho_e1 pair of the master
/// equation, integrated with RK4 to params.duration, times e^{i phi_r}.
/// `step` <= 0 selects default_step().
Complex g0_exact(const ExperimentParams& params, double step = 0.0);

/// exp(-Omega^2 t / (2 Gamma + 4 i Delta)) e^{i phi_r}.
Complex g0_adiabatic(const ExperimentParams& params);

/// True when Omega <= Gamma / 2, the regime where adiabatic elimination is
/// meaningful.
bool adiabatic_regime(const ExperimentParams& params);

/// 1 - |g0|^2. Throws InvalidG0 if |g0| > 1 + 1e-12.
double p_scatt(Complex g0);

enum class G0Model { Adiabatic, Exact };

struct ScatterInterval {
  double lower;   // 16th percentile
  double median;  // 50th
  double upper;   // 84th
};

/// Monte Carlo propagation of the Omega / Delta uncertainties (independent
/// normals) into P_scatt. Requires n_samples >= 100.
ScatterInterval param_uncertainty(const ExperimentParams& params, std::size_t n_samples,
                                  std::uint64_t seed, G0Model model = G0Model::Adiabatic);

/// CSV with columns t_s, rho00, rho11, rho22, rhoee, re_rho01, im_rho01,
/// re_rho12, im_rho12.
void write_trajectory_csv(std::ostream& os, const std::vector<TrajectorySample>& samples);

}  // namespace luders
