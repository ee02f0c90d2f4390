#include "luders/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "luders/error.hpp"
#include "luders/random.hpp"

namespace luders {
namespace {

constexpr double kMaxStep = 1e-10;
constexpr double kMaxSteps = 1e8;

std::size_t step_count(double t_final, double step) {
  const double n = std::ceil(t_final / step - 1e-9);
  if (n > kMaxSteps) {
    throw Error(ErrorCode::StepUnderflow, "integration would need " + std::to_string(n) + " steps");
  }
  return static_cast<std::size_t>(std::max(1.0, n));
}

}  // namespace

void ExperimentParams::validate() const {
  if (!(gamma > 0.0)) throw Error(ErrorCode::RangeError, "gamma must be positive");
  if (!(duration >= 0.0)) throw Error(ErrorCode::RangeError, "pulse duration must be >= 0");
  if (shots < 1) throw Error(ErrorCode::RangeError, "shots must be >= 1");
  if (omega_uncertainty < 0.0 || delta_uncertainty < 0.0) {
    throw Error(ErrorCode::RangeError, "uncertainties must be >= 0");
  }
}

ComplexMatrix interaction_hamiltonian(double omega, double delta) {
  ComplexMatrix h(4, 4);
  h(kExcited, kExcited) = delta;
  h(kExcited, kGround) = omega / 2.0;
  h(kGround, kExcited) = omega / 2.0;
  return h;
}

ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const ComplexMatrix& h, double gamma) {
  require_shape(rho, 4, 4, "four-level state");
  require_shape(h, 4, 4, "four-level Hamiltonian");
  // -i [H, rho]
  ComplexMatrix out = h * rho - rho * h;
  out *= Complex(0.0, -1.0);
  // sigma_- = |0><e|: 2 s- rho s+ puts Gamma rho_ee on |0><0|;
  // s+ s- = |e><e| damps row and column e by Gamma/2 each.
  out(kGround, kGround) += gamma * rho(kExcited, kExcited);
  for (std::size_t k = 0; k < 4; ++k) {
    out(kExcited, k) -= 0.5 * gamma * rho(kExcited, k);
    out(k, kExcited) -= 0.5 * gamma * rho(k, kExcited);
  }
  return out;
}

double default_step(double t_final) { return std::min(kMaxStep, t_final / 1000.0); }

IntegrationResult integrate(const DensityMatrix& rho0, const ExperimentParams& params,
                            double t_final, std::size_t sample_every) {
  params.validate();
  require_shape(rho0.matrix(), 4, 4, "four-level state");
  if (!(t_final >= 0.0)) throw Error(ErrorCode::RangeError, "t_final must be >= 0");

  IntegrationResult result{rho0, {}, 0.0, 0};
  if (sample_every > 0) result.samples.push_back({0.0, rho0.matrix()});
  if (t_final == 0.0) return result;

  const std::size_t n = step_count(t_final, default_step(t_final));
  const double h = t_final / static_cast<double>(n);
  const ComplexMatrix ham = interaction_hamiltonian(params.omega, params.delta);
  const double gamma = params.gamma;
  auto f = [&](const ComplexMatrix& r) { return lindblad_rhs(r, ham, gamma); };

  ComplexMatrix rho = rho0.matrix();
  for (std::size_t s = 1; s <= n; ++s) {
    const ComplexMatrix k1 = f(rho);
    const ComplexMatrix k2 = f(rho + k1 * (h / 2));
    const ComplexMatrix k3 = f(rho + k2 * (h / 2));
    const ComplexMatrix k4 = f(rho + k3 * h);
    ComplexMatrix inc = k1 + k2 * 2.0 + k3 * 2.0 + k4;
    inc *= h / 6.0;
    rho = hermitian_part(rho + inc);
    if (sample_every > 0 && (s % sample_every == 0 || s == n)) {
      result.samples.push_back({h * static_cast<double>(s), rho});
    }
  }
  const Complex tr = rho.trace();
  if (std::abs(tr - 1.0) > 1e-9) {
    throw Error(ErrorCode::NotConverged, "trace drifted to " + std::to_string(tr.real()));
  }
  result.state = DensityMatrix(std::move(rho));
  result.step = h;
  result.steps = n;
  return result;
}

Complex g0_exact(const ExperimentParams& params, double step) {
  params.validate();
  const double t = params.duration;
  const Complex phase = std::polar(1.0, params.phase_r);
  if (t == 0.0) return phase;
  const std::size_t n = step_count(t, step > 0.0 ? step : default_step(t));
  const double h = t / static_cast<double>(n);

  const Complex half_omega(0.0, -params.omega / 2.0);  // -i Omega / 2
  const Complex damping(params.gamma / 2.0, params.delta);
  auto deriv = [&](Complex c01, Complex ce1, Complex& d01, Complex& de1) {
    d01 = half_omega * ce1;
    de1 = half_omega * c01 - damping * ce1;
  };

  Complex c01 = 1.0;
  Complex ce1 = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    Complex a1, b1, a2, b2, a3, b3, a4, b4;
    deriv(c01, ce1, a1, b1);
    deriv(c01 + 0.5 * h * a1, ce1 + 0.5 * h * b1, a2, b2);
    deriv(c01 + 0.5 * h * a2, ce1 + 0.5 * h * b2, a3, b3);
    deriv(c01 + h * a3, ce1 + h * b3, a4, b4);
    c01 += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    ce1 += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
  }
  return c01 * phase;
}

Complex g0_adiabatic(const ExperimentParams& params) {
  params.validate();
  const Complex denom(2.0 * params.gamma, 4.0 * params.delta);
  const Complex exponent = -params.omega * params.omega * params.duration / denom;
  return std::exp(exponent) * std::polar(1.0, params.phase_r);
}

bool adiabatic_regime(const ExperimentParams& params) {
  return params.omega <= params.gamma / 2.0;
}

double p_scatt(Complex g0) {
  if (std::abs(g0) > 1.0 + 1e-12) throw Error(ErrorCode::InvalidG0, "|g0| exceeds 1");
  return std::clamp(1.0 - std::norm(g0), 0.0, 1.0);
}

ScatterInterval param_uncertainty(const ExperimentParams& params, std::size_t n_samples,
                                  std::uint64_t seed, G0Model model) {
  params.validate();
  if (n_samples < 100) throw Error(ErrorCode::RangeError, "need at least 100 samples");
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> values;
  values.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    ExperimentParams draw = params;
    draw.omega = params.omega + params.omega_uncertainty * unit(rng);
    draw.delta = params.delta + params.delta_uncertainty * unit(rng);
    const Complex g = model == G0Model::Exact ? g0_exact(draw) : g0_adiabatic(draw);
    values.push_back(p_scatt(g));
  }
  return ScatterInterval{percentile(values, 16.0), percentile(values, 50.0),
                         percentile(values, 84.0)};
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectorySample>& samples) {
  os << "t_s,rho00,rho11,rho22,rhoee,re_rho01,im_rho01,re_rho12,im_rho12\n";
  const auto precision = os.precision(12);
  for (const auto& s : samples) {
    const ComplexMatrix& r = s.rho;
    os << s.time << ',' << r(0, 0).real() << ',' << r(1, 1).real() << ',' << r(2, 2).real() << ','
       << r(3, 3).real() << ',' << r(0, 1).real() << ',' << r(0, 1).imag() << ','
       << r(1, 2).real() << ',' << r(1, 2).imag() << '\n';
  }
  os.precision(precision);
}

}  // namespace luders
