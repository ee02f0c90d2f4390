#include "choi_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "luders/error.hpp"
#include "luders/random.hpp"
#include "luders/states.hpp"

namespace luders::detail {
namespace {

constexpr std::size_t kN = 9;
constexpr double kClipLow = 1e-9;
constexpr double kClipHigh = 1.0 - 1e-9;
constexpr double kOutsideCurvature = 1e6;
constexpr double kInitialCapWeight = 100.0;
constexpr double kCapTolerance = 1e-9;
constexpr int kMaxCapStages = 12;

enum class Part { Diagonal, Real, Imag };

struct ParamSlot {
  std::size_t row;
  std::size_t col;
  Part part;
};

const std::array<ParamSlot, kParams>& slots() {
  static const std::array<ParamSlot, kParams> table = [] {
    std::array<ParamSlot, kParams> t{};
    std::size_t p = 0;
    for (std::size_t m = 0; m < kN; ++m) {
      t[p++] = {m, m, Part::Diagonal};
      for (std::size_t n = 0; n < m; ++n) {
        t[p++] = {m, n, Part::Real};
        t[p++] = {m, n, Part::Imag};
      }
    }
    return t;
  }();
  return table;
}

// (Re or diagonal, Im) parameter positions of T(row, col).
const std::array<std::array<std::pair<std::size_t, std::size_t>, kN>, kN>& slot_index() {
  static const auto table = [] {
    std::array<std::array<std::pair<std::size_t, std::size_t>, kN>, kN> t{};
    const auto& s = slots();
    for (std::size_t p = 0; p < kParams; ++p) {
      auto& e = t[s[p].row][s[p].col];
      if (s[p].part == Part::Imag) e.second = p;
      else e.first = p;
    }
    return t;
  }();
  return table;
}

std::vector<ComplexMatrix> build_functionals() {
  std::vector<ComplexMatrix> ops;
  ops.reserve(kTerms);
  const auto& set = preparation_set();
  for (std::size_t i = 0; i < kN; ++i) {
    const ComplexMatrix prep = density(set[i].state).matrix();
    for (std::size_t j = 0; j < kN; ++j) {
      const ComplexMatrix meas = density(set[j].state).matrix();
      ops.push_back(kron(meas, prep.transpose()));
    }
  }
  // (tr_sys chi)_{bd} = tr(chi Y_bd) with Y_bd = 1 (x) |d><b|.
  auto y = [](std::size_t b, std::size_t d) {
    ComplexMatrix e(3, 3);
    e(d, b) = 1.0;
    return kron(ComplexMatrix::identity(3), e);
  };
  for (std::size_t b = 0; b < 3; ++b) ops.push_back(y(b, b));
  const std::array<std::pair<std::size_t, std::size_t>, 3> off{{{0, 1}, {0, 2}, {1, 2}}};
  for (auto [b, d] : off) ops.push_back(hermitian_part(y(b, d)));
  for (auto [b, d] : off) {
    ComplexMatrix yy = y(b, d);
    ComplexMatrix im = (yy - yy.adjoint()) * Complex(0.0, -0.5);
    ops.push_back(im);
  }
  return ops;
}

bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}

// Values and Jacobian rows d tr(T^dagger T H_k) / d x.
void evaluate_jacobian(const Params& x, std::vector<double>& values, std::vector<Params>& jac) {
  const ComplexMatrix t = lower_factor(x);
  const ComplexMatrix t_adj = t.adjoint();
  const ComplexMatrix chi = t_adj * t;
  const auto& ops = fit_functionals();
  values.assign(kTerms, 0.0);
  jac.resize(kTerms);
  for (std::size_t k = 0; k < kTerms; ++k) {
    const ComplexMatrix& h = ops[k];
    double v = 0.0;
    for (std::size_t r = 0; r < kN; ++r)
      for (std::size_t c = 0; c < kN; ++c) v += (chi(r, c) * h(c, r)).real();
    values[k] = v;
    // d/dT_mn tr(T^dagger T H) = 2 Re[(H T^dagger)_nm] for a real step,
    // -2 Im[(H T^dagger)_nm] for an imaginary one.
    const ComplexMatrix ht = h * t_adj;
    Params& row = jac[k];
    const auto& table = slots();
    for (std::size_t p = 0; p < kParams; ++p) {
      const Complex z = ht(table[p].col, table[p].row);
      row[p] = table[p].part == Part::Imag ? -2.0 * z.imag() : 2.0 * z.real();
    }
  }
}

}  // namespace

ComplexMatrix lower_factor(const Params& x) {
  ComplexMatrix t(kN, kN);
  const auto& table = slots();
  for (std::size_t p = 0; p < kParams; ++p) {
    const ParamSlot& s = table[p];
    switch (s.part) {
      case Part::Diagonal: t(s.row, s.col) = x[p]; break;
      case Part::Real: t(s.row, s.col).real(x[p]); break;
      case Part::Imag: t(s.row, s.col).imag(x[p]); break;
    }
  }
  return t;
}

ComplexMatrix choi_from_params(const Params& x) {
  const ComplexMatrix t = lower_factor(x);
  return hermitian_part(t.adjoint() * t);
}

Params params_from_choi(const ComplexMatrix& chi) {
  require_shape(chi, kN, kN, "Choi matrix");
  // Cholesky of the index-reversed matrix C' = L L^dagger gives
  // T = J L^dagger J, lower triangular with T^dagger T = C.
  double shift = 0.0;
  for (int attempt = 0; attempt < 30; ++attempt) {
    ComplexMatrix l(kN, kN);
    bool ok = true;
    for (std::size_t j = 0; j < kN && ok; ++j) {
      double d = chi(kN - 1 - j, kN - 1 - j).real() + shift;
      for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
      if (!(d > 0.0)) {
        ok = false;
        break;
      }
      l(j, j) = std::sqrt(d);
      for (std::size_t i = j + 1; i < kN; ++i) {
        Complex s = chi(kN - 1 - i, kN - 1 - j);
        for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
        l(i, j) = s / l(j, j).real();
      }
    }
    if (ok) {
      ComplexMatrix t(kN, kN);
      for (std::size_t i = 0; i < kN; ++i)
        for (std::size_t j = 0; j <= i; ++j) t(i, j) = std::conj(l(kN - 1 - j, kN - 1 - i));
      Params x{};
      const auto& table = slots();
      for (std::size_t p = 0; p < kParams; ++p) {
        const Complex z = t(table[p].row, table[p].col);
        x[p] = table[p].part == Part::Imag ? z.imag() : z.real();
      }
      return x;
    }
    shift = shift == 0.0 ? 1e-12 * std::max(1.0, chi.max_abs()) : shift * 10.0;
  }
  throw Error(ErrorCode::NotPSD, "cannot factor starting Choi matrix");
}

const std::vector<ComplexMatrix>& fit_functionals() {
  static const std::vector<ComplexMatrix> ops = build_functionals();
  return ops;
}

const std::array<double, kTpTerms>& tp_targets() {
  static const std::array<double, kTpTerms> targets{1, 1, 1, 0, 0, 0, 0, 0, 0};
  return targets;
}

FitObjective::FitObjective(const TomographyDataset& data, FitLoss loss)
    : loss_(loss), freq_(data.frequencies()) {
  for (std::size_t k = 0; k < kDataTerms; ++k) {
    const double f = freq_[k];
    double s = 0.0;
    if (f > 0.0) s += f * std::log(f);
    if (f < 1.0) s += (1.0 - f) * std::log(1.0 - f);
    saturated_[k] = s;
    if (loss_ == FitLoss::BinomialLikelihood && f >= 1.0) caps_.push_back(k);
  }
}

void FitObjective::reset_caps() {
  cap_weight_ = kInitialCapWeight;
  cap_mult_.fill(0.0);
}

double FitObjective::cap_violation(const std::vector<double>& values) const {
  double worst = 0.0;
  for (std::size_t k : caps_) worst = std::max(worst, values[k] - 1.0);
  return worst;
}

void FitObjective::update_caps(const std::vector<double>& values) {
  for (std::size_t k : caps_) {
    cap_mult_[k] = std::max(0.0, cap_mult_[k] + cap_weight_ * (values[k] - 1.0));
  }
  cap_weight_ *= 10.0;
}

// (1 / 2w) [max(0, z + w (p - 1))^2 - z^2]
double FitObjective::cap_term(std::size_t k, double p, double* d1, double* d2) const {
  const double z = cap_mult_[k];
  const double shifted = z + cap_weight_ * (p - 1.0);
  if (shifted <= 0.0) {
    if (d1) *d1 = 0.0;
    if (d2) *d2 = 0.0;
    return -z * z / (2.0 * cap_weight_);
  }
  if (d1) *d1 = shifted;
  if (d2) *d2 = cap_weight_;
  return (shifted * shifted - z * z) / (2.0 * cap_weight_);
}

void FitObjective::set_penalty(double weight, const std::array<double, kTpTerms>& multipliers) {
  penalized_ = true;
  weight_ = weight;
  multipliers_ = multipliers;
}

double FitObjective::cell(std::size_t k, double p, double* d1, double* d2) const {
  const double f = freq_[k];
  if (loss_ == FitLoss::LeastSquares) {
    const double r = p - f;
    if (d1) *d1 = 2.0 * r;
    if (d2) *d2 = 2.0;
    return r * r;
  }
  // Per-shot negative log-likelihood relative to the saturated model. Only a
  // log term with nonzero weight is clipped; below / above the clip interval
  // the loss continues quadratically. Cells with f = 1 are left unclipped
  // above and bounded by the p <= 1 constraint instead.
  const double low = f > 0.0 ? kClipLow : 0.0;
  const double high = f < 1.0 ? kClipHigh : std::numeric_limits<double>::infinity();
  const double b = std::clamp(p, low, high);
  double value = saturated_[k];
  double g = 0.0;
  double h = 0.0;
  if (f > 0.0) {
    value -= f * std::log(b);
    g -= f / b;
    h += f / (b * b);
  }
  if (f < 1.0) {
    value -= (1.0 - f) * std::log1p(-b);
    g += (1.0 - f) / (1.0 - b);
    h += (1.0 - f) / ((1.0 - b) * (1.0 - b));
  }
  if (p != b) {
    const double dp = p - b;
    h = std::max(h, kOutsideCurvature);
    value += g * dp + 0.5 * h * dp * dp;
    g += h * dp;
  }
  if (d1) *d1 = g;
  if (d2) *d2 = h;
  return value;
}

double FitObjective::data_value(const std::vector<double>& values) const {
  double s = 0.0;
  for (std::size_t k = 0; k < kDataTerms; ++k) s += cell(k, values[k], nullptr, nullptr);
  return s;
}

double FitObjective::total(const std::vector<double>& values) const {
  double s = data_value(values);
  for (std::size_t k : caps_) s += cap_term(k, values[k], nullptr, nullptr);
  if (penalized_) {
    const auto& targets = tp_targets();
    for (std::size_t c = 0; c < kTpTerms; ++c) {
      const double shifted = values[kDataTerms + c] - targets[c] + multipliers_[c] / weight_;
      s += 0.5 * weight_ * shifted * shifted;
    }
  }
  return s;
}

void FitObjective::derivatives(const std::vector<double>& values, std::vector<double>& d1,
                               std::vector<double>& d2) const {
  d1.assign(kTerms, 0.0);
  d2.assign(kTerms, 0.0);
  for (std::size_t k = 0; k < kDataTerms; ++k) cell(k, values[k], &d1[k], &d2[k]);
  for (std::size_t k : caps_) {
    double g = 0.0, h = 0.0;
    cap_term(k, values[k], &g, &h);
    d1[k] += g;
    d2[k] += h;
  }
  if (penalized_) {
    const auto& targets = tp_targets();
    for (std::size_t c = 0; c < kTpTerms; ++c) {
      const double violation = values[kDataTerms + c] - targets[c];
      d1[kDataTerms + c] = weight_ * violation + multipliers_[c];
      d2[kDataTerms + c] = weight_;
    }
  }
}

std::vector<double> functional_values(const Params& x) {
  const ComplexMatrix chi = choi_from_params(x);
  const auto& ops = fit_functionals();
  std::vector<double> values(kTerms);
  for (std::size_t k = 0; k < kTerms; ++k) {
    double v = 0.0;
    const ComplexMatrix& h = ops[k];
    for (std::size_t r = 0; r < kN; ++r)
      for (std::size_t c = 0; c < kN; ++c) v += (chi(r, c) * h(c, r)).real();
    values[k] = v;
  }
  return values;
}

double tp_violation(const std::vector<double>& values) {
  const auto& targets = tp_targets();
  double worst = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    worst = std::max(worst, std::abs(values[kDataTerms + b] - targets[b]));
  }
  for (std::size_t o = 0; o < 3; ++o) {
    const double re = values[kDataTerms + 3 + o];
    const double im = values[kDataTerms + 6 + o];
    worst = std::max(worst, std::hypot(re, im));
  }
  return worst;
}

void newton_system(const Params& x, const FitObjective& objective, std::vector<double>& values,
                   std::vector<double>& grad, std::vector<double>& hessian,
                   std::vector<double>* gauss_newton_diag) {
  std::vector<Params> jac;
  evaluate_jacobian(x, values, jac);
  std::vector<double> d1, d2;
  objective.derivatives(values, d1, d2);

  grad.assign(kParams, 0.0);
  hessian.assign(kParams * kParams, 0.0);
  for (std::size_t k = 0; k < kTerms; ++k) {
    const Params& row = jac[k];
    if (d1[k] != 0.0)
      for (std::size_t p = 0; p < kParams; ++p) grad[p] += d1[k] * row[p];
    if (d2[k] == 0.0) continue;
    for (std::size_t p = 0; p < kParams; ++p) {
      const double w = d2[k] * row[p];
      if (w == 0.0) continue;
      double* out = &hessian[p * kParams];
      for (std::size_t q = p; q < kParams; ++q) out[q] += w * row[q];
    }
  }
  for (std::size_t p = 0; p < kParams; ++p)
    for (std::size_t q = 0; q < p; ++q) hessian[p * kParams + q] = hessian[q * kParams + p];
  if (gauss_newton_diag) {
    gauss_newton_diag->resize(kParams);
    for (std::size_t p = 0; p < kParams; ++p) (*gauss_newton_diag)[p] = hessian[p * kParams + p];
  }

  // Curvature of the functionals themselves: sum_k l'_k tr(dT^dagger dT H_k)
  // = tr(dT^dagger dT M), block diagonal over the rows of T.
  ComplexMatrix m(kN, kN);
  const auto& ops = fit_functionals();
  for (std::size_t k = 0; k < kTerms; ++k) {
    if (d1[k] != 0.0) m += ops[k] * d1[k];
  }
  const auto& index = slot_index();
  for (std::size_t c = 0; c < kN; ++c) {
    for (std::size_t a = 0; a <= c; ++a) {
      for (std::size_t b = 0; b <= c; ++b) {
        // r^dagger M^T r for the row vector r of dT.
        const Complex mab = m(b, a);
        const double re = 2.0 * mab.real();
        const double im = 2.0 * mab.imag();
        const std::size_t ua = index[c][a].first, ub = index[c][b].first;
        hessian[ua * kParams + ub] += re;
        const bool va = a < c, vb = b < c;
        if (va && vb) hessian[index[c][a].second * kParams + index[c][b].second] += re;
        if (vb) hessian[ua * kParams + index[c][b].second] -= im;
        if (va) hessian[index[c][a].second * kParams + ub] += im;
      }
    }
  }
}

MinimizeResult minimize(const Params& start, const FitObjective& objective,
                        const ReconstructOptions& options) {
  Params x = start;
  std::vector<double> values, grad, hessian, scale, system, step;
  newton_system(x, objective, values, grad, hessian, &scale);
  double f = objective.total(values);

  double lambda = 1e-3;
  bool converged = false;
  int iteration = 0;

  for (; iteration < options.max_iterations; ++iteration) {
    double gmax = 0.0;
    double dmax = 0.0;
    for (std::size_t p = 0; p < kParams; ++p) {
      gmax = std::max(gmax, std::abs(grad[p]));
      dmax = std::max(dmax, scale[p]);
    }
    if (gmax < options.gradient_tol) {
      converged = true;
      break;
    }
    const double diag_floor = std::max(1e-10 * dmax, 1e-300);

    bool accepted = false;
    double f_new = f;
    double lambda_used = lambda;
    Params x_new{};
    std::vector<double> values_new;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      system = hessian;
      for (std::size_t p = 0; p < kParams; ++p) {
        system[p * kParams + p] += lambda * std::max(scale[p], diag_floor);
      }
      step.assign(grad.begin(), grad.end());
      for (auto& s : step) s = -s;
      if (cholesky_solve(system, step, kParams)) {
        for (std::size_t p = 0; p < kParams; ++p) x_new[p] = x[p] + step[p];
        values_new = functional_values(x_new);
        f_new = objective.total(values_new);
        if (std::isfinite(f_new) && f_new < f) {
          accepted = true;
          lambda_used = lambda;
          lambda = std::max(lambda * 0.3, 1e-12);
          break;
        }
      }
      lambda *= 10.0;
      if (lambda > 1e16) break;
    }

    if (!accepted) {
      // Backtracking steepest descent.
      double gg = 0.0;
      for (double g : grad) gg += g * g;
      double alpha = dmax > 0.0 ? 1.0 / dmax : 1.0;
      for (int k = 0; k < 60 && !accepted; ++k, alpha *= 0.5) {
        for (std::size_t p = 0; p < kParams; ++p) x_new[p] = x[p] - alpha * grad[p];
        values_new = functional_values(x_new);
        f_new = objective.total(values_new);
        if (std::isfinite(f_new) && f_new <= f - 1e-4 * alpha * gg && f_new < f) accepted = true;
      }
      lambda_used = lambda;
      lambda = 1e-3;
    }
    if (!accepted) break;  // no descent direction left at working precision

    const double decrease = f - f_new;
    const double f_old = f;
    x = x_new;
    f = f_new;
    newton_system(x, objective, values, grad, hessian, &scale);
    if (decrease < options.decrease_tol * std::max(1.0, f_old) && lambda_used <= 1e-2) {
      converged = true;
      ++iteration;
      break;
    }
  }
  return MinimizeResult{x, values, f, iteration, converged};
}

MinimizeResult solve(const Params& start, FitObjective& objective, const ReconstructOptions& options,
                     bool reset_caps) {
  if (reset_caps) objective.reset_caps();
  MinimizeResult r = minimize(start, objective, options);
  if (!objective.has_caps()) return r;
  int iterations = r.iterations;
  for (int stage = 0; stage < kMaxCapStages && objective.cap_violation(r.values) > kCapTolerance;
       ++stage) {
    objective.update_caps(r.values);
    r = minimize(r.x, objective, options);
    iterations += r.iterations;
  }
  r.iterations = iterations;
  r.converged = r.converged && objective.cap_violation(r.values) <= kCapTolerance;
  r.total = objective.total(r.values);
  return r;
}

std::vector<Params> starting_points(const ReconstructOptions& options) {
  std::vector<Params> starts;
  auto mixed = [](const ComplexMatrix& chi) {
    ComplexMatrix m = chi * 0.9;
    for (std::size_t i = 0; i < kN; ++i) m(i, i) += 0.1 / 3.0;
    return params_from_choi(m);
  };
  if (options.warm_start) {
    // Lift zero eigenvalues slightly so no row of T starts exactly at zero.
    ComplexMatrix m = options.warm_start->matrix();
    const double lift = 1e-6 * std::max(1.0, m.trace().real());
    for (std::size_t i = 0; i < kN; ++i) m(i, i) += lift;
    starts.push_back(params_from_choi(m));
  }
  if (options.start_identity) starts.push_back(mixed(identity_channel().matrix()));
  if (options.start_lueders) starts.push_back(mixed(measurement_channel(0.0).matrix()));
  for (int r = 0; r < options.random_starts; ++r) {
    std::mt19937_64 rng(derive_seed(options.seed, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> unit(0.0, 1.0);
    Params x{};
    double norm2 = 0.0;
    const auto& table = slots();
    for (std::size_t p = 0; p < kParams; ++p) {
      x[p] = table[p].part == Part::Diagonal ? std::abs(unit(rng)) + 0.1 : unit(rng);
      norm2 += x[p] * x[p];
    }
    const double scale = std::sqrt(3.0 / norm2);  // tr(T^dagger T) = |T|_F^2 = 3
    for (auto& v : x) v *= scale;
    starts.push_back(x);
  }
  if (starts.empty()) throw Error(ErrorCode::ConfigError, "no starting points requested");
  return starts;
}

}  // namespace luders::detail
