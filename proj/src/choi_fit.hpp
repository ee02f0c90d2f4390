#pragma once

// Internal: Cholesky-parametrized Choi fitting shared by the reconstruction,
// likelihood-ratio and bootstrap routines.

#include <array>
#include <cstdint>
#include <vector>

#include "luders/matrix.hpp"
#include "luders/tomography.hpp"

namespace luders::detail {

constexpr std::size_t kParams = 81;
constexpr std::size_t kDataTerms = 81;
constexpr std::size_t kTpTerms = 9;
constexpr std::size_t kTerms = kDataTerms + kTpTerms;

using Params = std::array<double, kParams>;

/// Lower-triangular T from the parameter vector: per row m the real diagonal
/// T_mm followed by (Re, Im) of T_m0 .. T_m,m-1.
ComplexMatrix lower_factor(const Params& x);

/// chi = T^dagger T.
ComplexMatrix choi_from_params(const Params& x);

/// Parameters with T^dagger T = chi for a positive definite chi.
Params params_from_choi(const ComplexMatrix& chi);

/// Hermitian operators H_k with fitted quantity tr(chi H_k): the 81
/// probabilities P_j (x) rho_i^T first, then the 9 real components of
/// tr_sys chi (3 diagonal, 3 real and 3 imaginary off-diagonal parts).
const std::vector<ComplexMatrix>& fit_functionals();

/// Targets of the 9 trace-preservation functionals.
const std::array<double, kTpTerms>& tp_targets();

/// Per-term convex losses of the functional values.
class FitObjective {
 public:
  FitObjective(const TomographyDataset& data, FitLoss loss);

  void set_penalty(double weight, const std::array<double, kTpTerms>& multipliers);
  void clear_penalty() { penalized_ = false; }

  /// Likelihood cells with f = 1 would reward p > 1; they carry the
  /// constraint p <= 1, handled by augmented-Lagrangian terms.
  bool has_caps() const noexcept { return !caps_.empty(); }
  /// Trace-preserving fits satisfy p <= 1 by themselves.
  void drop_caps() { caps_.clear(); }
  void reset_caps();
  double cap_violation(const std::vector<double>& values) const;
  void update_caps(const std::vector<double>& values);

  double data_value(const std::vector<double>& values) const;
  double total(const std::vector<double>& values) const;
  /// First and second derivative of each term w.r.t. its functional value.
  void derivatives(const std::vector<double>& values, std::vector<double>& d1,
                   std::vector<double>& d2) const;

 private:
  double cell(std::size_t k, double p, double* d1, double* d2) const;
  double cap_term(std::size_t k, double p, double* d1, double* d2) const;

  FitLoss loss_;
  Grid freq_;
  Grid saturated_;
  bool penalized_ = false;
  double weight_ = 0.0;
  std::array<double, kTpTerms> multipliers_{};
  std::vector<std::size_t> caps_;
  double cap_weight_ = 0.0;
  Grid cap_mult_{};
};

struct MinimizeResult {
  Params x;
  std::vector<double> values;
  double total;
  int iterations;
  bool converged;
};

/// Gradient and Hessian of objective.total() at x (row-major kParams^2).
/// `gauss_newton_diag`, when given, receives the diagonal of J^T D J, used
/// for damping.
void newton_system(const Params& x, const FitObjective& objective, std::vector<double>& values,
                   std::vector<double>& grad, std::vector<double>& hessian,
                   std::vector<double>* gauss_newton_diag = nullptr);

/// Levenberg-Marquardt damped Newton iteration over the 81 parameters, with a
/// backtracking gradient step when no damped step decreases the objective.
MinimizeResult minimize(const Params& start, const FitObjective& objective,
                        const ReconstructOptions& options);

/// minimize() plus the outer multiplier loop for the p <= 1 constraints.
/// `reset_caps` restarts the multipliers (a fresh start); otherwise the
/// current ones are kept.
MinimizeResult solve(const Params& start, FitObjective& objective, const ReconstructOptions& options,
                     bool reset_caps = true);

/// Functional values tr(chi H_k) for all kTerms operators.
std::vector<double> functional_values(const Params& x);

/// max |tr_sys chi - 1| from functional values.
double tp_violation(const std::vector<double>& values);

/// Starting points for the multi-start search, in order: warm start,
/// identity channel, Lueders channel, random factors.
std::vector<Params> starting_points(const ReconstructOptions& options);

}  // namespace luders::detail
