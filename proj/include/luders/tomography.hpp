#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "luders/channels.hpp"

namespace luders {

/// Row-major 9x9 grid indexed by (preparation i, measurement j), both 0-based.
using Grid = std::array<double, 81>;

constexpr std::size_t grid_index(std::size_t prep, std::size_t meas) { return prep * 9 + meas; }

/// Outcome-1 probabilities p_ij = <psi_j| Lambda[rho_i] |psi_j>, with rho_i the
/// prepared state |psi_i><psi_i| optionally depolarized by `prep_depolarization`.
/// Throws NotPSD for a non-positive chi and RangeError if a probability leaves
/// [0, 1] by more than 1e-9; values are clipped to [0, 1] otherwise.
Grid probabilities(const ProcessChoi& chi, double prep_depolarization = 0.0);

class TomographyDataset {
 public:
  struct Simulated {
    std::uint64_t seed;
    ProcessChoi source;
    double prep_depolarization;
  };
  struct Loaded {
    std::string path;
  };
  /// Frequencies taken directly from exact probabilities.
  struct Noiseless {};
  using Provenance = std::variant<Simulated, Loaded, Noiseless>;

  /// Throws RangeError unless shots >= 1 and 0 <= n_ij <= shots.
  TomographyDataset(std::array<int, 81> counts, int shots, Provenance provenance);

  int count(std::size_t prep, std::size_t meas) const { return counts_[grid_index(prep, meas)]; }
  const std::array<int, 81>& counts() const noexcept { return counts_; }
  int shots() const noexcept { return shots_; }
  Grid frequencies() const;
  const Provenance& provenance() const noexcept { return provenance_; }

 private:
  std::array<int, 81> counts_;
  int shots_;
  Provenance provenance_;
};

/// Draws n_ij ~ Binomial(N, p_ij) from a generator seeded with `seed`.
TomographyDataset simulate_dataset(const ProcessChoi& chi, int shots, std::uint64_t seed,
                                   double prep_depolarization = 0.0);

/// Noiseless dataset: n_ij = round(p_ij * shots). With the default 1e9 shots
/// the frequencies match p to 5e-10.
TomographyDataset dataset_from_probabilities(const Grid& p, int shots = 1'000'000'000);

enum class FitLoss {
  LeastSquares,        // sum (p - f)^2
  BinomialLikelihood,  // -log L / N up to a constant
};

struct ReconstructOptions {
  FitLoss loss = FitLoss::LeastSquares;
  bool start_identity = true;
  bool start_lueders = true;
  int random_starts = 3;
  /// Extra starting point, tried before the others.
  std::optional<ProcessChoi> warm_start;
  std::uint64_t seed = 0x5eed;
  int max_iterations = 3000;
  double gradient_tol = 1e-10;
  double decrease_tol = 1e-14;
  /// Trace-preserving variant only.
  double tp_tolerance = 1e-8;
  int max_penalty_stages = 16;
  double initial_penalty = 10.0;
};

struct ReconstructionResult {
  ProcessChoi chi;
  double residual;      // sum (p_ij - f_ij)^2
  double objective;     // value of the fitted loss (equals residual for least squares)
  double tp_deviation;  // max |tr_sys chi - 1|
  int iterations;       // summed over starts
  bool converged;
};

/// Unconstrained (PSD only) fit, chi = T^dagger T with T lower triangular.
/// Damped Gauss-Newton from several starts; the lowest objective wins.
ReconstructionResult reconstruct(const TomographyDataset& data, const ReconstructOptions& options = {});

/// Same fit subject to tr_sys chi = 1 (penalty continuation with
/// multiplier updates until max |tr_sys chi - 1| < tp_tolerance).
ReconstructionResult reconstruct_tp(const TomographyDataset& data,
                                    const ReconstructOptions& options = {});

/// Binomial log-likelihood sum n ln p + (N - n) ln(1 - p), p clipped to
/// [1e-9, 1 - 1e-9].
double log_likelihood(const ProcessChoi& chi, const TomographyDataset& data);

struct LikelihoodRatioTest {
  double statistic;  // 2 [max_PSD L - max_{PSD & TP} L], >= 0
  int dof;
  double p_value;
  double significance_sigma;  // two-sided Gaussian equivalent
  double loglik_psd;
  double loglik_tp;
  bool converged;
};

/// Likelihood-ratio test of trace preservation. The statistic is referred to
/// a chi-squared distribution with `dof` degrees of freedom (9 = real
/// constraints in tr_sys chi = 1).
LikelihoodRatioTest tp_likelihood_ratio_test(const TomographyDataset& data,
                                             const ReconstructOptions& options = {}, int dof = 9);

/// Gaussian-equivalent significance of a chi-squared statistic.
double chi2_significance(double statistic, int dof, double* p_value = nullptr);

struct ElementIntervals {
  // 16th / 84th percentiles of Re and Im of each Choi element, row-major.
  std::array<double, 81> re_lower;
  std::array<double, 81> re_upper;
  std::array<double, 81> im_lower;
  std::array<double, 81> im_upper;
  int resamples;
};

/// Parametric bootstrap: counts resampled from Binomial(N, f_ij), each
/// resample refit (warm-started from the point estimate).
ElementIntervals bootstrap_uncertainty(const TomographyDataset& data, int resamples,
                                       std::uint64_t seed, const ReconstructOptions& options = {});

}  // namespace luders
