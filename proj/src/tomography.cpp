#include "luders/tomography.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <future>
#include <random>
#include <thread>

#include "choi_fit.hpp"
#include "luders/error.hpp"
#include "luders/random.hpp"

namespace luders {
namespace {

constexpr double kClipLow = 1e-9;
constexpr double kClipHigh = 1.0 - 1e-9;

// tr[chi (P_j (x) rho_i^T)] without range checks.
Grid raw_probabilities(const ComplexMatrix& chi, double eps) {
  const auto& set = preparation_set();
  std::array<ComplexMatrix, 9> preps;
  std::array<ComplexMatrix, 9> meas;
  for (std::size_t i = 0; i < 9; ++i) {
    const DensityMatrix pure = density(set[i].state);
    meas[i] = pure.matrix();
    preps[i] = (eps > 0.0 ? depolarize(pure, eps) : pure).matrix().transpose();
  }
  Grid p{};
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 9; ++j) {
      const ComplexMatrix op = kron(meas[j], preps[i]);
      double v = 0.0;
      for (std::size_t r = 0; r < 9; ++r)
        for (std::size_t c = 0; c < 9; ++c) v += (chi(r, c) * op(c, r)).real();
      p[grid_index(i, j)] = v;
    }
  }
  return p;
}

double clip(double p) { return std::clamp(p, kClipLow, kClipHigh); }

double residual_of(const std::vector<double>& values, const Grid& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < detail::kDataTerms; ++k) {
    const double r = values[k] - f[k];
    s += r * r;
  }
  return s;
}

ReconstructionResult make_result(const detail::MinimizeResult& best, const detail::FitObjective& objective,
                                 const TomographyDataset& data, int iterations, bool converged) {
  ProcessChoi chi(detail::choi_from_params(best.x));
  const double tp = chi.tp_deviation();
  return ReconstructionResult{std::move(chi), residual_of(best.values, data.frequencies()),
                              objective.data_value(best.values), tp, iterations, converged};
}

// Runs fn(0..count-1) on up to hardware_concurrency threads.
template <typename Fn>
void parallel_for(std::size_t count, Fn fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [=, &fn] {
      for (std::size_t k = w; k < count; k += workers) fn(k);
    }));
  }
  for (auto& j : jobs) j.get();
}

}  // namespace

Grid probabilities(const ProcessChoi& chi, double prep_depolarization) {
  if (!chi.is_psd()) throw Error(ErrorCode::NotPSD, "probabilities need a PSD Choi matrix");
  Grid p = raw_probabilities(chi.matrix(), prep_depolarization);
  for (double& v : p) {
    if (v < -1e-9 || v > 1.0 + 1e-9) {
      throw Error(ErrorCode::RangeError, "probability " + std::to_string(v) + " outside [0, 1]");
    }
    v = std::clamp(v, 0.0, 1.0);
  }
  return p;
}

TomographyDataset::TomographyDataset(std::array<int, 81> counts, int shots, Provenance provenance)
    : counts_(counts), shots_(shots), provenance_(std::move(provenance)) {
  if (shots_ < 1) throw Error(ErrorCode::RangeError, "shots must be >= 1");
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    if (counts_[k] < 0 || counts_[k] > shots_) {
      throw Error(ErrorCode::RangeError, "count " + std::to_string(counts_[k]) + " at cell (" +
                                             std::to_string(k / 9 + 1) + "," +
                                             std::to_string(k % 9 + 1) + ") outside [0, N]");
    }
  }
}

Grid TomographyDataset::frequencies() const {
  Grid f{};
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = static_cast<double>(counts_[k]) / shots_;
  return f;
}

TomographyDataset simulate_dataset(const ProcessChoi& chi, int shots, std::uint64_t seed,
                                   double prep_depolarization) {
  if (shots < 1) throw Error(ErrorCode::RangeError, "shots must be >= 1");
  const Grid p = probabilities(chi, prep_depolarization);
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::array<int, 81> counts{};
  for (std::size_t k = 0; k < p.size(); ++k) {
    std::binomial_distribution<int> draw(shots, p[k]);
    counts[k] = draw(rng);
  }
  return TomographyDataset(counts, shots,
                           TomographyDataset::Simulated{seed, chi, prep_depolarization});
}

TomographyDataset dataset_from_probabilities(const Grid& p, int shots) {
  std::array<int, 81> counts{};
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < 0.0 || p[k] > 1.0) throw Error(ErrorCode::RangeError, "probability outside [0, 1]");
    counts[k] = static_cast<int>(std::llround(p[k] * shots));
  }
  return TomographyDataset(counts, shots, TomographyDataset::Noiseless{});
}

ReconstructionResult reconstruct(const TomographyDataset& data, const ReconstructOptions& options) {
  detail::FitObjective objective(data, options.loss);
  const auto starts = detail::starting_points(options);
  std::optional<detail::MinimizeResult> best;
  int iterations = 0;
  for (const auto& start : starts) {
    detail::MinimizeResult r = detail::solve(start, objective, options);
    iterations += r.iterations;
    if (!best || r.total < best->total) best = std::move(r);
  }
  return make_result(*best, objective, data, iterations, best->converged);
}

ReconstructionResult reconstruct_tp(const TomographyDataset& data, const ReconstructOptions& options) {
  detail::FitObjective objective(data, options.loss);
  objective.drop_caps();
  std::array<double, detail::kTpTerms> multipliers{};
  double weight = options.initial_penalty;
  const auto& targets = detail::tp_targets();

  std::optional<detail::MinimizeResult> current;
  int iterations = 0;
  bool feasible = false;
  for (int stage = 0; stage < options.max_penalty_stages; ++stage) {
    objective.set_penalty(weight, multipliers);
    if (!current) {
      for (const auto& start : detail::starting_points(options)) {
        detail::MinimizeResult r = detail::solve(start, objective, options);
        iterations += r.iterations;
        if (!current || r.total < current->total) current = std::move(r);
      }
    } else {
      // Re-evaluate under the new penalty before continuing from the last point.
      current = detail::solve(current->x, objective, options, false);
      iterations += current->iterations;
    }
    if (detail::tp_violation(current->values) < options.tp_tolerance) {
      feasible = true;
      break;
    }
    for (std::size_t c = 0; c < detail::kTpTerms; ++c) {
      multipliers[c] += weight * (current->values[detail::kDataTerms + c] - targets[c]);
    }
    weight *= 10.0;
  }
  objective.clear_penalty();
  return make_result(*current, objective, data, iterations, feasible && current->converged);
}

double log_likelihood(const ProcessChoi& chi, const TomographyDataset& data) {
  const Grid p = raw_probabilities(chi.matrix(), 0.0);
  const int n_shots = data.shots();
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double q = clip(p[k]);
    const int n = data.counts()[k];
    sum += n * std::log(q) + (n_shots - n) * std::log1p(-q);
  }
  return sum;
}

double chi2_significance(double statistic, int dof, double* p_value) {
  if (dof < 1) throw Error(ErrorCode::RangeError, "dof must be >= 1");
  const double stat = std::max(0.0, statistic);
  const boost::math::chi_squared_distribution<double> chi2(dof);
  const double p = boost::math::cdf(boost::math::complement(chi2, stat));
  if (p_value) *p_value = p;
  if (p >= 1.0) return 0.0;
  if (!(p > 0.0)) return std::sqrt(stat);  // survival below double range
  const boost::math::normal_distribution<double> normal;
  return std::max(0.0, boost::math::quantile(boost::math::complement(normal, p / 2.0)));
}

LikelihoodRatioTest tp_likelihood_ratio_test(const TomographyDataset& data,
                                             const ReconstructOptions& options, int dof) {
  ReconstructOptions ml = options;
  ml.loss = FitLoss::BinomialLikelihood;

  ReconstructionResult psd = reconstruct(data, ml);

  ReconstructOptions tp_opts = ml;
  tp_opts.warm_start = psd.chi;
  const ReconstructionResult tp = reconstruct_tp(data, tp_opts);

  // The TP optimum is feasible for the unconstrained problem; refitting from it
  // guards against the first fit stopping in a worse local basin.
  ReconstructOptions refit = ml;
  refit.warm_start = tp.chi;
  refit.start_identity = false;
  refit.start_lueders = false;
  refit.random_starts = 0;
  ReconstructionResult second = reconstruct(data, refit);
  if (second.objective < psd.objective) psd = std::move(second);

  LikelihoodRatioTest out{};
  out.loglik_psd = log_likelihood(psd.chi, data);
  out.loglik_tp = log_likelihood(tp.chi, data);
  out.statistic = std::max(0.0, 2.0 * (out.loglik_psd - out.loglik_tp));
  out.dof = dof;
  out.significance_sigma = chi2_significance(out.statistic, dof, &out.p_value);
  out.converged = psd.converged && tp.converged;
  return out;
}

ElementIntervals bootstrap_uncertainty(const TomographyDataset& data, int resamples,
                                       std::uint64_t seed, const ReconstructOptions& options) {
  if (resamples < 100) throw Error(ErrorCode::RangeError, "bootstrap needs at least 100 resamples");
  const ReconstructionResult point = reconstruct(data, options);
  const Grid f = data.frequencies();

  ReconstructOptions refit = options;
  refit.warm_start = point.chi;
  refit.start_identity = false;
  refit.start_lueders = false;
  refit.random_starts = 0;

  const std::size_t b_count = static_cast<std::size_t>(resamples);
  std::vector<ComplexMatrix> fits(b_count);
  parallel_for(b_count, [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(seed, b));
    std::array<int, 81> counts{};
    for (std::size_t k = 0; k < f.size(); ++k) {
      std::binomial_distribution<int> draw(data.shots(), f[k]);
      counts[k] = draw(rng);
    }
    const TomographyDataset resample(counts, data.shots(), TomographyDataset::Simulated{seed, point.chi, 0.0});
    fits[b] = reconstruct(resample, refit).chi.matrix();
  });

  ElementIntervals out{};
  out.resamples = resamples;
  std::vector<double> re(b_count), im(b_count);
  for (std::size_t e = 0; e < 81; ++e) {
    for (std::size_t b = 0; b < b_count; ++b) {
      const Complex z = fits[b](e / 9, e % 9);
      re[b] = z.real();
      im[b] = z.imag();
    }
    out.re_lower[e] = percentile(re, 16.0);
    out.re_upper[e] = percentile(re, 84.0);
    out.im_lower[e] = percentile(im, 16.0);
    out.im_upper[e] = percentile(im, 84.0);
  }
  return out;
}

}  // namespace luders
