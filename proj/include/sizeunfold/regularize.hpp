#pragma once

#include <vector>

#include "sizeunfold/bias.hpp"
#include "sizeunfold/unfold.hpp"

namespace sizeunfold {

// The estimated biased size CDF is consistent in the biased domain but its
// smallest atoms blow up when divided by size; dropping atoms below a
// threshold before debiasing trades that variance for a small bias.

// keep atoms >= t and renormalize; throws if less than 1e-9 mass survives
StepCDF truncate_biased(const StepCDF& hb, double t);

// truncate, then undo the length bias: the final size CDF estimate
StepCDF debias_truncated(const StepCDF& hb, double t);

// Exact integral of |F_hat - F_bar| over [0, inf): F_bar is the empirical
// CDF of the observations, F_hat the section sqrt-area CDF implied by the
// biased size law.  Both are evaluated as step functions and the integral
// is summed over their merged breakpoints; a sampled reference with more
// than 4096 points is first coarsened to 4096 quantile knots, and the
// analytic ball CDF is discretized the same way.
double section_l1_distance(const StepCDF& biased, const std::vector<double>& obs,
                           const ReferenceDistribution& ref);
double section_l1_distance(const StepCDF& biased, const std::vector<double>& obs,
                           AnalyticBall);

// Pick the truncation threshold whose implied section CDF is L1-closest to
// the empirical one.  Candidates are the observed points, but the distance
// only depends on which support atoms survive, so one evaluation per
// support atom suffices; candidate_ts holds the smallest observation
// realizing each outcome.  Outcomes keeping less than 1e-9 of the mass are
// skipped.  Ties resolve toward the smallest threshold.
struct TruncationSelection {
  double t_hat = 0;
  std::vector<double> candidate_ts;
  std::vector<double> l1_distances;
};
TruncationSelection select_truncation(const StepCDF& biased,
                                      const std::vector<double>& obs,
                                      const ReferenceDistribution& ref);
TruncationSelection select_truncation(const StepCDF& biased,
                                      const std::vector<double>& obs, AnalyticBall);

// the full pipeline: maximum likelihood fit of the biased size CDF,
// truncation choice, and debiasing
struct EstimateResult {
  FitState fit_state;
  StepCDF biased;            // NPMLE of the biased size CDF, all atoms
  TruncationSelection selection;
  StepCDF biased_truncated;  // atoms below t_hat removed
  StepCDF size_cdf;          // the estimate of the size CDF itself
};
EstimateResult estimate_H(const ReferenceDistribution& ref,
                          const std::vector<double>& obs,
                          const SolverConfig& cfg = {});
EstimateResult estimate_H(AnalyticBall, const std::vector<double>& obs,
                          const SolverConfig& cfg = {});

}  // namespace sizeunfold
