#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sizeunfold/bias.hpp"
#include "sizeunfold/geometry.hpp"
#include "sizeunfold/refdist.hpp"
#include "sizeunfold/regularize.hpp"
#include "sizeunfold/rng.hpp"
#include "sizeunfold/unfold.hpp"

namespace sizeunfold {

// sup |est - F| against a monotone CDF: both one-sided limits at every jump
// are checked (exact for monotone F), plus a uniform grid as a safety net
double sup_distance(const StepCDF& est, const std::function<double(double)>& cdf,
                    int grid = 10000);

// nearest-rank quantile: the ceil(q*m)-th smallest of m values, q in (0,1]
double nearest_rank(std::vector<double> values, double q);

// Reuse the reference for K from cache_dir when a file with its content
// hash and sample count exists; otherwise sample n sections, fit the
// density, and save.  A cached fit at another grid size is refit from the
// stored samples.
ReferenceDistribution cached_reference(const Polyhedron& K, std::int64_t n,
                                       const std::string& cache_dir, Rng& rng,
                                       int n_workers = 0, int grid_size = 4096);

struct ExperimentConfig {
  std::int64_t n = 1000;  // sections per replication
  int reps = 100;
  std::uint64_t seed = 0;
  SolverConfig solver;
};

struct RepResult {
  double err_biased;     // sup distance of the biased size CDF estimate
  double err_size;       // sup distance of the final size CDF estimate
  double t_hat;
  int iterations;
  bool converged;
  double fit_seconds;    // the solver call alone
  double total_seconds;  // sampling through debiasing
};

struct ExperimentSummary {
  std::vector<RepResult> reps;
  double biased_q03, biased_median, biased_q98;
  double size_q03, size_median, size_q98;
  double mean_iterations;
  double mean_fit_seconds;
};

// reps independent draws of n sections from the true size law, each
// unfolded with the shared reference; replication i uses the child stream
// split(i) of the seed, so reps are reproducible individually
ExperimentSummary run_experiment(const ReferenceDistribution& ref,
                                 const ParametricSize& truth,
                                 const ExperimentConfig& cfg);
ExperimentSummary run_experiment(AnalyticBall, const ParametricSize& truth,
                                 const ExperimentConfig& cfg);

// header line plus numeric rows; values keep full double precision
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace sizeunfold
