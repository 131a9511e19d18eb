#pragma once

#include <cstdint>
#include <vector>

#include "sizeunfold/bias.hpp"
#include "sizeunfold/refdist.hpp"

namespace sizeunfold {

// Mixture kernel of the estimation problem.  Row i, column j holds
// g(s_i / s_j) / s_j: the density of the observed sqrt-area s_i when the hit
// particle has size s_j, with g the unit-size reference density.  Rows use
// the sorted observations; an entry is structurally zero iff s_i / s_j
// exceeds the reference support, so each row is a contiguous column suffix.
// Values are stored in float above 8000 observations to halve the memory
// traffic of solver sweeps; below that, double.
struct AlphaMatrix {
  int n = 0;
  std::vector<double> s;         // ascending, ties split by one ulp
  double s_max_hat = 0;          // reference support bound
  int tie_perturbations = 0;
  std::vector<int> col_lo;       // first stored column of each row
  std::vector<std::size_t> row_off;  // size n + 1, offsets into the value array
  bool use_float = false;
  std::vector<double> vd;
  std::vector<float> vf;

  double alpha(int i, int j) const {
    if (j < col_lo[std::size_t(i)] || j >= n) return 0;
    std::size_t k = row_off[std::size_t(i)] + std::size_t(j - col_lo[std::size_t(i)]);
    return use_float ? double(vf[k]) : vd[k];
  }
  std::size_t nnz() const { return row_off.empty() ? 0 : row_off.back(); }
};

// Build from raw observations (any order, positive); exact ties are split
// apart by successive nextafter steps and counted.  Throws if an
// observation is too large to be a section of any other: its row would be
// all zero and the likelihood unbounded below.
AlphaMatrix build_alpha(const ReferenceDistribution& ref, std::vector<double> s);
AlphaMatrix build_alpha(AnalyticBall, std::vector<double> s);

// Cumulative weights beta on the atoms s parameterize the estimated biased
// size CDF; increments are the atom masses.  beta must be nondecreasing,
// nonnegative, with beta_n the (unnormalized) total mass.
struct Likelihood {
  double value = 0;              // (1/n) sum_i log D_i
  std::vector<double> D;         // per-observation mixture densities
};
Likelihood log_likelihood(const AlphaMatrix& A, const std::vector<double>& beta);

// Same likelihood computed in log coordinates: y_i = log s_i is the sum of
// log size and log unit sqrt-area, whose density is g(e^z) e^z.  Equals
// log_likelihood plus mean log s_i up to rounding; a cross-check that the
// kernel really is a deconvolution.
double log_likelihood_log_domain(const ReferenceDistribution& ref,
                                 const std::vector<double>& s,
                                 const std::vector<double>& beta);

// Derivatives of the likelihood in beta.  The diagonal of the Hessian is
// what the ICM step scales with.
struct GradHess {
  std::vector<double> grad;
  std::vector<double> diag_hess;  // nonpositive
};
GradHess gradient_and_diag_hessian(const AlphaMatrix& A,
                                   const std::vector<double>& beta);

// One self-consistency update of the atom masses:
// p_j' = p_j (1/n) sum_i alpha_ij / D_i, returned as cumulative beta.
// Output total mass is 1 for any nonnegative input with positive D.
std::vector<double> em_step(const AlphaMatrix& A, const std::vector<double>& beta);

// Weighted least squares projection onto nondecreasing sequences
// (pool adjacent violators).
std::vector<double> isotonic_ls(const std::vector<double>& y,
                                const std::vector<double>& w);

struct SolverConfig {
  enum class Method { EM, ICM, Hybrid };
  Method method = Method::Hybrid;
  double eps_stop = 1e-4;   // sup-norm change threshold
  int stable_iters = 10;    // successive small changes required to stop
  int max_iters = 5000;
  double line_search_eps = 0.1;  // Goldstein band parameter, in (0, 1/2)
  double hessian_ridge = 1e-8;
};

// One iterative-convex-minorant step on phi(beta) = -loglik + beta_n:
// quadratic model with the diagonal Hessian, isotonic projection, then a
// Goldstein band bisection on the segment toward the candidate.  stalled is
// set when 60 bisections cannot place a step inside the band.
struct IcmResult {
  std::vector<double> beta;
  bool stalled = false;
};
IcmResult icm_step(const AlphaMatrix& A, const std::vector<double>& beta,
                   const SolverConfig& cfg = {});

struct FitState {
  std::vector<double> beta;      // final, normalized so beta_n = 1
  double loglik = 0;
  int iterations = 0;
  bool converged = false;
  bool ever_stalled = false;
  std::vector<double> loglik_trace;  // initial value, then one per iteration
  double kkt_residual = 0;
};

// Maximize the likelihood over nondecreasing nonnegative beta.  Hybrid
// (default) alternates one ICM and one EM step; the EM step also
// renormalizes the total mass.  Stops after stable_iters successive
// iterations move beta by less than eps_stop in sup norm.
FitState fit(const AlphaMatrix& A, const SolverConfig& cfg = {});

// Optimality residual of the self-consistency condition:
// r_j = (1/n) sum_i alpha_ij / D_i is 1 on the support and <= 1 off it at
// a maximizer; returns the largest violation.
double kkt_residual(const AlphaMatrix& A, const std::vector<double>& beta);

// the fitted biased size CDF as a step function on the observed atoms
StepCDF biased_size_cdf(const AlphaMatrix& A, const FitState& state);

// The maximizer is unique iff the alpha columns on the support are linearly
// independent; checks the rank of that submatrix.  Dense QR: intended for
// diagnostics, not for very large fits.
struct UniquenessDiagnostic {
  int support_size = 0;
  int rank = 0;
  bool unique = false;
};
UniquenessDiagnostic uniqueness_diagnostic(const AlphaMatrix& A,
                                           const std::vector<double>& beta);

}  // namespace sizeunfold
