#pragma once

#include <cstdint>
#include <vector>

#include "sizeunfold/refdist.hpp"
#include "sizeunfold/rng.hpp"

namespace sizeunfold {

// Right-continuous CDF with finitely many atoms at positive, strictly
// increasing locations.  Probabilities may be zero but must sum to 1
// within 1e-12.
class StepCDF {
public:
  StepCDF(std::vector<double> atoms, std::vector<double> probs);

  // cumulative values at the atoms; normalized by the final entry, which
  // must be positive.  Increments may dip below 0 by at most 1e-9 (rounding
  // from optimizers); they are clamped.
  static StepCDF from_cumulative(std::vector<double> atoms, std::vector<double> cum);

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<double>& cum() const { return cum_; }

  double eval(double x) const;      // P(X <= x)
  double quantile(double q) const;  // smallest atom with cdf >= q, q in [0, 1]
  double sample(Rng& rng) const;    // by inversion
  double mean() const;

private:
  std::vector<double> atoms_, probs_, cum_;
};

// weight atoms by their location: q_j = x_j p_j / sum_k x_k p_k.  A section
// plane hits a particle with probability proportional to its size, so the
// observed particle's size law is the biased one.
StepCDF length_bias(const StepCDF& h);

// inverse of length_bias: p_j = (q_j / x_j) / sum_k (q_k / x_k)
StepCDF debias(const StepCDF& hb);

// sizes scale a unit-volume reference, so volume = size^3: the volume CDF
// has an atom at x^3 wherever the size CDF has one at x
StepCDF volume_cdf(const StepCDF& h);

// Closed-form size families used by the simulations, with their
// length-biased counterparts: Exponential(rate) biases to Gamma(2, rate);
// LogNormal(m, s) biases to LogNormal(m + s^2, s).
class ParametricSize {
public:
  static ParametricSize exponential(double rate);
  static ParametricSize lognormal(double log_mean, double log_sd);

  bool is_lognormal() const { return lognormal_; }
  double cdf(double x) const;
  double biased_cdf(double x) const;
  double mean() const;
  double biased_mean() const;
  double sample(Rng& rng) const;
  double sample_biased(Rng& rng) const;

private:
  ParametricSize() = default;
  bool lognormal_ = false;
  double a_ = 1, b_ = 0;  // rate, unused; or log-mean, log-sd
};

// Sqrt-areas of n planar sections through a population of scaled copies of
// the reference shape whose (unbiased) size law is given: draw the hit
// particle's size from the biased law, a unit-size section from the
// reference, and multiply.  Sorted ascending; reference draws bootstrap the
// stored sample.
std::vector<double> forward_sample(const ReferenceDistribution& ref,
                                   const ParametricSize& sizes, std::int64_t n,
                                   Rng& rng);
std::vector<double> forward_sample(AnalyticBall, const ParametricSize& sizes,
                                   std::int64_t n, Rng& rng);
std::vector<double> forward_sample(const ReferenceDistribution& ref,
                                   const StepCDF& sizes, std::int64_t n, Rng& rng);
std::vector<double> forward_sample(AnalyticBall, const StepCDF& sizes,
                                   std::int64_t n, Rng& rng);

// CDF of the observed sqrt-area when the biased size law is the given step
// function: F(s) = sum_j w_j G(s / x_j) with G the reference sqrt-area CDF
double forward_cdf_biased(const ReferenceDistribution& ref, const StepCDF& biased,
                          double s);
double forward_cdf_biased(AnalyticBall, const StepCDF& biased, double s);

// same, from the unbiased size law
double forward_cdf(const ReferenceDistribution& ref, const StepCDF& sizes, double s);
double forward_cdf(AnalyticBall, const StepCDF& sizes, double s);

// Expected sections per unit window area is (particles per unit volume) x
// (mean width of the unit-size reference) x (mean size), since a particle
// of size x is hit by an IUR plane at rate proportional to its mean width.
double sections_per_area(double particles_per_volume, double ref_mean_width,
                         double mean_size);
double particles_per_volume(double sections_per_area, double ref_mean_width,
                            double mean_size);

}  // namespace sizeunfold
