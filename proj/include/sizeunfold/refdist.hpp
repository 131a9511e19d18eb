#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sizeunfold/geometry.hpp"
#include "sizeunfold/rng.hpp"

namespace sizeunfold {

// Distribution of sqrt(section area) for planes hitting a fixed reference
// particle: Monte Carlo sample, kernel density on a uniform grid, and the
// empirical CDF.  The density is a Gaussian KDE with reflection at 0 and at
// the sample max, renormalized to integrate to 1.
class ReferenceDistribution {
public:
  // samples need not be sorted; they are sorted on construction
  explicit ReferenceDistribution(std::vector<double> sqrt_samples,
                                 std::uint64_t shape_hash = 0);

  const std::vector<double>& sqrt_samples() const { return sqrt_samples_; }
  double s_max_hat() const { return sqrt_samples_.back(); }
  std::uint64_t shape_hash() const { return shape_hash_; }

  bool fitted() const { return !density_.empty(); }
  int grid_size() const { return int(density_.size()); }
  double bandwidth() const { return bandwidth_; }
  const std::vector<double>& density_values() const { return density_; }
  const std::vector<double>& cdf_values() const { return cdf_; }

private:
  std::vector<double> sqrt_samples_;  // ascending
  std::uint64_t shape_hash_ = 0;
  double bandwidth_ = 0;
  std::vector<double> density_;  // on the uniform grid over [0, s_max_hat]
  std::vector<double> cdf_;      // empirical CDF at the same grid nodes
  friend ReferenceDistribution fit_density(ReferenceDistribution, int,
                                           std::optional<double>);
};

// marker for the radius-1 ball, whose section law is known in closed form
struct AnalyticBall {};

double analytic_ball_cdf_sqrt(double s);      // P(sqrt(area) <= s)
double analytic_ball_density_sqrt(double s);  // its density
double analytic_ball_sample_sqrt(Rng& rng);   // one draw by inversion

// n sqrt(section areas) of K under IUR planes, sorted ascending.  Sample i
// draws from its own stream split off rng, so the result depends only on
// (K, n, state of rng); n_workers (0 = hardware) only affects wall time.
std::vector<double> sample_section_sqrt_areas(const Polyhedron& K, std::int64_t n,
                                              Rng& rng, int n_workers = 0);

// convenience: sample + hash the shape for cache keying
ReferenceDistribution sample_reference(const Polyhedron& K, std::int64_t n, Rng& rng,
                                       int n_workers = 0);

// KDE fit; bandwidth defaults to Silverman's rule.  Requires >= 1000 samples
// and a nondegenerate sample.
ReferenceDistribution fit_density(ReferenceDistribution ref, int grid_size = 4096,
                                  std::optional<double> bandwidth = std::nullopt);

// density at s, linear interpolation on the grid; 0 outside [0, s_max_hat]
double eval_density(const ReferenceDistribution& ref, double s);

// empirical CDF of the stored samples at s
double eval_cdf(const ReferenceDistribution& ref, double s);

// binary cache, magic "SZUF": samples plus fit metadata; load(save(x)) == x
void save_reference(const ReferenceDistribution& ref, const std::string& path);
ReferenceDistribution load_reference(const std::string& path);

}  // namespace sizeunfold
