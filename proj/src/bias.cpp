#include "sizeunfold/bias.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sizeunfold {

namespace {

// Neumaier compensated sum
double csum(const std::vector<double>& v) {
  double s = 0, c = 0;
  for (double x : v) {
    double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

}  // namespace

StepCDF::StepCDF(std::vector<double> atoms, std::vector<double> probs)
    : atoms_(std::move(atoms)), probs_(std::move(probs)) {
  if (atoms_.empty() || atoms_.size() != probs_.size())
    throw std::invalid_argument("step cdf needs matching nonempty atoms and probs");
  if (!(atoms_.front() > 0) || !std::isfinite(atoms_.front()))
    throw std::invalid_argument("step cdf atoms must be positive and finite");
  for (size_t i = 1; i < atoms_.size(); ++i)
    if (!(atoms_[i] > atoms_[i - 1]) || !std::isfinite(atoms_[i]))
      throw std::invalid_argument("step cdf atoms must be strictly increasing");
  for (double p : probs_)
    if (!(p >= 0) || !std::isfinite(p))
      throw std::invalid_argument("step cdf probs must be nonnegative");
  if (std::abs(csum(probs_) - 1.0) > 1e-12)
    throw std::invalid_argument("step cdf probs must sum to 1");
  cum_.resize(probs_.size());
  double s = 0, c = 0;
  for (size_t i = 0; i < probs_.size(); ++i) {
    double x = probs_[i];
    double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
    cum_[i] = s + c;
  }
  cum_.back() = 1.0;
}

StepCDF StepCDF::from_cumulative(std::vector<double> atoms, std::vector<double> cum) {
  if (cum.empty() || cum.size() != atoms.size())
    throw std::invalid_argument("cumulative values must match the atoms");
  double total = cum.back();
  if (!(total > 0) || !std::isfinite(total))
    throw std::invalid_argument("final cumulative value must be positive");
  std::vector<double> probs(cum.size());
  double prev = 0;
  for (size_t i = 0; i < cum.size(); ++i) {
    double d = cum[i] - prev;
    if (d < -1e-9 * total)
      throw std::invalid_argument("cumulative values must be nondecreasing");
    probs[i] = std::max(d, 0.0) / total;
    prev = cum[i];
  }
  double s = csum(probs);
  for (double& p : probs) p /= s;
  return StepCDF(std::move(atoms), std::move(probs));
}

double StepCDF::eval(double x) const {
  auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x);
  if (it == atoms_.begin()) return 0;
  return cum_[size_t(it - atoms_.begin()) - 1];
}

double StepCDF::quantile(double q) const {
  if (!(q >= 0) || q > 1) throw std::invalid_argument("quantile level outside [0, 1]");
  auto it = std::lower_bound(cum_.begin(), cum_.end(), q);
  if (it == cum_.end()) return atoms_.back();
  return atoms_[size_t(it - cum_.begin())];
}

double StepCDF::sample(Rng& rng) const { return quantile(rng.uniform()); }

double StepCDF::mean() const {
  std::vector<double> terms(atoms_.size());
  for (size_t i = 0; i < atoms_.size(); ++i) terms[i] = atoms_[i] * probs_[i];
  return csum(terms);
}

StepCDF length_bias(const StepCDF& h) {
  std::vector<double> w(h.probs().size());
  for (size_t i = 0; i < w.size(); ++i) w[i] = h.atoms()[i] * h.probs()[i];
  double total = csum(w);
  for (double& v : w) v /= total;
  return StepCDF(h.atoms(), std::move(w));
}

StepCDF debias(const StepCDF& hb) {
  std::vector<double> w(hb.probs().size());
  for (size_t i = 0; i < w.size(); ++i) w[i] = hb.probs()[i] / hb.atoms()[i];
  double total = csum(w);
  for (double& v : w) v /= total;
  return StepCDF(hb.atoms(), std::move(w));
}

StepCDF volume_cdf(const StepCDF& h) {
  std::vector<double> v(h.atoms().size());
  for (size_t i = 0; i < v.size(); ++i) {
    double x = h.atoms()[i];
    v[i] = x * x * x;
  }
  return StepCDF(std::move(v), h.probs());
}

ParametricSize ParametricSize::exponential(double rate) {
  if (!(rate > 0)) throw std::invalid_argument("rate must be positive");
  ParametricSize p;
  p.lognormal_ = false;
  p.a_ = rate;
  return p;
}

ParametricSize ParametricSize::lognormal(double log_mean, double log_sd) {
  if (!(log_sd > 0)) throw std::invalid_argument("log-sd must be positive");
  ParametricSize p;
  p.lognormal_ = true;
  p.a_ = log_mean;
  p.b_ = log_sd;
  return p;
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

double ParametricSize::cdf(double x) const {
  if (x <= 0) return 0;
  if (lognormal_) return normal_cdf((std::log(x) - a_) / b_);
  return -std::expm1(-a_ * x);
}

double ParametricSize::biased_cdf(double x) const {
  if (x <= 0) return 0;
  if (lognormal_) return normal_cdf((std::log(x) - a_ - b_ * b_) / b_);
  return -std::expm1(-a_ * x) - a_ * x * std::exp(-a_ * x);
}

double ParametricSize::mean() const {
  if (lognormal_) return std::exp(a_ + 0.5 * b_ * b_);
  return 1.0 / a_;
}

double ParametricSize::biased_mean() const {
  if (lognormal_) return std::exp(a_ + 1.5 * b_ * b_);
  return 2.0 / a_;
}

double ParametricSize::sample(Rng& rng) const {
  if (lognormal_) return std::exp(a_ + b_ * rng.normal());
  return rng.exponential() / a_;
}

double ParametricSize::sample_biased(Rng& rng) const {
  if (lognormal_) return std::exp(a_ + b_ * b_ + b_ * rng.normal());
  return (rng.exponential() + rng.exponential()) / a_;
}

namespace {

template <class DrawUnit>
std::vector<double> forward_impl(DrawUnit&& unit, const ParametricSize& sizes,
                                 std::int64_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample count must be positive");
  std::vector<double> out(static_cast<size_t>(n));
  for (auto& v : out) v = sizes.sample_biased(rng) * unit(rng);
  std::sort(out.begin(), out.end());
  return out;
}

template <class DrawUnit>
std::vector<double> forward_impl(DrawUnit&& unit, const StepCDF& sizes,
                                 std::int64_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample count must be positive");
  StepCDF biased = length_bias(sizes);
  std::vector<double> out(static_cast<size_t>(n));
  for (auto& v : out) v = biased.sample(rng) * unit(rng);
  std::sort(out.begin(), out.end());
  return out;
}

double bootstrap_draw(const ReferenceDistribution& ref, Rng& rng) {
  const auto& s = ref.sqrt_samples();
  size_t i = size_t(rng.uniform() * double(s.size()));
  if (i >= s.size()) i = s.size() - 1;
  return s[i];
}

}  // namespace

std::vector<double> forward_sample(const ReferenceDistribution& ref,
                                   const ParametricSize& sizes, std::int64_t n,
                                   Rng& rng) {
  return forward_impl([&](Rng& r) { return bootstrap_draw(ref, r); }, sizes, n, rng);
}

std::vector<double> forward_sample(AnalyticBall, const ParametricSize& sizes,
                                   std::int64_t n, Rng& rng) {
  return forward_impl([](Rng& r) { return analytic_ball_sample_sqrt(r); }, sizes, n,
                      rng);
}

std::vector<double> forward_sample(const ReferenceDistribution& ref,
                                   const StepCDF& sizes, std::int64_t n, Rng& rng) {
  return forward_impl([&](Rng& r) { return bootstrap_draw(ref, r); }, sizes, n, rng);
}

std::vector<double> forward_sample(AnalyticBall, const StepCDF& sizes,
                                   std::int64_t n, Rng& rng) {
  return forward_impl([](Rng& r) { return analytic_ball_sample_sqrt(r); }, sizes, n,
                      rng);
}

double forward_cdf_biased(const ReferenceDistribution& ref, const StepCDF& biased,
                          double s) {
  double acc = 0;
  for (size_t j = 0; j < biased.atoms().size(); ++j)
    acc += biased.probs()[j] * eval_cdf(ref, s / biased.atoms()[j]);
  return acc;
}

double forward_cdf_biased(AnalyticBall, const StepCDF& biased, double s) {
  double acc = 0;
  for (size_t j = 0; j < biased.atoms().size(); ++j)
    acc += biased.probs()[j] * analytic_ball_cdf_sqrt(s / biased.atoms()[j]);
  return acc;
}

double forward_cdf(const ReferenceDistribution& ref, const StepCDF& sizes, double s) {
  return forward_cdf_biased(ref, length_bias(sizes), s);
}

double forward_cdf(AnalyticBall, const StepCDF& sizes, double s) {
  return forward_cdf_biased(AnalyticBall{}, length_bias(sizes), s);
}

double sections_per_area(double particles_per_volume, double ref_mean_width,
                         double mean_size) {
  if (!(particles_per_volume > 0) || !(ref_mean_width > 0) || !(mean_size > 0))
    throw std::invalid_argument("density relation needs positive inputs");
  return particles_per_volume * ref_mean_width * mean_size;
}

double particles_per_volume(double sections_per_area, double ref_mean_width,
                            double mean_size) {
  if (!(sections_per_area > 0) || !(ref_mean_width > 0) || !(mean_size > 0))
    throw std::invalid_argument("density relation needs positive inputs");
  return sections_per_area / (ref_mean_width * mean_size);
}

}  // namespace sizeunfold
