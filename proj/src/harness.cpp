#include "sizeunfold/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace sizeunfold {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string cache_path(const std::string& dir, std::uint64_t hash, std::int64_t n) {
  std::ostringstream name;
  name << "ref_" << std::hex << std::setw(16) << std::setfill('0') << hash << std::dec
       << "_" << n << ".szuf";
  return (std::filesystem::path(dir) / name.str()).string();
}

template <class Src>
ExperimentSummary run_impl(const Src& src, const ParametricSize& truth,
                           const ExperimentConfig& cfg) {
  if (cfg.n < 1) throw std::invalid_argument("need at least one section per replication");
  if (cfg.reps < 1) throw std::invalid_argument("need at least one replication");

  const auto biased_cdf = [&](double x) { return truth.biased_cdf(x); };
  const auto size_cdf = [&](double x) { return truth.cdf(x); };

  ExperimentSummary sum;
  sum.reps.reserve(static_cast<size_t>(cfg.reps));
  const Rng base(cfg.seed);
  for (int i = 0; i < cfg.reps; ++i) {
    Rng stream = base.split(static_cast<std::uint64_t>(i));
    const auto rep_start = std::chrono::steady_clock::now();
    std::vector<double> obs = forward_sample(src, truth, cfg.n, stream);

    AlphaMatrix A = build_alpha(src, obs);
    const auto fit_start = std::chrono::steady_clock::now();
    FitState fs = fit(A, cfg.solver);
    const double fit_s = seconds_since(fit_start);

    StepCDF biased = biased_size_cdf(A, fs);
    TruncationSelection sel = select_truncation(biased, A.s, src);
    StepCDF trunc = truncate_biased(biased, sel.t_hat);
    StepCDF h = debias(trunc);

    RepResult r;
    r.err_biased = sup_distance(biased, biased_cdf);
    r.err_size = sup_distance(h, size_cdf);
    r.t_hat = sel.t_hat;
    r.iterations = fs.iterations;
    r.converged = fs.converged;
    r.fit_seconds = fit_s;
    r.total_seconds = seconds_since(rep_start);
    sum.reps.push_back(r);
  }

  std::vector<double> eb, es;
  double it_sum = 0, fit_sum = 0;
  for (const RepResult& r : sum.reps) {
    eb.push_back(r.err_biased);
    es.push_back(r.err_size);
    it_sum += r.iterations;
    fit_sum += r.fit_seconds;
  }
  sum.biased_q03 = nearest_rank(eb, 0.03);
  sum.biased_median = nearest_rank(eb, 0.5);
  sum.biased_q98 = nearest_rank(eb, 0.98);
  sum.size_q03 = nearest_rank(es, 0.03);
  sum.size_median = nearest_rank(es, 0.5);
  sum.size_q98 = nearest_rank(es, 0.98);
  sum.mean_iterations = it_sum / cfg.reps;
  sum.mean_fit_seconds = fit_sum / cfg.reps;
  return sum;
}

}  // namespace

double sup_distance(const StepCDF& est, const std::function<double(double)>& cdf,
                    int grid) {
  if (grid < 1) throw std::invalid_argument("grid must be positive");
  const auto& a = est.atoms();
  const auto& c = est.cum();
  double d = 0;
  for (size_t j = 0; j < a.size(); ++j) {
    const double f = cdf(a[j]);
    d = std::max(d, std::abs((j ? c[j - 1] : 0.0) - f));  // limit from the left
    d = std::max(d, std::abs(c[j] - f));
  }
  const double hi = a.back();
  for (int k = 0; k <= grid; ++k) {
    const double x = hi * k / grid;
    d = std::max(d, std::abs(est.eval(x) - cdf(x)));
  }
  return d;
}

double nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q > 0) || q > 1) throw std::invalid_argument("quantile level must be in (0,1]");
  std::sort(values.begin(), values.end());
  const auto m = values.size();
  auto rank = static_cast<size_t>(std::ceil(q * static_cast<double>(m)));
  if (rank < 1) rank = 1;
  if (rank > m) rank = m;
  return values[rank - 1];
}

ReferenceDistribution cached_reference(const Polyhedron& K, std::int64_t n,
                                       const std::string& cache_dir, Rng& rng,
                                       int n_workers, int grid_size) {
  const std::uint64_t hash = content_hash(K);
  std::filesystem::create_directories(cache_dir);
  const std::string path = cache_path(cache_dir, hash, n);
  if (std::filesystem::exists(path)) {
    try {
      ReferenceDistribution ref = load_reference(path);
      if (ref.shape_hash() == hash &&
          static_cast<std::int64_t>(ref.sqrt_samples().size()) == n && ref.fitted()) {
        if (ref.grid_size() != grid_size)
          return fit_density(std::move(ref), grid_size);
        return ref;
      }
    } catch (const std::exception&) {
      // unreadable cache entry; fall through and rebuild it
    }
  }
  ReferenceDistribution ref =
      fit_density(sample_reference(K, n, rng, n_workers), grid_size);
  save_reference(ref, path);
  return ref;
}

ExperimentSummary run_experiment(const ReferenceDistribution& ref,
                                 const ParametricSize& truth,
                                 const ExperimentConfig& cfg) {
  return run_impl(ref, truth, cfg);
}

ExperimentSummary run_experiment(AnalyticBall, const ParametricSize& truth,
                                 const ExperimentConfig& cfg) {
  return run_impl(AnalyticBall{}, truth, cfg);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (const auto& row : rows)
    if (row.size() != header.size())
      throw std::invalid_argument("csv row width does not match the header");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << std::setprecision(17);
  for (size_t k = 0; k < header.size(); ++k)
    out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& row : rows) {
    for (size_t k = 0; k < row.size(); ++k)
      out << (k ? "," : "") << row[k];
    out << '\n';
  }
  if (!out.flush()) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace sizeunfold
