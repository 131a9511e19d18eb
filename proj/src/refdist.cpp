#include "sizeunfold/refdist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace sizeunfold {

ReferenceDistribution::ReferenceDistribution(std::vector<double> sqrt_samples,
                                             std::uint64_t shape_hash)
    : sqrt_samples_(std::move(sqrt_samples)), shape_hash_(shape_hash) {
  if (sqrt_samples_.empty())
    throw std::invalid_argument("reference distribution needs at least one sample");
  for (double s : sqrt_samples_)
    if (!std::isfinite(s) || s <= 0)
      throw std::invalid_argument("reference samples must be finite and positive");
  std::sort(sqrt_samples_.begin(), sqrt_samples_.end());
}

double analytic_ball_cdf_sqrt(double s) {
  const double smax = std::sqrt(std::numbers::pi);
  if (s <= 0) return 0;
  if (s >= smax) return 1;
  return 1 - std::sqrt(1 - s * s / std::numbers::pi);
}

double analytic_ball_density_sqrt(double s) {
  const double smax = std::sqrt(std::numbers::pi);
  if (s <= 0 || s >= smax) return 0;
  return s / (std::numbers::pi * std::sqrt(1 - s * s / std::numbers::pi));
}

double analytic_ball_sample_sqrt(Rng& rng) {
  double v = rng.uniform();
  return std::sqrt(std::numbers::pi * (1 - v * v));
}

std::vector<double> sample_section_sqrt_areas(const Polyhedron& K, std::int64_t n,
                                              Rng& rng, int n_workers) {
  if (n < 1) throw std::invalid_argument("sample count must be positive");
  if (n_workers < 0) throw std::invalid_argument("worker count must be >= 0");
  int workers = n_workers ? n_workers : int(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (std::int64_t(workers) > n) workers = int(n);

  const std::uint64_t base = rng.next_u64();
  std::vector<double> out(static_cast<size_t>(n));
  auto run = [&](std::int64_t lo, std::int64_t hi) {
    IurSampler sampler(K);
    for (std::int64_t i = lo; i < hi; ++i) {
      Rng r = Rng(base).split(std::uint64_t(i));
      double a = 0;
      do {
        Plane p = sampler.next(r);
        a = section_area(K, p);
      } while (a <= 0);  // grazing plane resolved as a miss: redraw
      out[size_t(i)] = std::sqrt(a);
    }
  };

  if (workers == 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers));
    for (int w = 0; w < workers; ++w) {
      std::int64_t lo = n * w / workers, hi = n * (w + 1) / workers;
      pool.emplace_back(run, lo, hi);
    }
    for (auto& t : pool) t.join();
  }
  std::sort(out.begin(), out.end());
  return out;
}

ReferenceDistribution sample_reference(const Polyhedron& K, std::int64_t n, Rng& rng,
                                       int n_workers) {
  return ReferenceDistribution(sample_section_sqrt_areas(K, n, rng, n_workers),
                               content_hash(K));
}

ReferenceDistribution fit_density(ReferenceDistribution ref, int grid_size,
                                  std::optional<double> bandwidth) {
  const auto& x = ref.sqrt_samples_;
  const size_t n = x.size();
  if (n < 1000)
    throw std::invalid_argument("density fit needs at least 1000 samples, got " +
                                std::to_string(n));
  if (grid_size < 16) throw std::invalid_argument("grid_size must be >= 16");

  const double smax = x.back();
  double h;
  if (bandwidth) {
    h = *bandwidth;
    if (!(h > 0) || !std::isfinite(h))
      throw std::invalid_argument("bandwidth must be positive");
  } else {
    double mean = 0;
    for (double v : x) mean += v;
    mean /= double(n);
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / double(n - 1));
    double iqr = x[n * 3 / 4] - x[n / 4];
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0))
      throw std::invalid_argument("sample too degenerate for a density fit");
    h = 0.9 * spread * std::pow(double(n), -0.2);
  }

  const int G = grid_size;
  const double dx = smax / double(G - 1);

  // linear binning onto the grid nodes
  std::vector<double> cnt(size_t(G), 0.0);
  for (double v : x) {
    double u = v / dx;
    int i = int(u);
    if (i >= G - 1) {
      cnt[size_t(G - 1)] += 1;
      continue;
    }
    double w = u - double(i);
    cnt[size_t(i)] += 1 - w;
    cnt[size_t(i) + 1] += w;
  }

  // Gaussian kernel table out to 8 bandwidths
  int reach = int(8 * h / dx) + 1;
  if (reach > 4 * G) reach = 4 * G;
  const double inv_h = 1.0 / h;
  const double norm = 1.0 / (double(n) * h * std::sqrt(2 * std::numbers::pi));
  std::vector<double> ker(size_t(reach) + 1);
  for (int d = 0; d <= reach; ++d) {
    double z = double(d) * dx * inv_h;
    ker[size_t(d)] = std::exp(-0.5 * z * z);
  }

  // direct convolution plus the two reflected copies of the counts,
  // equivalent to the mirror-data boundary correction at 0 and s_max
  std::vector<double> f(size_t(G), 0.0);
  for (int m = 0; m < G; ++m) {
    double c = cnt[size_t(m)];
    if (c == 0) continue;
    int lo = std::max(0, m - reach), hi = std::min(G - 1, m + reach);
    for (int g = lo; g <= hi; ++g) f[size_t(g)] += c * ker[size_t(std::abs(g - m))];
    if (m <= reach)  // mirror node -m
      for (int g = 0; g + m <= reach && g < G; ++g) f[size_t(g)] += c * ker[size_t(g + m)];
    int mm = 2 * (G - 1) - m;  // mirror node beyond s_max
    if (mm - (G - 1) <= reach)
      for (int g = G - 1; g >= 0 && mm - g <= reach; --g)
        f[size_t(g)] += c * ker[size_t(mm - g)];
  }
  for (double& v : f) v *= norm;

  double integral = 0;
  for (int g = 0; g < G; ++g) integral += f[size_t(g)];
  integral = (integral - 0.5 * (f[0] + f[size_t(G - 1)])) * dx;
  if (!(integral > 0)) throw std::runtime_error("density fit collapsed to zero");
  for (double& v : f) v /= integral;

  // empirical CDF at the grid nodes
  std::vector<double> cdf(static_cast<size_t>(G));
  size_t k = 0;
  for (int g = 0; g < G; ++g) {
    double t = double(g) * dx;
    while (k < n && x[k] <= t) ++k;
    cdf[size_t(g)] = double(k) / double(n);
  }
  cdf[size_t(G - 1)] = 1.0;

  ref.bandwidth_ = h;
  ref.density_ = std::move(f);
  ref.cdf_ = std::move(cdf);
  return ref;
}

double eval_density(const ReferenceDistribution& ref, double s) {
  if (!ref.fitted()) throw std::logic_error("density not fitted");
  const auto& f = ref.density_values();
  const int G = int(f.size());
  const double smax = ref.s_max_hat();
  if (s < 0 || s > smax) return 0;
  double u = s / smax * double(G - 1);
  int i = int(u);
  if (i >= G - 1) return f[size_t(G - 1)];
  double w = u - double(i);
  return f[size_t(i)] * (1 - w) + f[size_t(i) + 1] * w;
}

double eval_cdf(const ReferenceDistribution& ref, double s) {
  const auto& x = ref.sqrt_samples();
  auto it = std::upper_bound(x.begin(), x.end(), s);
  return double(it - x.begin()) / double(x.size());
}

namespace {

constexpr char kMagic[4] = {'S', 'Z', 'U', 'F'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& is, const std::string& path) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("truncated reference cache: " + path);
  return v;
}

}  // namespace

void save_reference(const ReferenceDistribution& ref, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, std::uint64_t(ref.sqrt_samples().size()));
  put(os, ref.shape_hash());
  put(os, std::uint32_t(ref.fitted() ? ref.grid_size() : 0));
  put(os, ref.fitted() ? ref.bandwidth() : 0.0);
  os.write(reinterpret_cast<const char*>(ref.sqrt_samples().data()),
           std::streamsize(ref.sqrt_samples().size() * sizeof(double)));
  if (!os) throw std::runtime_error("short write: " + path);
}

ReferenceDistribution load_reference(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open reference cache: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a reference cache (bad magic): " + path);
  auto version = get<std::uint32_t>(is, path);
  if (version != kVersion)
    throw std::runtime_error("unsupported reference cache version " +
                             std::to_string(version) + ": " + path);
  auto count = get<std::uint64_t>(is, path);
  auto hash = get<std::uint64_t>(is, path);
  auto grid = get<std::uint32_t>(is, path);
  auto bw = get<double>(is, path);
  if (count == 0 || count > (std::uint64_t(1) << 33))
    throw std::runtime_error("implausible sample count in reference cache: " + path);
  std::vector<double> samples(static_cast<size_t>(count));
  is.read(reinterpret_cast<char*>(samples.data()),
          std::streamsize(count * sizeof(double)));
  if (!is) throw std::runtime_error("truncated reference cache: " + path);
  ReferenceDistribution ref(std::move(samples), hash);
  // the fit is recomputed from the stored samples and bandwidth, which is
  // deterministic, so load(save(x)) reproduces x bit for bit
  if (grid > 0) ref = fit_density(std::move(ref), int(grid), bw);
  return ref;
}

}  // namespace sizeunfold
