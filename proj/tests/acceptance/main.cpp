// End-to-end acceptance checks: one PASS/FAIL line per criterion, with the
// measured quantities and the pinned windows printed alongside.  Heavy
// fixtures (multi-million-sample references, replicated experiments) are
// cached on disk and memoized in-process, so `--criterion N` runs stay cheap
// after the first full pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sizeunfold/bias.hpp"
#include "sizeunfold/geometry.hpp"
#include "sizeunfold/harness.hpp"
#include "sizeunfold/refdist.hpp"
#include "sizeunfold/regularize.hpp"
#include "sizeunfold/rng.hpp"
#include "sizeunfold/unfold.hpp"

using namespace sizeunfold;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

double mean_of(const std::vector<double>& v) {
  double acc = 0;
  for (double x : v) acc += x;
  return acc / double(v.size());
}

// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
double ks_vs_cdf(std::vector<double> x, double (*cdf)(double)) {
  std::sort(x.begin(), x.end());
  const double n = double(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double g = cdf(x[i]);
    d = std::max(d, std::max(double(i + 1) / n - g, g - double(i) / n));
  }
  return d;
}

// Two-sample Kolmogorov-Smirnov statistic; ties advance both sides at once.
double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() || j < b.size()) {
    double x = std::numeric_limits<double>::infinity();
    if (i < a.size()) x = a[i];
    if (j < b.size()) x = std::min(x, b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  return d;
}

// Exact sup distance between two step CDFs: the maximum is attained at an
// atom of either one, checking values just after each jump suffices because
// the value just before equals the one after the previous event.
double step_sup_distance(const StepCDF& a, const StepCDF& b) {
  std::size_t i = 0, j = 0;
  double ca = 0, cb = 0, d = 0;
  const auto& xa = a.atoms();
  const auto& xb = b.atoms();
  while (i < xa.size() || j < xb.size()) {
    double x = std::numeric_limits<double>::infinity();
    if (i < xa.size()) x = xa[i];
    if (j < xb.size()) x = std::min(x, xb[j]);
    while (i < xa.size() && xa[i] == x) ca = a.cum()[i++];
    while (j < xb.size() && xb[j] == x) cb = b.cum()[j++];
    d = std::max(d, std::abs(ca - cb));
  }
  return d;
}

// Cumulative beta with increments in [0.2, 1.8] / n: strictly increasing
// with a gap floor, so central differences stay feasible.
std::vector<double> random_beta(int n, Rng& rng) {
  std::vector<double> b(static_cast<std::size_t>(n));
  double acc = 0;
  for (auto& v : b) {
    acc += rng.uniform(0.2, 1.8) / double(n);
    v = acc;
  }
  return b;
}

ParametricSize random_truth(int k, Rng& rng) {
  if (k % 2 == 0) return ParametricSize::exponential(rng.uniform(0.5, 2.0));
  return ParametricSize::lognormal(rng.uniform(-0.3, 0.8), rng.uniform(0.3, 0.8));
}

// Minimizer of sum_i w_i (y_i - x_i)^2 over nondecreasing x restricted to a
// uniform value lattice, by forward dynamic programming with a running
// prefix minimum; reconstructs the optimal lattice sequence.
std::vector<double> lattice_isotonic(const std::vector<double>& y,
                                     const std::vector<double>& w, double step) {
  const int m = int(y.size());
  const int k0 = int(std::floor(*std::min_element(y.begin(), y.end()) / step));
  const int k1 = int(std::ceil(*std::max_element(y.begin(), y.end()) / step));
  const int L = k1 - k0 + 1;
  auto level = [&](int v) { return double(k0 + v) * step; };

  std::vector<double> prev(static_cast<std::size_t>(L)), cur(prev);
  std::vector<int> from(static_cast<std::size_t>(m) * static_cast<std::size_t>(L), 0);
  for (int v = 0; v < L; ++v) {
    double d = y[0] - level(v);
    prev[std::size_t(v)] = w[0] * d * d;
  }
  for (int i = 1; i < m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int bestv = 0;
    for (int v = 0; v < L; ++v) {
      if (prev[std::size_t(v)] < best) {
        best = prev[std::size_t(v)];
        bestv = v;
      }
      double d = y[std::size_t(i)] - level(v);
      cur[std::size_t(v)] = w[std::size_t(i)] * d * d + best;
      from[std::size_t(i) * std::size_t(L) + std::size_t(v)] = bestv;
    }
    std::swap(prev, cur);
  }
  int v = int(std::min_element(prev.begin(), prev.end()) - prev.begin());
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int i = m - 1; i >= 0; --i) {
    out[std::size_t(i)] = level(v);
    if (i > 0) v = from[std::size_t(i) * std::size_t(L) + std::size_t(v)];
  }
  return out;
}

struct LiteRep {
  double err_biased;
  int iterations;
  bool converged;
  double fit_seconds;
};

// Shared fixtures.  References use 2e6 sections each and live in cache_dir
// keyed by shape hash, so reruns skip the sampling.  Experiment results are
// memoized by their full parameter key; criteria that quote the same
// experiment share one run.
struct Lab {
  std::string cache_dir = "acceptance_cache";
  std::map<std::string, ReferenceDistribution> refs;
  std::map<std::string, std::vector<LiteRep>> lite_memo;
  std::map<std::string, ExperimentSummary> full_memo;

  const ReferenceDistribution& reference(const std::string& shape) {
    auto it = refs.find(shape);
    if (it != refs.end()) return it->second;
    Polyhedron K = shape == "cube"          ? make_cube()
                   : shape == "tetrahedron" ? make_tetrahedron()
                                            : make_dodecahedron();
    std::cerr << "[building reference: " << shape << ", 2e6 sections]" << std::endl;
    Rng rng(4242);
    ReferenceDistribution ref = cached_reference(K, 2000000, cache_dir, rng);
    return refs.emplace(shape, std::move(ref)).first->second;
  }

  // full pipeline per replication, truncation selection included
  const ExperimentSummary& full(const std::string& shape, const ParametricSize& truth,
                                const std::string& truth_key, std::int64_t n, int reps,
                                std::uint64_t seed) {
    std::string key = shape + "|" + truth_key + "|n" + std::to_string(n) + "|r" +
                      std::to_string(reps) + "|s" + std::to_string(seed) + "|full";
    auto it = full_memo.find(key);
    if (it != full_memo.end()) return it->second;
    const ReferenceDistribution& ref = reference(shape);
    std::cerr << "[experiment " << key << "]" << std::endl;
    ExperimentConfig cfg;
    cfg.n = n;
    cfg.reps = reps;
    cfg.seed = seed;
    return full_memo.emplace(std::move(key), run_experiment(ref, truth, cfg))
        .first->second;
  }

  // biased-CDF errors only: same sampling and fit as the full pipeline but
  // without the truncation selection, which criteria on biased errors alone
  // never look at
  const std::vector<LiteRep>& lite(const std::string& shape, const ParametricSize& truth,
                                   const std::string& truth_key, std::int64_t n, int reps,
                                   std::uint64_t seed, const SolverConfig& scfg,
                                   const std::string& solver_key) {
    std::string key = shape + "|" + truth_key + "|n" + std::to_string(n) + "|r" +
                      std::to_string(reps) + "|s" + std::to_string(seed) + "|" +
                      solver_key;
    auto it = lite_memo.find(key);
    if (it != lite_memo.end()) return it->second;
    const ReferenceDistribution& ref = reference(shape);
    std::cerr << "[experiment " << key << "]" << std::endl;
    std::vector<LiteRep> out;
    out.reserve(static_cast<std::size_t>(reps));
    Rng base(seed);
    for (int i = 0; i < reps; ++i) {
      Rng stream = base.split(std::uint64_t(i));
      auto s = forward_sample(ref, truth, n, stream);
      auto A = build_alpha(ref, s);
      auto t0 = Clock::now();
      FitState fs = fit(A, scfg);
      double secs = seconds_since(t0);
      StepCDF biased = biased_size_cdf(A, fs);
      double err =
          sup_distance(biased, [&](double x) { return truth.biased_cdf(x); });
      out.push_back({err, fs.iterations, fs.converged, secs});
    }
    return lite_memo.emplace(std::move(key), std::move(out)).first->second;
  }
};

double mean_err(const std::vector<LiteRep>& reps) {
  double acc = 0;
  for (const auto& r : reps) acc += r.err_biased;
  return acc / double(reps.size());
}

// Replication counts for the error-band experiments.  The n=1000 bands use
// the same 100 replications their published means were computed from.  The
// n=10000 lognormal fit costs minutes per replication on one core, so its
// band is checked with 12 replications: the per-replication error sd there
// is about 0.005, putting the standard error of the mean near 0.0015,
// several times smaller than the band's margin.
constexpr int kBandReps = 100;
constexpr int kBigFitReps = 12;

struct Outcome {
  bool pass;
  std::string detail;
};

// 1: sampled sections of a fine sphere mesh against the closed-form
// sqrt-area law of the ball
Outcome ball_oracle(Lab&) {
  auto t0 = Clock::now();
  Polyhedron mesh = make_ball_mesh(160);
  Rng rng(101);
  auto s = sample_section_sqrt_areas(mesh, 100000, rng);
  double ks = ks_vs_cdf(std::move(s), analytic_ball_cdf_sqrt);
  double secs = seconds_since(t0);
  return {ks < 0.01 && secs < 60.0,
          "ks " + fmt(ks) + " < 0.01 at 100000 sections, frequency-160 mesh, " +
              fmt(secs, 3) + "s < 60s"};
}

// 2: areas of a doubled body against 4x the areas of the original, and a
// randomly rotated body against the original
Outcome invariance(Lab&) {
  auto t0 = Clock::now();
  Polyhedron K = make_tetrahedron();
  Rng rng(202);
  const std::int64_t n = 100000;
  auto squares = [](const std::vector<double>& v, double f) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = f * v[i] * v[i];
    return out;
  };
  auto base = sample_section_sqrt_areas(K, n, rng);
  auto doubled = sample_section_sqrt_areas(scale(K, 2.0), n, rng);
  double ks_scale = ks_two_sample(squares(doubled, 1.0), squares(base, 4.0));
  Vec3 axis = normalized({rng.normal(), rng.normal(), rng.normal()});
  auto turned = sample_section_sqrt_areas(
      rotate(K, axis, rng.uniform(0, 2 * std::numbers::pi)), n, rng);
  double ks_rot = ks_two_sample(squares(turned, 1.0), squares(base, 1.0));
  double secs = seconds_since(t0);
  return {ks_scale < 0.015 && ks_rot < 0.015 && secs < 120.0,
          "ks " + fmt(ks_scale) + " (doubled) and " + fmt(ks_rot) +
              " (rotated) < 0.015 at 100000 sections each, " + fmt(secs, 3) +
              "s < 120s"};
}

// 3: the likelihood of the size mixture and the likelihood of the
// log-domain deconvolution differ by exactly the mean log observation
Outcome likelihood_identity(Lab& lab) {
  const auto& ref = lab.reference("cube");
  Rng rng(303);
  double worst = 0;
  for (int k = 0; k < 50; ++k) {
    auto s = forward_sample(ref, random_truth(k, rng), 200, rng);
    auto A = build_alpha(ref, s);
    auto beta = random_beta(A.n, rng);
    double direct = log_likelihood(A, beta).value;
    double logdom = log_likelihood_log_domain(ref, A.s, beta);
    double mls = 0;
    for (double v : A.s) mls += std::log(v);
    mls /= double(A.n);
    worst = std::max(worst, std::abs(logdom - direct - mls));
  }
  return {worst < 1e-10,
          "largest gap " + fmt(worst, 3) + " < 1e-10 across 50 instances, n=200"};
}

// 4: analytic gradient of the solver objective against central differences
Outcome gradient_check(Lab& lab) {
  const auto& ref = lab.reference("cube");
  Rng rng(404);
  auto truth = ParametricSize::exponential(1.0);
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    auto s = forward_sample(ref, truth, 100, rng);
    auto A = build_alpha(ref, s);
    auto beta = random_beta(A.n, rng);
    auto gh = gradient_and_diag_hessian(A, beta);
    auto phi = [&](const std::vector<double>& b) {
      return -log_likelihood(A, b).value + b.back();
    };
    const double h = 1e-6;
    double num = 0, den = 1;
    for (int j = 0; j < A.n; ++j) {
      auto bp = beta, bm = beta;
      bp[std::size_t(j)] += h;
      bm[std::size_t(j)] -= h;
      double fd = (phi(bp) - phi(bm)) / (2 * h);
      double an = -gh.grad[std::size_t(j)] + (j + 1 == A.n ? 1.0 : 0.0);
      num = std::max(num, std::abs(an - fd));
      den = std::max(den, std::abs(an));
    }
    worst = std::max(worst, num / den);
  }
  return {worst < 1e-5,
          "worst relative error " + fmt(worst, 3) + " < 1e-5 on 20 points, n=100"};
}

// 5: the EM log-likelihood trace never decreases
Outcome em_monotone(Lab&) {
  Rng rng(505);
  double worst_drop = 0;
  long long iters = 0;
  for (int k = 0; k < 20; ++k) {
    auto s = forward_sample(AnalyticBall{}, random_truth(k, rng), 200, rng);
    auto A = build_alpha(AnalyticBall{}, s);
    SolverConfig cfg;
    cfg.method = SolverConfig::Method::EM;
    cfg.max_iters = 3000;
    FitState st = fit(A, cfg);
    for (std::size_t i = 0; i + 1 < st.loglik_trace.size(); ++i)
      worst_drop = std::max(worst_drop, st.loglik_trace[i] - st.loglik_trace[i + 1]);
    iters += st.iterations;
  }
  return {worst_drop < 1e-12, "largest drop " + fmt(worst_drop, 3) + " < 1e-12 over " +
                                  std::to_string(iters) + " EM iterations"};
}

// 6: EM run to convergence, ICM, and the hybrid land on the same optimum
Outcome solver_agreement(Lab& lab) {
  const auto& ref = lab.reference("dodecahedron");
  Rng rng(606);
  auto s = forward_sample(ref, ParametricSize::lognormal(2.0, 0.5), 500, rng);
  auto A = build_alpha(ref, s);
  SolverConfig em;
  em.method = SolverConfig::Method::EM;
  em.eps_stop = 1e-6;
  em.max_iters = 100000;
  SolverConfig icm;
  icm.method = SolverConfig::Method::ICM;
  SolverConfig hyb;
  double le = fit(A, em).loglik;
  double li = fit(A, icm).loglik;
  double lh = fit(A, hyb).loglik;
  double spread = std::max({le, li, lh}) - std::min({le, li, lh});
  std::ostringstream d;
  d << std::setprecision(10) << "loglik em " << le << ", icm " << li << ", hybrid "
    << lh << ", spread " << fmt(spread, 2) << " <= 1e-4";
  return {spread <= 1e-4, d.str()};
}

// 7: the isotonic solver against brute-force lattice minimization
Outcome isotonic_oracle(Lab&) {
  Rng rng(707);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> y(8), w(8);
    for (auto& v : y) v = rng.uniform(0.0, 1.0);
    for (auto& v : w) v = rng.uniform(0.5, 2.0);
    auto exact = isotonic_ls(y, w);
    auto lattice = lattice_isotonic(y, w, 1e-3);
    for (int j = 0; j < 8; ++j)
      worst = std::max(worst, std::abs(exact[std::size_t(j)] - lattice[std::size_t(j)]));
  }
  return {worst <= 1e-3 + 1e-9,
          "largest deviation " + fmt(worst, 3) + " <= 1e-3 on 100 8-point instances"};
}

// 8: dodecahedron, exponential sizes, n=1000: mean sup errors of the biased
// and the debiased estimates inside their bands
Outcome dodecahedron_bands(Lab& lab) {
  const auto& sum = lab.full("dodecahedron", ParametricSize::exponential(1.0), "exp1",
                             1000, kBandReps, 881);
  double mb = 0, ms = 0;
  for (const auto& r : sum.reps) {
    mb += r.err_biased;
    ms += r.err_size;
  }
  mb /= double(sum.reps.size());
  ms /= double(sum.reps.size());
  bool pass = 0.045 <= mb && mb <= 0.070 && 0.09 <= ms && ms <= 0.15;
  return {pass, "mean biased error " + fmt(mb) + " in [0.045, 0.070], mean size error " +
                    fmt(ms) + " in [0.09, 0.15], " + std::to_string(kBandReps) + " reps"};
}

// 9: cube: exponential n=1000 and lognormal(2, 0.5) n=10000 biased-error bands
Outcome cube_bands(Lab& lab) {
  SolverConfig hyb;
  const auto& ex = lab.lite("cube", ParametricSize::exponential(1.0), "exp1", 1000,
                            kBandReps, 991, hyb, "hybrid");
  const auto& ln = lab.lite("cube", ParametricSize::lognormal(2.0, 0.5), "ln2_05",
                            10000, kBigFitReps, 992, hyb, "hybrid");
  double me = mean_err(ex), ml = mean_err(ln);
  bool pass = 0.050 <= me && me <= 0.080 && 0.030 <= ml && ml <= 0.045;
  return {pass, "mean biased error " + fmt(me) + " in [0.050, 0.080] (exp, n=1000, " +
                    std::to_string(kBandReps) + " reps) and " + fmt(ml) +
                    " in [0.030, 0.045] (lognormal, n=10000, " +
                    std::to_string(kBigFitReps) + " reps)"};
}

// 10: at n=1000 with exponential sizes the mean biased error grows from
// dodecahedron to cube to tetrahedron
Outcome shape_ordering(Lab& lab) {
  SolverConfig hyb;
  const auto& dsum = lab.full("dodecahedron", ParametricSize::exponential(1.0), "exp1",
                              1000, kBandReps, 881);
  double d = 0;
  for (const auto& r : dsum.reps) d += r.err_biased;
  d /= double(dsum.reps.size());
  double c = mean_err(lab.lite("cube", ParametricSize::exponential(1.0), "exp1", 1000,
                               kBandReps, 991, hyb, "hybrid"));
  double t = mean_err(lab.lite("tetrahedron", ParametricSize::exponential(1.0), "exp1",
                               1000, kBandReps, 993, hyb, "hybrid"));
  return {d < c && c < t, "mean biased errors: dodecahedron " + fmt(d) + " < cube " +
                              fmt(c) + " < tetrahedron " + fmt(t)};
}

// 11: the median biased error strictly shrinks as n grows
Outcome error_decay(Lab& lab) {
  SolverConfig hyb;
  auto truth = ParametricSize::exponential(1.0);
  std::vector<double> med;
  for (std::int64_t n : {250, 1000, 4000}) {
    const auto& reps = lab.lite("dodecahedron", truth, "exp1", n, 20, 1111, hyb, "hybrid");
    std::vector<double> errs;
    for (const auto& r : reps) errs.push_back(r.err_biased);
    med.push_back(nearest_rank(errs, 0.5));
  }
  return {med[0] > med[1] && med[1] > med[2],
          "median biased error " + fmt(med[0]) + " (n=250) > " + fmt(med[1]) +
              " (n=1000) > " + fmt(med[2]) + " (n=4000), 20 seeds each"};
}

// 12: the hybrid solver needs at least 5x fewer iterations and 3x less
// wall-clock than plain ICM on the same data
Outcome hybrid_speedup(Lab& lab) {
  auto truth = ParametricSize::lognormal(2.0, 0.5);
  SolverConfig icm;
  icm.method = SolverConfig::Method::ICM;
  SolverConfig hyb;
  bool pass = true;
  std::ostringstream d;
  for (std::int64_t n : {1000, 2000}) {
    const auto& ri = lab.lite("dodecahedron", truth, "ln2_05", n, 10, 1212, icm, "icm");
    const auto& rh = lab.lite("dodecahedron", truth, "ln2_05", n, 10, 1212, hyb, "hybrid");
    double ii = 0, ih = 0, si = 0, sh = 0;
    for (const auto& r : ri) {
      ii += r.iterations;
      si += r.fit_seconds;
    }
    for (const auto& r : rh) {
      ih += r.iterations;
      sh += r.fit_seconds;
    }
    ii /= double(ri.size());
    si /= double(ri.size());
    ih /= double(rh.size());
    sh /= double(rh.size());
    pass = pass && ii >= 5.0 * ih && si >= 3.0 * sh;
    if (n != 1000) d << "; ";
    d << "n=" << n << ": iterations icm " << fmt(ii, 4) << " vs hybrid " << fmt(ih, 3)
      << ", seconds icm " << fmt(si, 3) << " vs hybrid " << fmt(sh, 3);
  }
  return {pass, d.str() + " (need >= 5x iterations, >= 3x seconds)"};
}

// 13: debiasing a truncated approximation never errs by more than
// 6 E(size) ||Hb_approx - Hb||_inf / t + H(t)
Outcome truncation_bound(Lab&) {
  Rng rng(1313);
  int checks = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  bool pass = true;
  for (int rep = 0; rep < 60 && pass; ++rep) {
    int m = 2 + int(rng.next_u64() % 12);
    std::vector<double> atoms;
    while (int(atoms.size()) < m) {
      double x = rng.uniform(0.05, 4.0);
      bool close = false;
      for (double a : atoms) close = close || std::abs(a - x) < 1e-6;
      if (!close) atoms.push_back(x);
    }
    std::sort(atoms.begin(), atoms.end());
    std::vector<double> probs(atoms.size());
    double tot = 0;
    for (auto& p : probs) tot += (p = 0.01 + rng.uniform(0, 1) * rng.uniform(0, 1));
    for (auto& p : probs) p /= tot;
    StepCDF H(atoms, probs);
    StepCDF Hb = length_bias(H);

    // three perturbation styles: reweighted atoms, an empirical CDF of
    // draws, and a mixture with fresh junk atoms
    StepCDF Hnb = [&]() {
      if (rep % 3 == 0) {
        std::vector<double> q(Hb.probs());
        double qt = 0;
        for (auto& p : q) qt += (p = std::max(1e-6, p * std::exp(0.5 * rng.normal())));
        for (auto& p : q) p /= qt;
        return StepCDF(Hb.atoms(), q);
      }
      if (rep % 3 == 1) {
        int N = 40 + int(rng.next_u64() % 200);
        std::map<double, int> counts;
        for (int i = 0; i < N; ++i) ++counts[Hb.sample(rng)];
        std::vector<double> xs, ps;
        for (const auto& [x, c] : counts) {
          xs.push_back(x);
          ps.push_back(double(c) / double(N));
        }
        return StepCDF(xs, ps);
      }
      std::vector<double> xs(Hb.atoms());
      std::vector<double> ps(Hb.probs());
      for (auto& p : ps) p *= 0.8;
      for (int e = 0; e < 3; ++e) {
        double x = rng.uniform(0.05, 4.0);
        bool close = false;
        for (double a : xs) close = close || std::abs(a - x) < 1e-6;
        if (close) continue;
        xs.push_back(x);
        ps.push_back(0.2 / 3);
      }
      double pt = 0;
      for (double p : ps) pt += p;
      for (auto& p : ps) p /= pt;
      std::vector<std::size_t> idx(xs.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
      std::vector<double> sx, sp;
      for (std::size_t i : idx) {
        sx.push_back(xs[i]);
        sp.push_back(ps[i]);
      }
      return StepCDF(sx, sp);
    }();

    double db = step_sup_distance(Hnb, Hb);
    // thresholds at quantiles, at a mid-gap point, and exactly on an atom
    std::vector<double> ts = {Hb.quantile(0.1), Hb.quantile(0.35),
                              Hnb.atoms()[rng.next_u64() % Hnb.atoms().size()]};
    if (Hnb.atoms().size() > 1) {
      std::size_t g = rng.next_u64() % (Hnb.atoms().size() - 1);
      ts.push_back(0.5 * (Hnb.atoms()[g] + Hnb.atoms()[g + 1]));
    }
    for (double t : ts) {
      StepCDF Hn = H;
      try {
        Hn = debias_truncated(Hnb, t);
      } catch (const std::invalid_argument&) {
        continue;  // threshold above the perturbed support, nothing survives
      }
      double lhs = step_sup_distance(Hn, H);
      double bound = 6.0 * H.mean() * db / t + H.eval(t);
      ++checks;
      min_slack = std::min(min_slack, bound - lhs);
      if (lhs > bound + 1e-12) pass = false;
    }
  }
  return {pass, "measured error within the bound on " + std::to_string(checks) +
                    " fixture checks, smallest slack " + fmt(min_slack, 3)};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)(Lab&);
};

const Criterion kCriteria[] = {
    {1, "ball section law matches the closed form", ball_oracle},
    {2, "section areas scale quadratically and ignore rotation", invariance},
    {3, "size and log domain likelihoods agree", likelihood_identity},
    {4, "analytic gradient matches finite differences", gradient_check},
    {5, "EM never decreases the likelihood", em_monotone},
    {6, "EM, ICM, and hybrid reach the same optimum", solver_agreement},
    {7, "isotonic solver matches lattice search", isotonic_oracle},
    {8, "dodecahedron errors land in the published bands", dodecahedron_bands},
    {9, "cube errors land in the published bands", cube_bands},
    {10, "errors order dodecahedron < cube < tetrahedron", shape_ordering},
    {11, "errors shrink as the sample grows", error_decay},
    {12, "hybrid beats ICM by 5x iterations and 3x time", hybrid_speedup},
    {13, "debiased error obeys the truncation bound", truncation_bound},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  bool list = false;
  Lab lab;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      only.push_back(std::atoi(argv[++i]));
    } else if (a == "--cache-dir" && i + 1 < argc) {
      lab.cache_dir = argv[++i];
    } else if (a == "--list") {
      list = true;
    } else {
      std::cerr << "usage: acceptance [--criterion N]... [--cache-dir DIR] [--list]\n";
      return 2;
    }
  }

  int passed = 0, failed = 0;
  for (const auto& c : kCriteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end())
      continue;
    if (list) {
      std::cout << std::setw(2) << c.id << "  " << c.name << "\n";
      continue;
    }
    std::cerr << "[criterion " << c.id << " running]" << std::endl;
    auto t0 = Clock::now();
    Outcome o{false, ""};
    try {
      o = c.run(lab);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    (o.pass ? passed : failed) += 1;
    std::cout << "criterion " << std::setw(2) << c.id << (o.pass ? " PASS  " : " FAIL  ")
              << c.name << " | " << o.detail << " (" << fmt(seconds_since(t0), 3)
              << "s)" << std::endl;
  }
  if (!list) std::cout << passed << " passed, " << failed << " failed" << std::endl;
  return failed == 0 ? 0 : 1;
}
