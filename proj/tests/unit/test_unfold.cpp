#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "sizeunfold/unfold.hpp"
#include "test_util.hpp"

using namespace sizeunfold;

namespace {

const double kSqrtPi = std::sqrt(std::numbers::pi);

// two-atom matrix with hand-filled values, rows complete
AlphaMatrix hand_matrix(double a11, double a12, double a21, double a22) {
  AlphaMatrix A;
  A.n = 2;
  A.s = {1.0, 2.0};
  A.s_max_hat = 3.0;
  A.col_lo = {0, 0};
  A.row_off = {0, 2, 4};
  A.vd = {a11, a12, a21, a22};
  return A;
}

// exact isotonic solution by the minimax representation:
// z_j = max_{a<=j} min_{b>=j} weighted mean of y[a..b]
std::vector<double> isotonic_oracle(const std::vector<double>& y,
                                    const std::vector<double>& w) {
  size_t n = y.size();
  std::vector<double> z(n);
  for (size_t j = 0; j < n; ++j) {
    double best = -1e300;
    for (size_t a = 0; a <= j; ++a) {
      double worst = 1e300;
      for (size_t b = j; b < n; ++b) {
        double num = 0, den = 0;
        for (size_t k = a; k <= b; ++k) {
          num += w[k] * y[k];
          den += w[k];
        }
        worst = std::min(worst, num / den);
      }
      best = std::max(best, worst);
    }
    z[j] = best;
  }
  return z;
}

std::vector<double> ball_instance(int n, unsigned seed) {
  StepCDF sizes({0.6, 1.0, 1.5}, {0.3, 0.4, 0.3});
  Rng rng(seed);
  return forward_sample(AnalyticBall{}, sizes, n, rng);
}

}  // namespace

TEST_SUITE_BEGIN("unfold");

TEST_CASE("alpha entries are the scaled reference density") {
  auto A = build_alpha(AnalyticBall{}, {1.5, 1.0});
  CHECK(A.n == 2);
  CHECK(A.s == std::vector<double>{1.0, 1.5});  // sorted on build
  CHECK(A.tie_perturbations == 0);
  CHECK(!A.use_float);

  CHECK(A.alpha(0, 0) == doctest::Approx(analytic_ball_density_sqrt(1.0)).epsilon(1e-15));
  CHECK(A.alpha(0, 1) ==
        doctest::Approx(analytic_ball_density_sqrt(1.0 / 1.5) / 1.5).epsilon(1e-15));
  CHECK(A.alpha(1, 0) == doctest::Approx(analytic_ball_density_sqrt(1.5)).epsilon(1e-15));
  CHECK(A.alpha(1, 1) ==
        doctest::Approx(analytic_ball_density_sqrt(1.0) / 1.5).epsilon(1e-15));
}

TEST_CASE("alpha is zero exactly where the ratio leaves the support") {
  // 2.0 / 1.0 = 2 > sqrt(pi), so the big observation cannot come from the
  // small atom
  auto A = build_alpha(AnalyticBall{}, {1.0, 2.0});
  CHECK(A.col_lo[0] == 0);
  CHECK(A.col_lo[1] == 1);
  CHECK(A.alpha(1, 0) == 0);
  CHECK(A.alpha(1, 1) > 0);
  CHECK(A.nnz() == 3);
}

TEST_CASE("an observation outside every atom's reach is an error") {
  // reference with support well below 1: even the diagonal ratio of 1 lies
  // outside it, so the largest observation always has an all-zero row
  Rng rng(111);
  std::vector<double> small(2000);
  for (auto& v : small) v = 0.1 + 0.3 * rng.uniform();
  auto ref = fit_density(ReferenceDistribution(std::move(small)));
  CHECK(ref.s_max_hat() < 0.5);

  CHECK_THROWS_WITH_AS(build_alpha(ref, {0.05, 1.0}), doctest::Contains("1.000000"),
                       std::invalid_argument);
}

TEST_CASE("ties are split apart and counted") {
  auto A = build_alpha(AnalyticBall{}, {1.0, 1.0, 1.0, 2.0});
  CHECK(A.tie_perturbations == 2);
  for (size_t i = 1; i < A.s.size(); ++i) CHECK(A.s[i] > A.s[i - 1]);
  CHECK(A.s[1] == std::nextafter(1.0, 2.0));

  CHECK_THROWS(build_alpha(AnalyticBall{}, {}));
  CHECK_THROWS(build_alpha(AnalyticBall{}, {1.0, -2.0}));
  CHECK_THROWS(build_alpha(AnalyticBall{}, {1.0, 0.0}));
  CHECK_THROWS(build_alpha(AnalyticBall{}, {std::nan(""), 1.0}));
}

TEST_CASE("alpha needs a fitted reference") {
  ReferenceDistribution raw({0.5, 1.0, 1.5});
  CHECK_THROWS_WITH_AS(build_alpha(raw, {0.5, 1.0}), doctest::Contains("fitted"),
                       std::invalid_argument);
}

TEST_CASE("likelihood of a hand-filled two-atom instance") {
  auto A = hand_matrix(1.0, 0.5, 0.5, 2.0);
  auto L = log_likelihood(A, {0.5, 1.0});
  // D = (1*.5 + .5*.5, .5*.5 + 2*.5) = (.75, 1.25)
  CHECK(L.D[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(L.D[1] == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(L.value ==
        doctest::Approx(0.5 * (std::log(0.75) + std::log(1.25))).epsilon(1e-15));

  CHECK_THROWS(log_likelihood(A, {0.5}));
  CHECK_THROWS(log_likelihood(A, {0.5, std::nan("")}));

  // total mass on the unreachable atom: -inf, not a crash
  AlphaMatrix Z = hand_matrix(1.0, 0.0, 0.0, 2.0);
  Z.vd = {1.0, 0.0, 0.0, 2.0};
  auto L2 = log_likelihood(Z, {0.0, 0.0});
  CHECK(L2.value == -std::numeric_limits<double>::infinity());
}

TEST_CASE("em step matches the hand computation and self-normalizes") {
  auto A = hand_matrix(1.0, 0.5, 0.5, 2.0);
  auto b = em_step(A, {0.5, 1.0});
  // p' = (13/30, 17/30)
  CHECK(b[0] == doctest::Approx(13.0 / 30).epsilon(1e-14));
  CHECK(b[1] == doctest::Approx(1.0).epsilon(1e-14));

  // any positive input renormalizes to total mass 1
  auto c = em_step(A, {0.2, 0.6});
  CHECK(c.back() == doctest::Approx(1.0).epsilon(1e-12));

  // zero-mass atoms stay at zero
  auto z = em_step(A, {0.0, 1.0});
  CHECK(z[0] == 0.0);
  CHECK(z[1] == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS(em_step(A, {0.5, 0.2}));  // decreasing
}

TEST_CASE("gradient and diagonal hessian match finite differences") {
  auto s = ball_instance(25, 901);
  auto A = build_alpha(AnalyticBall{}, s);
  std::vector<double> beta(25);
  Rng rng(17);
  double acc = 0;
  for (auto& b : beta) {
    acc += 0.02 + rng.uniform() * 0.05;
    b = acc;
  }
  for (auto& b : beta) b /= acc * 1.1;  // keep away from the boundary

  auto gh = gradient_and_diag_hessian(A, beta);
  const double h = 1e-6;
  for (int j = 0; j < 25; ++j) {
    auto up = beta, dn = beta;
    up[size_t(j)] += h;
    dn[size_t(j)] -= h;
    double lu = log_likelihood(A, up).value;
    double ld = log_likelihood(A, dn).value;
    double l0 = log_likelihood(A, beta).value;
    double g_num = (lu - ld) / (2 * h);
    double h_num = (lu - 2 * l0 + ld) / (h * h);
    CHECK(gh.grad[size_t(j)] == doctest::Approx(g_num).epsilon(1e-5));
    CHECK(gh.diag_hess[size_t(j)] == doctest::Approx(h_num).epsilon(2e-3));
    CHECK(gh.diag_hess[size_t(j)] <= 0);
  }
}

TEST_CASE("weighted isotonic regression against the minimax oracle") {
  auto z = isotonic_ls({3.0, 1.0, 2.0}, {1.0, 1.0, 1.0});
  CHECK(z == std::vector<double>{2.0, 2.0, 2.0});

  auto w2 = isotonic_ls({1.0, 0.0}, {1.0, 3.0});
  CHECK(w2[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(w2[1] == doctest::Approx(0.25).epsilon(1e-15));

  auto id = isotonic_ls({1.0, 2.0, 3.0}, {5.0, 1.0, 2.0});
  CHECK(id == std::vector<double>{1.0, 2.0, 3.0});

  Rng rng(55);
  for (int rep = 0; rep < 40; ++rep) {
    size_t n = 2 + size_t(rng.uniform() * 10);
    std::vector<double> y(n), w(n);
    for (size_t j = 0; j < n; ++j) {
      y[j] = rng.uniform(-2, 2);
      w[j] = 0.1 + rng.uniform() * 3;
    }
    auto fast = isotonic_ls(y, w);
    auto slow = isotonic_oracle(y, w);
    for (size_t j = 0; j < n; ++j)
      CHECK(fast[j] == doctest::Approx(slow[j]).epsilon(1e-10));
    for (size_t j = 1; j < n; ++j) CHECK(fast[j] >= fast[j - 1] - 1e-12);
  }

  CHECK_THROWS(isotonic_ls({1.0}, {1.0, 2.0}));
  CHECK_THROWS(isotonic_ls({1.0}, {0.0}));
}

TEST_CASE("icm step decreases the penalized objective") {
  auto s = ball_instance(60, 303);
  auto A = build_alpha(AnalyticBall{}, s);
  std::vector<double> beta(60);
  for (int j = 0; j < 60; ++j) beta[size_t(j)] = double(j + 1) / 60.0;

  auto phi = [&](const std::vector<double>& b) {
    return -log_likelihood(A, b).value + b.back();
  };
  double p0 = phi(beta);
  auto r = icm_step(A, beta);
  CHECK(!r.stalled);
  CHECK(phi(r.beta) < p0);
  CHECK(r.beta.front() >= 0);
  for (size_t j = 1; j < r.beta.size(); ++j) CHECK(r.beta[j] >= r.beta[j - 1] - 1e-12);

  // iterating keeps decreasing
  auto r2 = icm_step(A, r.beta);
  CHECK(phi(r2.beta) <= phi(r.beta));
}

TEST_CASE("hybrid fit converges to a verified maximum") {
  auto s = ball_instance(250, 404);
  auto A = build_alpha(AnalyticBall{}, s);
  SolverConfig cfg;
  cfg.eps_stop = 1e-8;
  cfg.stable_iters = 5;
  cfg.max_iters = 3000;
  auto st = fit(A, cfg);

  CHECK(st.converged);
  CHECK(!st.ever_stalled);
  CHECK(st.beta.back() == 1.0);
  for (size_t j = 1; j < st.beta.size(); ++j) CHECK(st.beta[j] >= st.beta[j - 1]);
  CHECK(st.beta.front() >= 0);
  INFO("kkt residual = ", st.kkt_residual);
  CHECK(st.kkt_residual < 1e-6);
  CHECK(int(st.loglik_trace.size()) == st.iterations + 1);
  CHECK(st.loglik_trace.back() >= st.loglik_trace.front());
  CHECK(st.loglik == doctest::Approx(st.loglik_trace.back()).epsilon(1e-9));

  // the fitted step function is a proper cdf on the observed atoms
  auto cdf = biased_size_cdf(A, st);
  CHECK(cdf.atoms() == A.s);
  CHECK(cdf.cum().back() == 1.0);
}

TEST_CASE("the three solvers find the same maximum") {
  auto s = ball_instance(120, 505);
  auto A = build_alpha(AnalyticBall{}, s);

  SolverConfig em_cfg;
  em_cfg.method = SolverConfig::Method::EM;
  em_cfg.eps_stop = 1e-7;
  em_cfg.stable_iters = 10;
  em_cfg.max_iters = 30000;
  SolverConfig icm_cfg = em_cfg;
  icm_cfg.method = SolverConfig::Method::ICM;
  icm_cfg.max_iters = 5000;
  SolverConfig hy_cfg = em_cfg;
  hy_cfg.method = SolverConfig::Method::Hybrid;
  hy_cfg.max_iters = 5000;

  auto em = fit(A, em_cfg);
  auto icm = fit(A, icm_cfg);
  auto hy = fit(A, hy_cfg);

  CHECK(em.converged);
  CHECK(icm.converged);
  CHECK(hy.converged);
  INFO("iters em/icm/hybrid = ", em.iterations, " ", icm.iterations, " ",
       hy.iterations);
  INFO("loglik em/icm/hybrid = ", em.loglik, " ", icm.loglik, " ", hy.loglik);
  CHECK(em.loglik == doctest::Approx(hy.loglik).epsilon(1e-7));
  CHECK(icm.loglik == doctest::Approx(hy.loglik).epsilon(1e-7));
  double d = 0;
  for (size_t j = 0; j < em.beta.size(); ++j)
    d = std::max(d, std::abs(em.beta[j] - hy.beta[j]));
  INFO("beta gap em vs hybrid = ", d);
  CHECK(d < 0.01);

  // the hybrid needs far fewer iterations than plain ICM
  CHECK(hy.iterations < icm.iterations);
}

TEST_CASE("solver configuration is validated") {
  auto A = build_alpha(AnalyticBall{}, {1.0, 1.2, 1.4});
  SolverConfig bad;
  bad.line_search_eps = 0.7;
  CHECK_THROWS(fit(A, bad));
  bad = SolverConfig{};
  bad.max_iters = 0;
  CHECK_THROWS(fit(A, bad));
  bad = SolverConfig{};
  bad.eps_stop = 0;
  CHECK_THROWS(fit(A, bad));
}

TEST_CASE("large instances store the kernel in single precision") {
  Rng rng(606);
  std::vector<double> s(8001);
  for (auto& v : s) v = 1.0 + rng.uniform();
  auto A = build_alpha(AnalyticBall{}, s);
  CHECK(A.use_float);
  CHECK(A.vd.empty());
  CHECK(A.nnz() == A.row_off.back());

  // entries agree with the double formula to float precision
  for (int i : {0, 1000, 5000, 8000}) {
    int j = std::max(i, A.col_lo[size_t(i)]);
    double want = analytic_ball_density_sqrt(A.s[size_t(i)] / A.s[size_t(j)]) /
                  A.s[size_t(j)];
    if (want > 0)
      CHECK(A.alpha(i, j) == doctest::Approx(want).epsilon(1e-6));
  }

  // one em sweep runs and normalizes
  std::vector<double> beta(8001);
  for (size_t j = 0; j < beta.size(); ++j) beta[j] = double(j + 1) / 8001.0;
  auto b = em_step(A, beta);
  CHECK(b.back() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("log-domain likelihood equals the direct one plus mean log s") {
  auto cube = make_cube();
  Rng rng(707);
  auto ref = sample_reference(cube, 50000, rng, 1);
  ref = fit_density(std::move(ref));

  auto exp1 = ParametricSize::exponential(1.0);
  auto data = forward_sample(ref, exp1, 200, rng);
  auto A = build_alpha(ref, data);

  double mls = 0;
  for (double v : A.s) mls += std::log(v);
  mls /= double(A.s.size());

  std::vector<double> uniform(A.s.size());
  for (size_t j = 0; j < uniform.size(); ++j)
    uniform[j] = double(j + 1) / double(uniform.size());
  double direct = log_likelihood(A, uniform).value;
  double logdom = log_likelihood_log_domain(ref, A.s, uniform);
  INFO("identity gap = ", std::abs(logdom - direct - mls));
  CHECK(std::abs(logdom - direct - mls) < 1e-10);

  auto st = fit(A);
  double direct2 = log_likelihood(A, st.beta).value;
  double logdom2 = log_likelihood_log_domain(ref, A.s, st.beta);
  CHECK(std::abs(logdom2 - direct2 - mls) < 1e-10);
}

TEST_CASE("uniqueness diagnostic flags dependent support columns") {
  auto s = ball_instance(40, 808);
  auto A = build_alpha(AnalyticBall{}, s);
  auto st = fit(A);
  auto d = uniqueness_diagnostic(A, st.beta);
  CHECK(d.support_size > 0);
  CHECK(d.rank == d.support_size);
  CHECK(d.unique);

  // duplicated columns cannot be told apart
  AlphaMatrix dup = hand_matrix(1.0, 1.0, 2.0, 2.0);
  auto dd = uniqueness_diagnostic(dup, {0.5, 1.0});
  CHECK(dd.support_size == 2);
  CHECK(dd.rank == 1);
  CHECK(!dd.unique);
}

TEST_SUITE_END();
