#include "sizeunfold/unfold.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sizeunfold {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> increments(const AlphaMatrix& A, const std::vector<double>& beta) {
  if (int(beta.size()) != A.n)
    throw std::invalid_argument("beta length must match the observation count");
  std::vector<double> p(beta.size());
  double prev = 0;
  for (size_t j = 0; j < beta.size(); ++j) {
    if (!std::isfinite(beta[j]))
      throw std::invalid_argument("beta must be finite");
    p[j] = beta[j] - prev;
    prev = beta[j];
  }
  return p;
}

// per-row mixture densities D_i = sum_j alpha_ij p_j, Neumaier compensated
template <class T>
void mix_density(const AlphaMatrix& A, const std::vector<T>& vals,
                 const std::vector<double>& p, std::vector<double>& D) {
  D.resize(size_t(A.n));
  for (int i = 0; i < A.n; ++i) {
    const T* v = vals.data() + A.row_off[size_t(i)];
    const double* q = p.data() + A.col_lo[size_t(i)];
    size_t cnt = A.row_off[size_t(i) + 1] - A.row_off[size_t(i)];
    double s = 0, c = 0;
    for (size_t k = 0; k < cnt; ++k) {
      double x = double(v[k]) * q[k];
      double t = s + x;
      c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
      s = t;
    }
    D[size_t(i)] = s + c;
  }
}

std::vector<double> mix_density(const AlphaMatrix& A, const std::vector<double>& p) {
  std::vector<double> D;
  if (A.use_float)
    mix_density(A, A.vf, p, D);
  else
    mix_density(A, A.vd, p, D);
  return D;
}

double mean_log(const std::vector<double>& D) {
  double s = 0, c = 0;
  for (double d : D) {
    if (!(d > 0)) return -kInf;
    double x = std::log(d);
    double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return (s + c) / double(D.size());
}

// column sums r_j = (1/n) sum_i alpha_ij / D_i
template <class T>
void self_consistency(const AlphaMatrix& A, const std::vector<T>& vals,
                      const std::vector<double>& D, std::vector<double>& r) {
  r.assign(size_t(A.n), 0.0);
  for (int i = 0; i < A.n; ++i) {
    double w = 1.0 / (double(A.n) * D[size_t(i)]);
    const T* v = vals.data() + A.row_off[size_t(i)];
    int lo = A.col_lo[size_t(i)];
    size_t cnt = A.row_off[size_t(i) + 1] - A.row_off[size_t(i)];
    double* out = r.data() + lo;
    for (size_t k = 0; k < cnt; ++k) out[k] += double(v[k]) * w;
  }
}

std::vector<double> self_consistency(const AlphaMatrix& A,
                                     const std::vector<double>& D) {
  std::vector<double> r;
  if (A.use_float)
    self_consistency(A, A.vf, D, r);
  else
    self_consistency(A, A.vd, D, r);
  return r;
}

template <class Density>
AlphaMatrix build_impl(Density&& g, double smax, std::vector<double> s) {
  if (s.empty()) throw std::invalid_argument("no observations");
  for (double v : s)
    if (!std::isfinite(v) || v <= 0)
      throw std::invalid_argument("observations must be finite and positive");
  std::sort(s.begin(), s.end());

  AlphaMatrix A;
  A.n = int(s.size());
  for (size_t i = 1; i < s.size(); ++i)
    if (s[i] <= s[i - 1]) {
      s[i] = std::nextafter(s[i - 1], kInf);
      ++A.tie_perturbations;
    }
  A.s = std::move(s);
  A.s_max_hat = smax;
  A.use_float = A.n > 8000;

  const int n = A.n;
  A.col_lo.resize(size_t(n));
  A.row_off.resize(size_t(n) + 1);
  A.row_off[0] = 0;
  for (int i = 0; i < n; ++i) {
    double si = A.s[size_t(i)];
    int lo = int(std::lower_bound(A.s.begin(), A.s.end(), si / smax) - A.s.begin());
    while (lo < n && si / A.s[size_t(lo)] > smax) ++lo;
    while (lo > 0 && si / A.s[size_t(lo) - 1] <= smax) --lo;
    if (lo == n)
      throw std::invalid_argument(
          "observation " + std::to_string(si) +
          " is larger than any possible section of the largest size atom");
    A.col_lo[size_t(i)] = lo;
    A.row_off[size_t(i) + 1] = A.row_off[size_t(i)] + size_t(n - lo);
  }

  if (A.use_float)
    A.vf.resize(A.row_off[size_t(n)]);
  else
    A.vd.resize(A.row_off[size_t(n)]);
  for (int i = 0; i < n; ++i) {
    double si = A.s[size_t(i)];
    size_t k = A.row_off[size_t(i)];
    for (int j = A.col_lo[size_t(i)]; j < n; ++j, ++k) {
      double sj = A.s[size_t(j)];
      double val = g(si / sj) / sj;
      if (A.use_float)
        A.vf[k] = float(val);
      else
        A.vd[k] = val;
    }
  }
  return A;
}

}  // namespace

AlphaMatrix build_alpha(const ReferenceDistribution& ref, std::vector<double> s) {
  if (!ref.fitted())
    throw std::invalid_argument("reference density must be fitted first");
  return build_impl([&](double r) { return eval_density(ref, r); }, ref.s_max_hat(),
                    std::move(s));
}

AlphaMatrix build_alpha(AnalyticBall, std::vector<double> s) {
  return build_impl([](double r) { return analytic_ball_density_sqrt(r); },
                    std::sqrt(std::numbers::pi), std::move(s));
}

Likelihood log_likelihood(const AlphaMatrix& A, const std::vector<double>& beta) {
  Likelihood L;
  L.D = mix_density(A, increments(A, beta));
  L.value = mean_log(L.D);
  return L;
}

double log_likelihood_log_domain(const ReferenceDistribution& ref,
                                 const std::vector<double>& s,
                                 const std::vector<double>& beta) {
  if (s.size() != beta.size())
    throw std::invalid_argument("beta length must match the observation count");
  std::vector<double> p(beta.size());
  double prev = 0;
  for (size_t j = 0; j < beta.size(); ++j) {
    p[j] = beta[j] - prev;
    prev = beta[j];
  }
  std::vector<double> x(s.size());
  for (size_t j = 0; j < s.size(); ++j) x[j] = std::log(s[j]);

  double acc = 0, accc = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    double d = 0, c = 0;
    for (size_t j = 0; j < s.size(); ++j) {
      double z = x[i] - x[j];
      double ez = std::exp(z);
      double term = eval_density(ref, ez) * ez * p[j];
      double t = d + term;
      c += std::abs(d) >= std::abs(term) ? (d - t) + term : (term - t) + d;
      d = t;
    }
    d += c;
    if (!(d > 0)) return -kInf;
    double lg = std::log(d);
    double t = acc + lg;
    accc += std::abs(acc) >= std::abs(lg) ? (acc - t) + lg : (lg - t) + acc;
    acc = t;
  }
  return (acc + accc) / double(s.size());
}

GradHess gradient_and_diag_hessian(const AlphaMatrix& A,
                                   const std::vector<double>& beta) {
  auto D = mix_density(A, increments(A, beta));
  GradHess gh;
  gh.grad.assign(size_t(A.n), 0.0);
  gh.diag_hess.assign(size_t(A.n), 0.0);
  const int n = A.n;
  for (int i = 0; i < n; ++i) {
    if (!(D[size_t(i)] > 0))
      throw std::domain_error("mixture density vanished for an observation");
    double w = 1.0 / (double(n) * D[size_t(i)]);
    int lo = A.col_lo[size_t(i)];
    size_t off = A.row_off[size_t(i)];
    size_t cnt = A.row_off[size_t(i) + 1] - off;
    auto at = [&](size_t k) {
      return A.use_float ? double(A.vf[off + k]) : A.vd[off + k];
    };
    // D_i = sum_j beta_j (alpha_ij - alpha_i,j+1), so differentiate the
    // telescoped form; the column before the suffix start contributes too
    for (int j = std::max(lo - 1, 0); j < n; ++j) {
      double a = j >= lo ? at(size_t(j - lo)) : 0.0;
      double b = size_t(j + 1 - lo) < cnt ? at(size_t(j + 1 - lo)) : 0.0;
      double d = a - b;
      if (d == 0) continue;
      gh.grad[size_t(j)] += w * d;
      gh.diag_hess[size_t(j)] -= double(n) * w * w * d * d;
    }
  }
  return gh;
}

std::vector<double> em_step(const AlphaMatrix& A, const std::vector<double>& beta) {
  auto p = increments(A, beta);
  for (double& v : p) {
    if (v < -1e-9)
      throw std::invalid_argument("beta must be nondecreasing for an EM step");
    if (v < 0) v = 0;
  }
  auto D = mix_density(A, p);
  for (int i = 0; i < A.n; ++i)
    if (!(D[size_t(i)] > 0))
      throw std::domain_error("mixture density vanished for observation " +
                              std::to_string(A.s[size_t(i)]));
  auto r = self_consistency(A, D);
  std::vector<double> out(p.size());
  double s = 0, c = 0;
  for (size_t j = 0; j < p.size(); ++j) {
    double x = p[j] * r[j];
    double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
    out[j] = s + c;
  }
  return out;
}

std::vector<double> isotonic_ls(const std::vector<double>& y,
                                const std::vector<double>& w) {
  if (y.size() != w.size() || y.empty())
    throw std::invalid_argument("isotonic regression needs matching nonempty input");
  for (double v : w)
    if (!(v > 0)) throw std::invalid_argument("isotonic weights must be positive");

  struct Block {
    double v, w;
    int len;
  };
  std::vector<Block> st;
  st.reserve(y.size());
  for (size_t j = 0; j < y.size(); ++j) {
    st.push_back({y[j], w[j], 1});
    while (st.size() >= 2 && st[st.size() - 2].v >= st.back().v) {
      Block b = st.back();
      st.pop_back();
      Block& a = st.back();
      a.v = (a.v * a.w + b.v * b.w) / (a.w + b.w);
      a.w += b.w;
      a.len += b.len;
    }
  }
  std::vector<double> z;
  z.reserve(y.size());
  for (const Block& b : st) z.insert(z.end(), size_t(b.len), b.v);
  return z;
}

IcmResult icm_step(const AlphaMatrix& A, const std::vector<double>& beta,
                   const SolverConfig& cfg) {
  const int n = A.n;
  auto p0 = increments(A, beta);
  auto D0 = mix_density(A, p0);
  double l0 = mean_log(D0);
  if (!std::isfinite(l0))
    throw std::domain_error("likelihood is degenerate at the current iterate");
  double phi0 = -l0 + beta.back();

  auto gh = gradient_and_diag_hessian(A, beta);
  std::vector<double> gphi(static_cast<size_t>(n)), W(static_cast<size_t>(n)), y(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    gphi[size_t(j)] = -gh.grad[size_t(j)] + (j == n - 1 ? 1.0 : 0.0);
    W[size_t(j)] = std::max(-gh.diag_hess[size_t(j)], 0.0) + cfg.hessian_ridge;
    y[size_t(j)] = beta[size_t(j)] - gphi[size_t(j)] / W[size_t(j)];
  }
  auto cand = isotonic_ls(y, W);
  for (double& v : cand) v = std::max(v, 0.0);

  double dir = 0, delta_max = 0;
  for (int j = 0; j < n; ++j) {
    double d = cand[size_t(j)] - beta[size_t(j)];
    dir += gphi[size_t(j)] * d;
    delta_max = std::max(delta_max, std::abs(d));
  }
  if (delta_max == 0) return {beta, false};
  if (dir >= 0) return {beta, true};  // numerically not a descent direction

  auto pc = increments(A, cand);
  auto Dc = mix_density(A, pc);

  // D is linear along the segment, so each trial costs O(n), not a sweep
  auto phi_at = [&](double lam) {
    double s = 0, c = 0;
    for (int i = 0; i < n; ++i) {
      double d = (1 - lam) * D0[size_t(i)] + lam * Dc[size_t(i)];
      if (!(d > 0)) return kInf;
      double x = std::log(d);
      double t = s + x;
      c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
      s = t;
    }
    double l = (s + c) / double(n);
    return -l + (1 - lam) * beta.back() + lam * cand.back();
  };

  const double eps = cfg.line_search_eps;
  double lam = 1.0;
  if (phi_at(1.0) <= phi0 + eps * dir) {
    lam = 1.0;
  } else {
    lam = 0.5;
    double step = 0.25;
    double best_phi = kInf, best_lam = 0;
    bool found = false;
    for (int it = 0; it < 60; ++it) {
      double ph = phi_at(lam);
      if (ph < best_phi) {
        best_phi = ph;
        best_lam = lam;
      }
      if (ph > phi0 + eps * lam * dir) {
        lam -= step;  // not enough decrease, shorten
      } else if (ph < phi0 + (1 - eps) * lam * dir) {
        lam += step;  // inside the overshoot zone, lengthen
      } else {
        found = true;
        break;
      }
      step /= 2;
    }
    if (!found) {
      if (best_phi < phi0) lam = best_lam;  // keep the best improvement seen
      else return {beta, true};
      IcmResult r;
      r.stalled = true;
      r.beta.resize(static_cast<size_t>(n));
      for (int j = 0; j < n; ++j)
        r.beta[size_t(j)] =
            (1 - lam) * beta[size_t(j)] + lam * cand[size_t(j)];
      return r;
    }
  }

  IcmResult r;
  r.stalled = false;
  r.beta.resize(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j)
    r.beta[size_t(j)] = (1 - lam) * beta[size_t(j)] + lam * cand[size_t(j)];
  return r;
}

FitState fit(const AlphaMatrix& A, const SolverConfig& cfg) {
  if (!(cfg.line_search_eps > 0) || !(cfg.line_search_eps < 0.5))
    throw std::invalid_argument("line_search_eps must lie in (0, 1/2)");
  if (cfg.max_iters < 1 || cfg.stable_iters < 1 || !(cfg.eps_stop > 0))
    throw std::invalid_argument("invalid solver configuration");

  const int n = A.n;
  std::vector<double> beta(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) beta[size_t(j)] = double(j + 1) / double(n);

  FitState st;
  auto L = log_likelihood(A, beta);
  for (int i = 0; i < n; ++i)
    if (!(L.D[size_t(i)] > 0))
      throw std::domain_error(
          "observation " + std::to_string(A.s[size_t(i)]) +
          " has zero density under every size atom; check the reference fit");
  st.loglik_trace.push_back(L.value);

  int streak = 0;
  for (int k = 0; k < cfg.max_iters; ++k) {
    std::vector<double> prev = beta;
    switch (cfg.method) {
      case SolverConfig::Method::EM:
        beta = em_step(A, beta);
        break;
      case SolverConfig::Method::ICM: {
        auto r = icm_step(A, beta, cfg);
        st.ever_stalled |= r.stalled;
        beta = std::move(r.beta);
        break;
      }
      case SolverConfig::Method::Hybrid: {
        auto r = icm_step(A, beta, cfg);
        st.ever_stalled |= r.stalled;
        beta = em_step(A, r.beta);
        break;
      }
    }
    st.loglik_trace.push_back(log_likelihood(A, beta).value);
    ++st.iterations;

    double delta = 0;
    for (int j = 0; j < n; ++j)
      delta = std::max(delta, std::abs(beta[size_t(j)] - prev[size_t(j)]));
    if (delta < cfg.eps_stop) {
      if (++streak >= cfg.stable_iters) {
        st.converged = true;
        break;
      }
    } else {
      streak = 0;
    }
  }

  double total = beta.back();
  if (!(total > 0)) throw std::domain_error("fit collapsed to zero total mass");
  for (double& b : beta) b /= total;
  beta.back() = 1.0;
  st.beta = std::move(beta);
  st.loglik = log_likelihood(A, st.beta).value;
  st.kkt_residual = kkt_residual(A, st.beta);
  return st;
}

double kkt_residual(const AlphaMatrix& A, const std::vector<double>& beta) {
  auto p = increments(A, beta);
  auto D = mix_density(A, p);
  for (double d : D)
    if (!(d > 0)) return kInf;
  auto r = self_consistency(A, D);
  double worst = 0;
  for (size_t j = 0; j < r.size(); ++j) {
    if (p[j] > 1e-10)
      worst = std::max(worst, std::abs(r[j] - 1.0));
    else
      worst = std::max(worst, r[j] - 1.0);
  }
  return worst;
}

StepCDF biased_size_cdf(const AlphaMatrix& A, const FitState& state) {
  return StepCDF::from_cumulative(A.s, state.beta);
}

UniquenessDiagnostic uniqueness_diagnostic(const AlphaMatrix& A,
                                           const std::vector<double>& beta) {
  auto p = increments(A, beta);
  std::vector<int> support;
  for (size_t j = 0; j < p.size(); ++j)
    if (p[j] > 1e-10) support.push_back(int(j));

  UniquenessDiagnostic d;
  d.support_size = int(support.size());
  if (support.empty()) return d;
  Eigen::MatrixXd M(A.n, int(support.size()));
  for (int i = 0; i < A.n; ++i)
    for (size_t c = 0; c < support.size(); ++c)
      M(i, int(c)) = A.alpha(i, support[c]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  d.rank = int(qr.rank());
  d.unique = d.rank == d.support_size;
  return d;
}

}  // namespace sizeunfold
