#include "sizeunfold/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sizeunfold {

namespace {

void check_observations(const std::vector<double>& obs) {
  if (obs.empty()) throw std::invalid_argument("need at least one observation");
  for (double s : obs)
    if (!std::isfinite(s) || s <= 0)
      throw std::invalid_argument("observations must be positive and finite");
}

// step representation of the reference sqrt-area CDF: value F[g] holds at
// and after x[g]
struct CoarseCDF {
  std::vector<double> x;
  std::vector<double> F;
};

constexpr std::size_t kCoarseKnots = 4096;

CoarseCDF coarsen_samples(const std::vector<double>& xs) {
  const std::size_t N = xs.size();
  CoarseCDF c;
  if (N <= kCoarseKnots) {
    c.x.reserve(N);
    c.F.reserve(N);
    for (std::size_t i = 0; i < N;) {
      std::size_t j = i + 1;
      while (j < N && xs[j] == xs[i]) ++j;
      c.x.push_back(xs[i]);
      c.F.push_back(static_cast<double>(j) / static_cast<double>(N));
      i = j;
    }
  } else {
    c.x.reserve(kCoarseKnots);
    c.F.reserve(kCoarseKnots);
    for (std::size_t g = 1; g <= kCoarseKnots; ++g) {
      // nearest-rank quantile at g / kCoarseKnots
      const std::size_t rank = (g * N + kCoarseKnots - 1) / kCoarseKnots;
      const double q = static_cast<double>(g) / static_cast<double>(kCoarseKnots);
      const double v = xs[rank - 1];
      if (!c.x.empty() && v == c.x.back())
        c.F.back() = q;
      else {
        c.x.push_back(v);
        c.F.push_back(q);
      }
    }
  }
  return c;
}

CoarseCDF coarsen_ball() {
  CoarseCDF c;
  c.x.reserve(kCoarseKnots);
  c.F.reserve(kCoarseKnots);
  for (std::size_t g = 1; g <= kCoarseKnots; ++g) {
    const double q = static_cast<double>(g) / static_cast<double>(kCoarseKnots);
    const double r = 1.0 - q;
    c.x.push_back(std::sqrt(std::numbers::pi * (1.0 - r * r)));
    c.F.push_back(q);
  }
  return c;
}

// |F_hat - F_bar| is constant between breakpoints of the two step
// functions, so the integral is a single sweep over the merged jumps
double step_l1(const StepCDF& biased, const std::vector<double>& obs,
               const CoarseCDF& g) {
  struct Ev {
    double x, dA, dB;
  };
  std::vector<Ev> ev;
  ev.reserve(biased.atoms().size() * g.x.size() + obs.size());
  for (std::size_t j = 0; j < biased.atoms().size(); ++j) {
    const double lam = biased.atoms()[j];
    const double w = biased.probs()[j];
    if (w <= 0) continue;
    double prev = 0;
    for (std::size_t k = 0; k < g.x.size(); ++k) {
      ev.push_back({lam * g.x[k], w * (g.F[k] - prev), 0.0});
      prev = g.F[k];
    }
  }
  const double jump = 1.0 / static_cast<double>(obs.size());
  for (double s : obs) ev.push_back({s, 0.0, jump});
  std::sort(ev.begin(), ev.end(),
            [](const Ev& a, const Ev& b) { return a.x < b.x; });
  double A = 0, B = 0, prev_x = 0, total = 0;
  for (const Ev& e : ev) {
    total += (e.x - prev_x) * std::abs(A - B);
    A += e.dA;
    B += e.dB;
    prev_x = e.x;
  }
  return total;  // past the last jump both CDFs sit at 1
}

// The fitted support can hold thousands of atoms, so evaluating every
// candidate with its own step_l1 call would sort the same merged event list
// once per candidate.  Instead the events are sorted once and each sweep
// masks out the atoms a candidate truncates away: the truncated mixture
// equals the surviving unnormalized mass compared against the empirical CDF
// scaled by the surviving total, so |U(s) - M B(s)| integrates to M times
// the candidate's distance.  Dropping a masked event only removes a
// breakpoint where nothing jumps, which leaves the integral unchanged.
template <class MakeCoarse>
TruncationSelection select_impl(const StepCDF& hb, const std::vector<double>& obs,
                                MakeCoarse&& make_coarse) {
  check_observations(obs);
  const CoarseCDF g = make_coarse();
  std::vector<double> so(obs);
  std::sort(so.begin(), so.end());

  // Only atoms carrying mass shape the section CDF, so thresholds between
  // two support atoms give the same distance (atoms below 1e-10 shift it
  // by less than the selection can resolve).  One candidate per support
  // atom: the smallest observation that removes exactly the atoms below it.
  const auto& a = hb.atoms();
  const auto& p = hb.probs();
  std::vector<double> suffix_mass(a.size() + 1, 0.0);
  for (std::size_t j = a.size(); j-- > 0;)
    suffix_mass[j] = suffix_mass[j + 1] + p[j];
  std::vector<double> support;
  for (std::size_t j = 0; j < a.size(); ++j)
    if (p[j] > 1e-10) support.push_back(a[j]);
  if (support.empty())
    throw std::invalid_argument("biased size CDF carries no mass above 1e-10");

  struct Cand {
    double t;
    int lo;  // first surviving atom index
    double mass;
  };
  std::vector<Cand> cands;
  double prev_atom = 0;
  for (double ur : support) {
    const auto it = std::upper_bound(so.begin(), so.end(), prev_atom);
    prev_atom = ur;
    if (it == so.end() || *it > ur) continue;  // no observation lands in this bucket
    const double t = *it;
    const std::size_t lo = static_cast<std::size_t>(
        std::lower_bound(a.begin(), a.end(), t) - a.begin());
    if (suffix_mass[lo] < 1e-9) continue;
    cands.push_back({t, int(lo), suffix_mass[lo]});
  }
  if (cands.empty())
    throw std::runtime_error(
        "no admissible truncation threshold among the observations");

  // jump sizes are p[j] * dG[k], recovered from the indices so an event
  // packs into 16 bytes; j = -1 marks an observation event
  struct Ev {
    double x;
    int j, k;
  };
  std::vector<double> dG(g.F.size());
  double prevF = 0;
  for (std::size_t k = 0; k < g.F.size(); ++k) {
    dG[k] = g.F[k] - prevF;
    prevF = g.F[k];
  }
  std::vector<Ev> ev;
  ev.reserve(a.size() * g.x.size() + so.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (p[j] <= 0) continue;
    for (std::size_t k = 0; k < g.x.size(); ++k)
      ev.push_back({a[j] * g.x[k], int(j), int(k)});
  }
  for (double s : so) ev.push_back({s, -1, 0});
  std::sort(ev.begin(), ev.end(),
            [](const Ev& l, const Ev& r) { return l.x < r.x; });

  constexpr std::size_t kLanes = 4;
  const double jump = 1.0 / static_cast<double>(so.size());
  TruncationSelection sel;
  double best = std::numeric_limits<double>::infinity();
  std::size_t blocks_since_compact = 0;
  for (std::size_t c0 = 0; c0 < cands.size(); c0 += kLanes) {
    const std::size_t L = std::min(kLanes, cands.size() - c0);
    // events below every lane's cutoff stay masked forever; every few
    // blocks, drop them once enough have accumulated
    if (++blocks_since_compact >= 16) {
      blocks_since_compact = 0;
      const int min_lo = cands[c0].lo;
      std::size_t dead = 0;
      for (const Ev& e : ev)
        if (e.j >= 0 && e.j < min_lo) ++dead;
      if (dead * 8 > ev.size())
        ev.erase(std::remove_if(ev.begin(), ev.end(),
                                [min_lo](const Ev& e) {
                                  return e.j >= 0 && e.j < min_lo;
                                }),
                 ev.end());
    }

    int lo[kLanes];
    double M[kLanes], A[kLanes] = {0, 0, 0, 0}, T[kLanes] = {0, 0, 0, 0};
    for (std::size_t c = 0; c < L; ++c) {
      lo[c] = cands[c0 + c].lo;
      M[c] = cands[c0 + c].mass;
    }
    for (std::size_t c = L; c < kLanes; ++c) {
      lo[c] = lo[L - 1];
      M[c] = M[L - 1];
    }
    double B = 0, prev_x = 0;
    for (const Ev& e : ev) {
      const double dx = e.x - prev_x;
      for (std::size_t c = 0; c < kLanes; ++c)
        T[c] += dx * std::abs(A[c] - M[c] * B);
      if (e.j >= 0) {
        const double dA = p[std::size_t(e.j)] * dG[std::size_t(e.k)];
        for (std::size_t c = 0; c < kLanes; ++c)
          A[c] += e.j >= lo[c] ? dA : 0.0;
      } else {
        B += jump;
      }
      prev_x = e.x;
    }
    for (std::size_t c = 0; c < L; ++c) {
      const double d = T[c] / M[c];
      sel.candidate_ts.push_back(cands[c0 + c].t);
      sel.l1_distances.push_back(d);
      if (d < best) {
        best = d;
        sel.t_hat = cands[c0 + c].t;
      }
    }
  }
  return sel;
}

template <class Src>
EstimateResult estimate_impl(const Src& src, const std::vector<double>& obs,
                             const SolverConfig& cfg) {
  AlphaMatrix A = build_alpha(src, obs);
  FitState fs = fit(A, cfg);
  StepCDF biased = biased_size_cdf(A, fs);
  TruncationSelection sel = select_truncation(biased, A.s, src);
  StepCDF trunc = truncate_biased(biased, sel.t_hat);
  StepCDF h = debias(trunc);
  return EstimateResult{std::move(fs), std::move(biased), std::move(sel),
                        std::move(trunc), std::move(h)};
}

}  // namespace

StepCDF truncate_biased(const StepCDF& hb, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("truncation threshold must be finite");
  const auto& a = hb.atoms();
  const auto& p = hb.probs();
  std::vector<double> na, cum;
  double mass = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] < t) continue;
    na.push_back(a[j]);
    mass += p[j];
    cum.push_back(mass);
  }
  if (na.empty() || mass < 1e-9)
    throw std::invalid_argument("truncation at " + std::to_string(t) +
                                " keeps less than 1e-9 probability mass");
  return StepCDF::from_cumulative(na, cum);
}

StepCDF debias_truncated(const StepCDF& hb, double t) {
  return debias(truncate_biased(hb, t));
}

double section_l1_distance(const StepCDF& biased, const std::vector<double>& obs,
                           const ReferenceDistribution& ref) {
  check_observations(obs);
  std::vector<double> so(obs);
  std::sort(so.begin(), so.end());
  return step_l1(biased, so, coarsen_samples(ref.sqrt_samples()));
}

double section_l1_distance(const StepCDF& biased, const std::vector<double>& obs,
                           AnalyticBall) {
  check_observations(obs);
  std::vector<double> so(obs);
  std::sort(so.begin(), so.end());
  return step_l1(biased, so, coarsen_ball());
}

TruncationSelection select_truncation(const StepCDF& biased,
                                      const std::vector<double>& obs,
                                      const ReferenceDistribution& ref) {
  return select_impl(biased, obs,
                     [&] { return coarsen_samples(ref.sqrt_samples()); });
}

TruncationSelection select_truncation(const StepCDF& biased,
                                      const std::vector<double>& obs,
                                      AnalyticBall) {
  return select_impl(biased, obs, [] { return coarsen_ball(); });
}

EstimateResult estimate_H(const ReferenceDistribution& ref,
                          const std::vector<double>& obs,
                          const SolverConfig& cfg) {
  return estimate_impl(ref, obs, cfg);
}

EstimateResult estimate_H(AnalyticBall, const std::vector<double>& obs,
                          const SolverConfig& cfg) {
  return estimate_impl(AnalyticBall{}, obs, cfg);
}

}  // namespace sizeunfold
