#include "sizeunfold/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace sizeunfold {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("polyhedron: " + msg);
}

// Newell normal, robust for any planar cycle; length = 2 * polygon area.
Vec3 newell_normal(const std::vector<Vec3>& verts, const std::vector<int>& cycle) {
  Vec3 n{0, 0, 0};
  for (size_t i = 0; i < cycle.size(); ++i) {
    Vec3 a = verts[cycle[i]];
    Vec3 b = verts[cycle[(i + 1) % cycle.size()]];
    n.x += (a.y - b.y) * (a.z + b.z);
    n.y += (a.z - b.z) * (a.x + b.x);
    n.z += (a.x - b.x) * (a.y + b.y);
  }
  return n;
}

Vec3 face_mean(const std::vector<Vec3>& verts, const std::vector<int>& cycle) {
  Vec3 c{0, 0, 0};
  for (int v : cycle) c = c + verts[v];
  return (1.0 / double(cycle.size())) * c;
}

}  // namespace

double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

Vec3 normalized(Vec3 a) {
  double n = norm(a);
  if (!(n > 0) || !std::isfinite(n))
    throw std::invalid_argument("cannot normalize near-zero vector");
  return (1.0 / n) * a;
}

Plane::Plane(Vec3 n, double s) {
  n = normalized(n);
  if (n.z < 0 || (n.z == 0 && (n.y < 0 || (n.y == 0 && n.x < 0)))) {
    n = -1.0 * n;
    s = -s;
  }
  normal = n;
  offset = s;
}

Polyhedron::Polyhedron(std::vector<Vec3> vertices, std::vector<std::vector<int>> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  const int nv = int(vertices_.size());
  const int nf = int(faces_.size());
  if (nv < 4) fail("need at least 4 vertices");
  if (nf < 4) fail("need at least 4 faces");
  for (const Vec3& v : vertices_)
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z))
      fail("non-finite vertex coordinate");
  for (const auto& f : faces_) {
    if (f.size() < 3) fail("face with fewer than 3 vertices");
    for (int v : f)
      if (v < 0 || v >= nv) fail("face index out of range");
    for (size_t i = 0; i < f.size(); ++i)
      for (size_t j = i + 1; j < f.size(); ++j)
        if (f[i] == f[j]) fail("face repeats a vertex");
  }

  centroid_ = {0, 0, 0};
  for (const Vec3& v : vertices_) centroid_ = centroid_ + v;
  centroid_ = (1.0 / nv) * centroid_;
  radius_ = 0;
  for (const Vec3& v : vertices_) radius_ = std::max(radius_, norm(v - centroid_));
  if (!(radius_ > 0)) fail("all vertices coincide");
  const double tol = kGeomTol * radius_;

  // flip faces whose winding points inward
  for (auto& f : faces_) {
    Vec3 n = newell_normal(vertices_, f);
    if (dot(n, face_mean(vertices_, f) - centroid_) < 0) std::reverse(f.begin(), f.end());
  }

  // undirected edge pairing: (lo, hi, face, slot, forward)
  struct ERec {
    int lo, hi, face, slot;
    bool fwd;
  };
  std::vector<ERec> recs;
  foff_.assign(nf + 1, 0);
  for (int f = 0; f < nf; ++f) {
    foff_[f + 1] = foff_[f] + int(faces_[f].size());
    for (size_t k = 0; k < faces_[f].size(); ++k) {
      int a = faces_[f][k], b = faces_[f][(k + 1) % faces_[f].size()];
      recs.push_back({std::min(a, b), std::max(a, b), f, int(k), a < b});
    }
  }
  std::sort(recs.begin(), recs.end(), [](const ERec& x, const ERec& y) {
    return std::tie(x.lo, x.hi) < std::tie(y.lo, y.hi);
  });
  fadj_.assign(recs.size(), -1);
  std::vector<std::pair<int, int>> edges;
  for (size_t i = 0; i < recs.size();) {
    size_t j = i;
    while (j < recs.size() && recs[j].lo == recs[i].lo && recs[j].hi == recs[i].hi) ++j;
    if (j - i != 2) fail("surface not closed: edge not shared by exactly 2 faces");
    if (recs[i].fwd == recs[i + 1].fwd) fail("inconsistent face orientations around an edge");
    fadj_[foff_[recs[i].face] + recs[i].slot] = recs[i + 1].face;
    fadj_[foff_[recs[i + 1].face] + recs[i + 1].slot] = recs[i].face;
    edges.emplace_back(recs[i].lo, recs[i].hi);
    i = j;
  }

  // vertex adjacency (CSR)
  voff_.assign(nv + 1, 0);
  for (auto [a, b] : edges) {
    ++voff_[a + 1];
    ++voff_[b + 1];
  }
  for (int v = 0; v < nv; ++v) voff_[v + 1] += voff_[v];
  vne_.assign(2 * edges.size(), 0);
  {
    std::vector<int> cur(voff_.begin(), voff_.end() - 1);
    for (auto [a, b] : edges) {
      vne_[cur[a]++] = b;
      vne_[cur[b]++] = a;
    }
  }

  // vertex -> incident faces (CSR)
  vfo_.assign(nv + 1, 0);
  for (int f = 0; f < nf; ++f)
    for (int v : faces_[f]) ++vfo_[v + 1];
  for (int v = 0; v < nv; ++v) vfo_[v + 1] += vfo_[v];
  vfc_.assign(vfo_[nv], 0);
  {
    std::vector<int> cur(vfo_.begin(), vfo_.end() - 1);
    for (int f = 0; f < nf; ++f)
      for (int v : faces_[f]) vfc_[cur[v]++] = f;
  }

  // planarity and polygon convexity of every face
  std::vector<Vec3> fnormal(nf);
  for (int f = 0; f < nf; ++f) {
    Vec3 n = newell_normal(vertices_, faces_[f]);
    double len = norm(n);
    if (!(len > tol * radius_)) fail("degenerate face");
    fnormal[f] = (1.0 / len) * n;
    Vec3 c = face_mean(vertices_, faces_[f]);
    const auto& cyc = faces_[f];
    for (int v : cyc)
      if (std::abs(dot(vertices_[v] - c, fnormal[f])) > 64 * tol) fail("face not planar");
    for (size_t k = 0; k < cyc.size(); ++k) {
      Vec3 e0 = vertices_[cyc[(k + 1) % cyc.size()]] - vertices_[cyc[k]];
      Vec3 e1 = vertices_[cyc[(k + 2) % cyc.size()]] - vertices_[cyc[(k + 1) % cyc.size()]];
      if (dot(cross(e0, e1), fnormal[f]) < -64 * tol * radius_) fail("face polygon not convex");
    }
  }

  // local convexity at every edge; with closedness this implies a convex body
  for (int f = 0; f < nf; ++f) {
    const auto& cyc = faces_[f];
    double off = dot(fnormal[f], vertices_[cyc[0]]);
    for (size_t k = 0; k < cyc.size(); ++k) {
      int g = fadj_[foff_[f] + int(k)];
      int a = cyc[k], b = cyc[(k + 1) % cyc.size()];
      for (int w : faces_[g]) {
        if (w == a || w == b) continue;
        if (dot(fnormal[f], vertices_[w]) > off + 64 * tol) fail("surface not convex at an edge");
        break;
      }
    }
  }

  if (!(volume(*this) > tol * radius_ * radius_)) fail("degenerate volume");
}

double volume(const Polyhedron& K) {
  Vec3 c = K.centroid();
  double six_v = 0;
  for (const auto& f : K.faces()) {
    Vec3 a = K.vertices()[f[0]] - c;
    for (size_t i = 1; i + 1 < f.size(); ++i) {
      Vec3 b = K.vertices()[f[i]] - c;
      Vec3 d = K.vertices()[f[i + 1]] - c;
      six_v += dot(a, cross(b, d));
    }
  }
  return six_v / 6.0;
}

Polyhedron scale(const Polyhedron& K, double factor) {
  if (!(factor > 0) || !std::isfinite(factor))
    throw std::invalid_argument("scale factor must be positive");
  std::vector<Vec3> vs = K.vertices();
  for (Vec3& v : vs) v = factor * v;
  return Polyhedron(std::move(vs), K.faces());
}

Polyhedron normalize_to_unit_volume(const Polyhedron& K) {
  return scale(K, std::pow(volume(K), -1.0 / 3.0));
}

Polyhedron rotate(const Polyhedron& K, Vec3 axis, double angle) {
  Vec3 u = normalized(axis);
  double c = std::cos(angle), s = std::sin(angle);
  std::vector<Vec3> vs = K.vertices();
  for (Vec3& v : vs)
    v = c * v + s * cross(u, v) + ((1 - c) * dot(u, v)) * u;
  return Polyhedron(std::move(vs), K.faces());
}

Polyhedron translate(const Polyhedron& K, Vec3 shift) {
  std::vector<Vec3> vs = K.vertices();
  for (Vec3& v : vs) v = v + shift;
  return Polyhedron(std::move(vs), K.faces());
}

int extreme_vertex(const Polyhedron& K, Vec3 dir) {
  const auto& vs = K.vertices();
  if (vs.size() < 128) {
    int best = 0;
    double bv = dot(vs[0], dir);
    for (int i = 1; i < int(vs.size()); ++i) {
      double d = dot(vs[i], dir);
      if (d > bv) {
        bv = d;
        best = i;
      }
    }
    return best;
  }
  // hill climb; on a convex polytope a vertex with no strictly better
  // neighbor maximizes the linear functional globally
  int cur = 0;
  double cv = dot(vs[cur], dir);
  for (;;) {
    int best = -1;
    double bv = cv;
    for (const int* p = K.neighbors_begin(cur); p != K.neighbors_end(cur); ++p) {
      double d = dot(vs[*p], dir);
      if (d > bv) {
        bv = d;
        best = *p;
      }
    }
    if (best < 0) return cur;
    cur = best;
    cv = bv;
  }
}

double width(const Polyhedron& K, Vec3 dir) {
  Vec3 u = normalized(dir);
  double hi = dot(K.vertices()[extreme_vertex(K, u)], u);
  double lo = dot(K.vertices()[extreme_vertex(K, -1.0 * u)], u);
  return hi - lo;
}

namespace {

Vec3 hemisphere_dir(Rng& rng) {
  for (;;) {
    Vec3 g{rng.normal(), rng.normal(), rng.normal()};
    double n = norm(g);
    if (n > 1e-12) {
      g = (1.0 / n) * g;
      if (g.z < 0) g = -1.0 * g;
      return g;
    }
  }
}

}  // namespace

double mean_width(const Polyhedron& K, Rng& rng, std::int64_t n_dirs) {
  if (n_dirs < 1) throw std::invalid_argument("mean_width: n_dirs must be positive");
  double acc = 0;
  for (std::int64_t i = 0; i < n_dirs; ++i) acc += width(K, hemisphere_dir(rng));
  return acc / double(n_dirs);
}

double mean_width_exact(const Polyhedron& K) {
  // b(K) = sum over edges of length * exterior dihedral / (4 pi)
  const auto& vs = K.vertices();
  std::vector<Vec3> fnormal(K.faces().size());
  for (size_t f = 0; f < K.faces().size(); ++f)
    fnormal[f] = normalized(newell_normal(vs, K.faces()[f]));
  double acc = 0;
  for (size_t f = 0; f < K.faces().size(); ++f) {
    const auto& cyc = K.faces()[f];
    for (size_t k = 0; k < cyc.size(); ++k) {
      int a = cyc[k], b = cyc[(k + 1) % cyc.size()];
      if (a > b) continue;  // visit each undirected edge once
      int g = K.face_across(int(f), int(k));
      double c = std::clamp(dot(fnormal[f], fnormal[g]), -1.0, 1.0);
      acc += norm(vs[b] - vs[a]) * std::acos(c);
    }
  }
  return acc / (4.0 * kPi);
}

namespace detail {

std::vector<Vec3> section_scan(const Polyhedron& K, const Plane& plane) {
  const auto& vs = K.vertices();
  const double tol = kGeomTol * (K.enclosing_radius() + norm(K.centroid()) + std::abs(plane.offset));
  std::vector<double> d(vs.size());
  for (size_t i = 0; i < vs.size(); ++i) d[i] = dot(vs[i], plane.normal) - plane.offset;

  std::vector<Vec3> pts;
  for (size_t i = 0; i < vs.size(); ++i) {
    if (std::abs(d[i]) <= tol) pts.push_back(vs[i]);
    for (const int* p = K.neighbors_begin(int(i)); p != K.neighbors_end(int(i)); ++p) {
      size_t j = size_t(*p);
      if (j < i) continue;
      if ((d[i] > tol && d[j] < -tol) || (d[i] < -tol && d[j] > tol)) {
        double t = d[i] / (d[i] - d[j]);
        pts.push_back(vs[i] + t * (vs[j] - vs[i]));
      }
    }
  }
  if (pts.size() < 3) return {};

  // dedupe then order by angle in the plane; valid because the cut of a
  // convex body is convex
  Vec3 ref = std::abs(plane.normal.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 u = normalized(cross(plane.normal, ref));
  Vec3 v = cross(plane.normal, u);
  Vec3 c{0, 0, 0};
  for (const Vec3& p : pts) c = c + p;
  c = (1.0 / double(pts.size())) * c;
  std::vector<std::pair<double, Vec3>> ang;
  for (const Vec3& p : pts) ang.emplace_back(std::atan2(dot(p - c, v), dot(p - c, u)), p);
  std::sort(ang.begin(), ang.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<Vec3> out;
  const double sep = 8 * tol;
  for (const auto& [a, p] : ang) {
    if (!out.empty() && norm(p - out.back()) <= sep) continue;
    out.push_back(p);
  }
  while (out.size() > 1 && norm(out.front() - out.back()) <= sep) out.pop_back();
  if (out.size() < 3) return {};
  return out;
}

std::vector<Vec3> section_walk(const Polyhedron& K, const Plane& plane) {
  const auto& vs = K.vertices();
  const double tol = kGeomTol * (K.enclosing_radius() + norm(K.centroid()) + std::abs(plane.offset));
  auto dv = [&](int i) { return dot(vs[i], plane.normal) - plane.offset; };

  int vmax = extreme_vertex(K, plane.normal);
  int vmin = extreme_vertex(K, -1.0 * plane.normal);
  if (dv(vmax) <= tol || dv(vmin) >= -tol) return {};

  // descend from the top until an edge crosses the plane
  int u = vmax;
  double du = dv(u);
  int w = -1;
  double dw = 0;
  while (true) {
    int best = -1;
    double bv = du;
    for (const int* p = K.neighbors_begin(u); p != K.neighbors_end(u); ++p) {
      double d = dv(*p);
      if (d < bv) {
        bv = d;
        best = *p;
      }
    }
    if (best < 0) return section_scan(K, plane);  // should not happen
    if (std::abs(bv) <= tol) return section_scan(K, plane);
    if (bv < 0) {
      w = best;
      dw = bv;
      break;
    }
    u = best;
    du = bv;
  }

  // seed face containing directed edge (u,w) or (w,u)
  int seed = -1, seed_slot = -1;
  for (const int* it = K.vfaces_begin(u); it != K.vfaces_end(u) && seed < 0; ++it) {
    const auto& cyc = K.faces()[*it];
    for (size_t k = 0; k < cyc.size(); ++k) {
      int a = cyc[k], b = cyc[(k + 1) % cyc.size()];
      if ((a == u && b == w) || (a == w && b == u)) {
        seed = *it;
        seed_slot = int(k);
        break;
      }
    }
  }
  if (seed < 0) return section_scan(K, plane);

  std::vector<Vec3> poly;
  int f = seed, entry_slot = seed_slot;
  const size_t max_steps = K.faces().size() + 2;
  for (size_t step = 0; step < max_steps; ++step) {
    const auto& cyc = K.faces()[f];
    int exit_slot = -1;
    for (size_t k = 0; k < cyc.size(); ++k) {
      if (int(k) == entry_slot) continue;
      double da = dv(cyc[k]);
      double db = dv(cyc[(k + 1) % cyc.size()]);
      if (std::abs(da) <= tol || std::abs(db) <= tol) return section_scan(K, plane);
      if ((da > 0) != (db > 0)) {
        exit_slot = int(k);
        break;
      }
    }
    if (exit_slot < 0) return section_scan(K, plane);
    int a = cyc[exit_slot], b = cyc[(exit_slot + 1) % cyc.size()];
    double da = dv(a), db = dv(b);
    poly.push_back(vs[a] + (da / (da - db)) * (vs[b] - vs[a]));

    int g = K.face_across(f, exit_slot);
    if (g == seed) break;
    // locate the shared edge's slot in the next face
    const auto& ncyc = K.faces()[g];
    int nslot = -1;
    for (size_t k = 0; k < ncyc.size(); ++k) {
      int na = ncyc[k], nb = ncyc[(k + 1) % ncyc.size()];
      if ((na == a && nb == b) || (na == b && nb == a)) {
        nslot = int(k);
        break;
      }
    }
    if (nslot < 0) return section_scan(K, plane);
    f = g;
    entry_slot = nslot;
  }
  if (poly.size() < 3) return {};
  return poly;
}

}  // namespace detail

std::vector<Vec3> section_polygon(const Polyhedron& K, const Plane& plane) {
  if (K.vertices().size() >= 192) return detail::section_walk(K, plane);
  return detail::section_scan(K, plane);
}

double polygon_area(const std::vector<Vec3>& poly) {
  if (poly.size() < 3) return 0;
  Vec3 acc{0, 0, 0};
  for (size_t i = 0; i < poly.size(); ++i)
    acc = acc + cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * norm(acc);
}

double section_area(const Polyhedron& K, const Plane& plane) {
  return polygon_area(section_polygon(K, plane));
}

double hitting_probability(const Polyhedron& K, double lambda, const Polyhedron& Q,
                           Rng& rng, std::int64_t n_dirs) {
  if (!(lambda > 0)) throw std::invalid_argument("hitting_probability: lambda must be positive");
  // paired directions so identical bodies give ratio exactly 1
  double wk = 0, wq = 0;
  for (std::int64_t i = 0; i < n_dirs; ++i) {
    Vec3 u = hemisphere_dir(rng);
    wk += width(K, u);
    wq += width(Q, u);
  }
  double p = lambda * wk / wq;
  if (p > 1 + 1e-12)
    throw std::invalid_argument("hitting_probability: particle does not fit in the window");
  return p;
}

IurSampler::IurSampler(const Polyhedron& K)
    : body_(&K), center_(K.centroid()), radius_(K.enclosing_radius()) {}

Plane IurSampler::next(Rng& rng) {
  const double tol = kGeomTol * radius_;
  for (;;) {
    ++tries_;
    Vec3 dir = hemisphere_dir(rng);
    double s = dot(center_, dir) + rng.uniform(-radius_, radius_);
    double hi = dot(body_->vertices()[extreme_vertex(*body_, dir)], dir);
    double lo = dot(body_->vertices()[extreme_vertex(*body_, -1.0 * dir)], dir);
    if (s > lo + tol && s < hi - tol) {
      ++draws_;
      return Plane(dir, s);
    }
  }
}

Plane sample_iur_plane(const Polyhedron& K, Rng& rng) {
  IurSampler sampler(K);
  return sampler.next(rng);
}

namespace {

struct OffTokens {
  std::vector<std::vector<std::string>> lines;  // comment-stripped, non-empty
  std::vector<int> lineno;
};

OffTokens off_tokens(std::istream& in) {
  OffTokens out;
  std::string raw;
  int no = 0;
  while (std::getline(in, raw)) {
    ++no;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ss(raw);
    std::vector<std::string> toks;
    std::string t;
    while (ss >> t) toks.push_back(t);
    if (!toks.empty()) {
      out.lines.push_back(std::move(toks));
      out.lineno.push_back(no);
    }
  }
  return out;
}

double parse_num(const std::string& s, int line) {
  size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("OFF parse error at line " + std::to_string(line) +
                             ": expected number, got '" + s + "'");
  }
  if (pos != s.size())
    throw std::runtime_error("OFF parse error at line " + std::to_string(line) +
                             ": expected number, got '" + s + "'");
  return v;
}

long parse_int(const std::string& s, int line) {
  double v = parse_num(s, line);
  long r = long(v);
  if (double(r) != v)
    throw std::runtime_error("OFF parse error at line " + std::to_string(line) +
                             ": expected integer, got '" + s + "'");
  return r;
}

}  // namespace

Polyhedron load_off(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open OFF file: " + path);
  OffTokens tk = off_tokens(in);
  if (tk.lines.empty()) throw std::runtime_error("empty OFF file: " + path);

  size_t cur = 0;
  std::vector<std::string> counts;
  int counts_line;
  if (tk.lines[0][0] != "OFF")
    throw std::runtime_error("not an OFF file (missing OFF header): " + path);
  if (tk.lines[0].size() > 1) {
    counts.assign(tk.lines[0].begin() + 1, tk.lines[0].end());
    counts_line = tk.lineno[0];
    cur = 1;
  } else {
    if (tk.lines.size() < 2) throw std::runtime_error("OFF file has no counts line: " + path);
    counts = tk.lines[1];
    counts_line = tk.lineno[1];
    cur = 2;
  }
  if (counts.size() < 3)
    throw std::runtime_error("OFF counts line needs vertex, face and edge counts: " + path);
  long nv = parse_int(counts[0], counts_line);
  long nf = parse_int(counts[1], counts_line);
  if (nv < 4 || nf < 4)
    throw std::runtime_error("OFF file declares too few vertices or faces: " + path);

  std::vector<Vec3> verts;
  verts.reserve(nv);
  for (long i = 0; i < nv; ++i, ++cur) {
    if (cur >= tk.lines.size())
      throw std::runtime_error("OFF file ends after " + std::to_string(i) + " of " +
                               std::to_string(nv) + " vertices: " + path);
    const auto& ln = tk.lines[cur];
    if (ln.size() < 3)
      throw std::runtime_error("OFF vertex line " + std::to_string(tk.lineno[cur]) +
                               " has fewer than 3 coordinates");
    verts.push_back({parse_num(ln[0], tk.lineno[cur]), parse_num(ln[1], tk.lineno[cur]),
                     parse_num(ln[2], tk.lineno[cur])});
  }

  std::vector<std::vector<int>> faces;
  faces.reserve(nf);
  for (long i = 0; i < nf; ++i, ++cur) {
    if (cur >= tk.lines.size())
      throw std::runtime_error("OFF file ends after " + std::to_string(i) + " of " +
                               std::to_string(nf) + " faces: " + path);
    const auto& ln = tk.lines[cur];
    long k = parse_int(ln[0], tk.lineno[cur]);
    if (k < 3 || size_t(k) + 1 > ln.size())
      throw std::runtime_error("OFF face line " + std::to_string(tk.lineno[cur]) +
                               " declares " + std::to_string(k) + " vertices but lists fewer");
    std::vector<int> cyc(k);
    for (long j = 0; j < k; ++j) {
      long v = parse_int(ln[j + 1], tk.lineno[cur]);
      if (v < 0 || v >= nv)
        throw std::runtime_error("OFF face line " + std::to_string(tk.lineno[cur]) +
                                 " references vertex " + std::to_string(v) + " out of range");
      cyc[j] = int(v);
    }
    faces.push_back(std::move(cyc));
  }
  return Polyhedron(std::move(verts), std::move(faces));
}

Polyhedron make_cube() {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i)
    v.push_back({(i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5});
  std::vector<std::vector<int>> f = {
      {0, 2, 6, 4}, {1, 5, 7, 3},  // x = -1/2, +1/2
      {0, 4, 5, 1}, {2, 3, 7, 6},  // y
      {0, 1, 3, 2}, {4, 6, 7, 5},  // z
  };
  return Polyhedron(std::move(v), std::move(f));
}

Polyhedron make_tetrahedron() {
  std::vector<Vec3> v = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  std::vector<std::vector<int>> f = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return normalize_to_unit_volume(Polyhedron(std::move(v), std::move(f)));
}

Polyhedron make_dodecahedron() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double inv = 1.0 / phi;
  std::vector<Vec3> v;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) v.push_back({double(sx), double(sy), double(sz)});
  for (int sa : {-1, 1})
    for (int sb : {-1, 1}) {
      v.push_back({0, sa * inv, sb * phi});
      v.push_back({sa * inv, sb * phi, 0});
      v.push_back({sb * phi, 0, sa * inv});
    }

  // face planes point along the icosahedral directions; each face is the
  // 5 vertices attaining the max support in that direction
  std::vector<Vec3> dirs;
  for (int sa : {-1, 1})
    for (int sb : {-1, 1}) {
      dirs.push_back({double(sa), 0, sb * phi});
      dirs.push_back({0, sb * phi, double(sa)});
      dirs.push_back({sb * phi, double(sa), 0});
    }
  std::vector<std::vector<int>> faces;
  for (Vec3 n : dirs) {
    double best = -1e300;
    for (const Vec3& p : v) best = std::max(best, dot(p, n));
    std::vector<int> ids;
    for (int i = 0; i < int(v.size()); ++i)
      if (dot(v[i], n) > best - 1e-9) ids.push_back(i);
    if (ids.size() != 5) throw std::logic_error("dodecahedron face construction failed");
    Vec3 u0 = normalized(cross(n, v[ids[0]]));
    Vec3 u1 = normalized(cross(n, u0));
    Vec3 c{0, 0, 0};
    for (int i : ids) c = c + v[i];
    c = 0.2 * c;
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
      return std::atan2(dot(v[a] - c, u1), dot(v[a] - c, u0)) <
             std::atan2(dot(v[b] - c, u1), dot(v[b] - c, u0));
    });
    faces.push_back(ids);
  }
  return normalize_to_unit_volume(Polyhedron(std::move(v), std::move(faces)));
}

Polyhedron make_ball_mesh(int frequency, double r) {
  if (frequency < 1) throw std::invalid_argument("ball mesh frequency must be >= 1");
  if (!(r > 0)) throw std::invalid_argument("ball mesh radius must be positive");
  const int f = frequency;
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> ico;
  for (int sa : {-1, 1})
    for (int sb : {-1, 1}) {
      ico.push_back({0, double(sa), sb * phi});
      ico.push_back({double(sa), sb * phi, 0});
      ico.push_back({sb * phi, 0, double(sa)});
    }
  // icosahedron faces = vertex triples at mutual (minimal) edge distance 2
  std::vector<std::array<int, 3>> tris;
  for (int a = 0; a < 12; ++a)
    for (int b = a + 1; b < 12; ++b)
      for (int c = b + 1; c < 12; ++c)
        if (std::abs(norm(ico[a] - ico[b]) - 2) < 1e-9 &&
            std::abs(norm(ico[b] - ico[c]) - 2) < 1e-9 &&
            std::abs(norm(ico[a] - ico[c]) - 2) < 1e-9)
          tris.push_back({a, b, c});
  if (tris.size() != 20) throw std::logic_error("icosahedron face construction failed");

  // class-I subdivision; grid points are shared across faces through exact
  // integer keys: corners, (edge lo,hi, steps-from-lo), (face, i, j)
  std::vector<Vec3> verts;
  std::map<std::tuple<int, int, int>, int> ids;
  auto vertex_id = [&](const std::array<int, 3>& tri, int face, int i, int j,
                       const Vec3& pos) {
    int k = f - i - j;
    std::tuple<int, int, int> key;
    if (i == 0 && j == 0) key = {-1, tri[0], 0};
    else if (k == 0 && j == 0) key = {-1, tri[1], 0};
    else if (k == 0 && i == 0) key = {-1, tri[2], 0};
    else if (j == 0) key = tri[0] < tri[1] ? std::tuple{-2 - tri[0], tri[1], i}
                                           : std::tuple{-2 - tri[1], tri[0], f - i};
    else if (i == 0) key = tri[0] < tri[2] ? std::tuple{-2 - tri[0], tri[2], j}
                                           : std::tuple{-2 - tri[2], tri[0], f - j};
    else if (k == 0) key = tri[1] < tri[2] ? std::tuple{-2 - tri[1], tri[2], j}
                                           : std::tuple{-2 - tri[2], tri[1], f - j};
    else key = {face, i, j};
    auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    verts.push_back(normalized(pos));
    ids.emplace(key, int(verts.size()) - 1);
    return int(verts.size()) - 1;
  };

  std::vector<std::vector<int>> faces;
  for (int t = 0; t < int(tris.size()); ++t) {
    const auto& tri = tris[t];
    Vec3 A = ico[tri[0]], B = ico[tri[1]], C = ico[tri[2]];
    std::vector<std::vector<int>> grid(f + 1);
    for (int i = 0; i <= f; ++i) {
      grid[i].resize(f - i + 1);
      for (int j = 0; j <= f - i; ++j) {
        Vec3 p = (1.0 / f) * (double(f - i - j) * A + double(i) * B + double(j) * C);
        grid[i][j] = vertex_id(tri, t, i, j, p);
      }
    }
    for (int i = 0; i < f; ++i)
      for (int j = 0; j < f - i; ++j) {
        faces.push_back({grid[i][j], grid[i + 1][j], grid[i][j + 1]});
        if (j < f - i - 1)
          faces.push_back({grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]});
      }
  }
  Polyhedron raw(std::move(verts), std::move(faces));
  // calibrate so the mesh's mean width matches the ball's 2r; cancels the
  // first-order inscription bias of the section-area law
  return scale(raw, 2.0 * r / mean_width_exact(raw));
}

std::uint64_t content_hash(const Polyhedron& K) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* p, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const Vec3& v : K.vertices()) {
    double c[3] = {v.x, v.y, v.z};
    mix(c, sizeof c);
  }
  for (const auto& f : K.faces()) {
    std::uint64_t n = f.size();
    mix(&n, sizeof n);
    for (int i : f) {
      std::int64_t v = i;
      mix(&v, sizeof v);
    }
  }
  return h;
}

}  // namespace sizeunfold
