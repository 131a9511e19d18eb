#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sizeunfold/rng.hpp"

namespace sizeunfold {

// Relative geometric tolerance; absolute tolerances are scaled by the
// enclosing radius of the body they apply to.
inline constexpr double kGeomTol = 1e-9;

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double t, Vec3 a) { return {t * a.x, t * a.y, t * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double norm(Vec3 a);
Vec3 normalized(Vec3 a);  // throws on near-zero input

// Cutting plane {x : <x, normal> = offset}.  Canonical form: unit normal
// with normal.z >= 0 (antipodal planes are identified), signed offset.
struct Plane {
  Vec3 normal;
  double offset = 0;
  Plane(Vec3 n, double s);
};

// Convex polyhedron given by vertices and counterclockwise (outward) face
// cycles.  Construction validates closedness, local convexity at every edge,
// face planarity and non-degeneracy, and reorients faces outward if the
// input winding disagrees.  Immutable afterwards.
class Polyhedron {
public:
  Polyhedron(std::vector<Vec3> vertices, std::vector<std::vector<int>> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::vector<int>>& faces() const { return faces_; }
  Vec3 centroid() const { return centroid_; }
  // max distance from centroid to a vertex
  double enclosing_radius() const { return radius_; }

  // vertex adjacency, CSR layout
  const int* neighbors_begin(int v) const { return vne_.data() + voff_[v]; }
  const int* neighbors_end(int v) const { return vne_.data() + voff_[v + 1]; }

  // face adjacent to faces_[f] across cycle edge (cycle[k], cycle[k+1])
  int face_across(int f, int k) const { return fadj_[foff_[f] + k]; }

  // faces incident to vertex v, CSR layout
  const int* vfaces_begin(int v) const { return vfc_.data() + vfo_[v]; }
  const int* vfaces_end(int v) const { return vfc_.data() + vfo_[v + 1]; }

private:
  std::vector<Vec3> vertices_;
  std::vector<std::vector<int>> faces_;
  Vec3 centroid_;
  double radius_ = 0;
  std::vector<int> voff_, vne_;       // vertex -> neighbor vertices
  std::vector<int> foff_, fadj_;      // face edge slot -> neighbor face
  std::vector<int> vfo_, vfc_;        // vertex -> incident faces
  friend class IurSampler;
};

double volume(const Polyhedron& K);
Polyhedron scale(const Polyhedron& K, double factor);
Polyhedron normalize_to_unit_volume(const Polyhedron& K);
Polyhedron rotate(const Polyhedron& K, Vec3 axis, double angle);
Polyhedron translate(const Polyhedron& K, Vec3 shift);

// index of a vertex maximizing <v, dir>; hill climb on the vertex graph for
// large meshes, full scan otherwise
int extreme_vertex(const Polyhedron& K, Vec3 dir);

double width(const Polyhedron& K, Vec3 dir);

// Monte Carlo mean width: average of width over isotropic directions.
double mean_width(const Polyhedron& K, Rng& rng, std::int64_t n_dirs = 1000000);

// Exact polytope mean width, sum of edge length * exterior dihedral / 4pi.
// Deterministic counterpart of mean_width; also serves as its test oracle.
double mean_width_exact(const Polyhedron& K);

// Ordered vertex cycle of the convex polygon K cut by the plane; empty when
// the plane misses K or only touches its boundary.
std::vector<Vec3> section_polygon(const Polyhedron& K, const Plane& plane);

double polygon_area(const std::vector<Vec3>& poly);
double section_area(const Polyhedron& K, const Plane& plane);

// P(random plane hitting window Q also hits lambda * K) = lambda * mw(K) / mw(Q),
// estimated with paired directions; throws if the ratio exceeds 1.
double hitting_probability(const Polyhedron& K, double lambda, const Polyhedron& Q,
                           Rng& rng, std::int64_t n_dirs = 1000000);

// Isotropic uniformly random planes hitting K, by rejection from
// hemisphere directions x uniform offsets over the enclosing ball.
class IurSampler {
public:
  explicit IurSampler(const Polyhedron& K);
  Plane next(Rng& rng);
  std::uint64_t draws() const { return draws_; }
  std::uint64_t tries() const { return tries_; }

private:
  const Polyhedron* body_;
  Vec3 center_;
  double radius_;
  std::uint64_t draws_ = 0, tries_ = 0;
};

Plane sample_iur_plane(const Polyhedron& K, Rng& rng);

Polyhedron load_off(const std::string& path);

// Shapes used by the simulations; cube/tetrahedron/dodecahedron have unit
// volume and are centered at the origin.
Polyhedron make_cube();
Polyhedron make_tetrahedron();
Polyhedron make_dodecahedron();

// Geodesic sphere of radius r (frequency-f icosahedral subdivision),
// calibrated so its exact mean width equals 2r.
Polyhedron make_ball_mesh(int frequency, double r = 1.0);

// FNV-1a over canonical vertex/face bytes; keys reference caches.
std::uint64_t content_hash(const Polyhedron& K);

namespace detail {
// Both section implementations, exposed for cross-validation in tests.
// scan: O(V+E) over all edges; walk: seeded face walk around the cut.
std::vector<Vec3> section_scan(const Polyhedron& K, const Plane& plane);
std::vector<Vec3> section_walk(const Polyhedron& K, const Plane& plane);
}  // namespace detail

}  // namespace sizeunfold
