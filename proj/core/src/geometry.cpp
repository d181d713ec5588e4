#include "teleop/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/container/static_vector.hpp>

#include "teleop/errors.hpp"
#include "teleop/random.hpp"

namespace teleop::geometry {

namespace {

constexpr double pi = std::numbers::pi;

// Relative tolerance used when deciding whether the sphere reaches a face,
// edge or vertex region.
constexpr double kClassifyEpsilon = 1e-9;

bool finite(const Vec3& v) { return v.allFinite(); }

void require_finite(const Pose& pose, const char* what) {
  if (!pose.is_finite()) {
    throw Error(ErrorCode::NonFinite, std::string(what) + ": non-finite pose");
  }
}

// ---------------------------------------------------------------------------
// Ball intersected with a convex polytope.
//
// The polytope is clipped to a cube around the ball so that it is bounded,
// then its volume inside the ball is split into signed cones from the ball
// center over each face, and each face into signed right triangles spanned
// by the foot of the center on the face plane and the foot on each edge line.

inline constexpr std::size_t kMaxClipPlanes = 10;
inline constexpr std::size_t kMaxFacePoints = 4 + kMaxClipPlanes;

using FacePoints = boost::container::static_vector<Vec3, kMaxFacePoints>;

struct ClipFace {
  Vec3 normal;
  double offset;
  FacePoints points;
};

using ClipPolytope = boost::container::static_vector<ClipFace, 6 + kMaxClipPlanes>;

ClipPolytope make_cube(double half) {
  ClipPolytope cube;
  for (int axis = 0; axis < 3; ++axis) {
    const Vec3 a = Vec3::Unit(axis);
    const Vec3 u = Vec3::Unit((axis + 1) % 3);
    const Vec3 v = Vec3::Unit((axis + 2) % 3);
    for (const double s : {1.0, -1.0}) {
      ClipFace f{s * a, half, {}};
      const Vec3 c = s * half * a;
      std::array<Vec3, 4> q{c + half * (-u - v), c + half * (u - v), c + half * (u + v),
                            c + half * (-u + v)};
      if (s < 0) std::reverse(q.begin(), q.end());
      f.points.assign(q.begin(), q.end());
      cube.push_back(std::move(f));
    }
  }
  return cube;
}

template <typename Points>
void push_unique(Points& pts, const Vec3& p, double tol) {
  for (const auto& q : pts) {
    if ((q - p).squaredNorm() <= tol * tol) return;
  }
  if (pts.size() < pts.capacity()) pts.push_back(p);
}

// Keeps the part with normal.y <= offset. Returns false if nothing remains.
bool clip(ClipPolytope& poly, const Vec3& normal, double offset, double tol) {
  boost::container::static_vector<Vec3, 6 + kMaxClipPlanes> section;
  ClipPolytope out;
  for (auto& face : poly) {
    const auto& pts = face.points;
    const std::size_t n = pts.size();
    boost::container::static_vector<Vec3, 2 * kMaxFacePoints> kept;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& p = pts[i];
      const Vec3& q = pts[(i + 1) % n];
      const double dp = normal.dot(p) - offset;
      const double dq = normal.dot(q) - offset;
      if (dp <= tol) {
        kept.push_back(p);
        if (dp >= -tol) push_unique(section, p, tol);
      }
      if ((dp < -tol && dq > tol) || (dp > tol && dq < -tol)) {
        const Vec3 x = p + (q - p) * (dp / (dp - dq));
        kept.push_back(x);
        push_unique(section, x, tol);
      }
    }
    FacePoints cleaned;
    for (const auto& p : kept) {
      if ((cleaned.empty() || (cleaned.back() - p).squaredNorm() > tol * tol) &&
          cleaned.size() < cleaned.capacity()) {
        cleaned.push_back(p);
      }
    }
    while (cleaned.size() > 1 && (cleaned.front() - cleaned.back()).squaredNorm() <= tol * tol) {
      cleaned.pop_back();
    }
    if (cleaned.size() >= 3) {
      face.points = std::move(cleaned);
      out.push_back(std::move(face));
    }
  }
  if (out.empty()) {
    poly.clear();
    return false;
  }
  const bool coincident = std::any_of(out.begin(), out.end(), [&](const ClipFace& f) {
    return f.normal.dot(normal) > 1.0 - 1e-12 && std::abs(f.offset - offset) <= tol;
  });
  if (section.size() >= 3 && !coincident && out.size() < out.capacity()) {
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : section) centroid += p;
    centroid /= static_cast<double>(section.size());
    const Vec3 u = normal.unitOrthogonal();
    const Vec3 v = normal.cross(u);
    std::array<std::pair<double, std::size_t>, 6 + kMaxClipPlanes> order;
    for (std::size_t i = 0; i < section.size(); ++i) {
      const Vec3 d = section[i] - centroid;
      order[i] = {std::atan2(d.dot(v), d.dot(u)), i};
    }
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(section.size()));
    ClipFace cap{normal, offset, {}};
    for (std::size_t i = 0; i < section.size(); ++i) cap.points.push_back(section[order[i].second]);
    out.push_back(std::move(cap));
  }
  poly = std::move(out);
  return true;
}

// Ball of radius r centered at the origin, intersected with the cone from the
// origin over the right triangle {F, E, P}: F is the foot of the origin on a
// plane at distance h, E the foot of F on a line at in-plane distance g, and
// P lies on that line with angle phi_t = angle(E - F, P - F). h, g > 0.
double orthoscheme(double r, double h, double g, double phi_t) {
  const double hyp = std::hypot(h, g);
  const double solid_full = phi_t - std::asin(std::min(1.0, h * std::sin(phi_t) / hyp));
  const double r3 = r * r * r;
  if (h >= r) return r3 / 3.0 * solid_full;

  const double rho2 = r * r - h * h;
  const double rho = std::sqrt(rho2);
  const double phi_c = rho > g ? std::acos(g / rho) : 0.0;
  const double phi1 = std::min(phi_t, phi_c);

  // Part of the triangle inside the disk where the plane cuts the ball, and
  // the solid angle of the remaining part.
  const double area = 0.5 * g * g * std::tan(phi1) + 0.5 * rho2 * (phi_t - phi1);
  const double solid_outside = (h / r) * (phi_t - phi1) -
                               std::asin(std::min(1.0, h * std::sin(phi_t) / hyp)) +
                               std::asin(std::min(1.0, h * std::sin(phi1) / hyp));
  return h / 3.0 * area + r3 / 3.0 * solid_outside;
}

double signed_orthoscheme(double r, double h, double g, double t) {
  if (t == 0.0) return 0.0;
  const double v = orthoscheme(r, h, g, std::atan2(std::abs(t), g));
  return t > 0.0 ? v : -v;
}

double ball_polytope_volume(double r, const ClipPolytope& poly, double tol) {
  double total = 0.0;
  for (const auto& face : poly) {
    const double h = face.offset;
    if (std::abs(h) <= tol) continue;
    const Vec3 foot = h * face.normal;
    const double ah = std::abs(h);
    double face_sum = 0.0;
    const std::size_t n = face.points.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& p1 = face.points[i];
      const Vec3& p2 = face.points[(i + 1) % n];
      const Vec3 edge = p2 - p1;
      const double len = edge.norm();
      if (len <= tol) continue;
      const Vec3 dir = edge / len;
      const Vec3 inward = face.normal.cross(dir);
      const double g = inward.dot(foot - p1);
      if (std::abs(g) <= tol) continue;
      const double ag = std::abs(g);
      const double t1 = dir.dot(p1 - foot);
      const double t2 = dir.dot(p2 - foot);
      const double s = signed_orthoscheme(r, ah, ag, t2) - signed_orthoscheme(r, ah, ag, t1);
      face_sum += g > 0.0 ? s : -s;
    }
    total += h > 0.0 ? face_sum : -face_sum;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Obstacle construction.

Polyhedron box_polyhedron(const Vec3& he) {
  Polyhedron p;
  // Vertex i has coordinates (+/-he.x, +/-he.y, +/-he.z) with bit k of i set
  // meaning the positive sign on axis k.
  for (int i = 0; i < 8; ++i) {
    p.vertices.emplace_back((i & 1) ? he.x() : -he.x(), (i & 2) ? he.y() : -he.y(),
                            (i & 4) ? he.z() : -he.z());
  }
  // Faces: 2*axis + (positive ? 0 : 1).
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    for (const int positive : {1, 0}) {
      Polyhedron::Face f;
      const double s = positive ? 1.0 : -1.0;
      f.plane = Plane{s * Vec3::Unit(axis), he[axis]};
      const int base = positive ? (1 << axis) : 0;
      std::array<int, 4> q{base, base | (1 << u), base | (1 << u) | (1 << v), base | (1 << v)};
      if (!positive) std::reverse(q.begin(), q.end());
      f.vertices = q;
      f.vertex_count = 4;
      p.faces.push_back(f);
    }
  }
  return p;
}

Polyhedron tet_polyhedron(const std::array<Vec3, 4>& v) {
  Polyhedron p;
  p.vertices.assign(v.begin(), v.end());
  const Vec3 centroid = (v[0] + v[1] + v[2] + v[3]) / 4.0;
  const std::array<std::array<int, 3>, 4> tris{{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};
  for (auto tri : tris) {
    Vec3 n = (v[tri[1]] - v[tri[0]]).cross(v[tri[2]] - v[tri[0]]);
    if (n.dot(v[tri[0]] - centroid) < 0.0) {
      std::swap(tri[1], tri[2]);
      n = -n;
    }
    n.normalize();
    Polyhedron::Face f;
    f.plane = Plane{n, n.dot(v[tri[0]])};
    f.vertices = {tri[0], tri[1], tri[2], -1};
    f.vertex_count = 3;
    p.faces.push_back(f);
  }
  return p;
}

void derive_topology(Polyhedron& p) {
  const int nv = static_cast<int>(p.vertices.size());
  const int nf = static_cast<int>(p.faces.size());
  std::vector<std::vector<int>> faces_of(nv);
  for (int f = 0; f < nf; ++f) {
    const auto& face = p.faces[f];
    for (int k = 0; k < face.vertex_count; ++k) faces_of[face.vertices[k]].push_back(f);
    for (int k = 0; k < face.vertex_count; ++k) {
      const int a = face.vertices[k];
      const int b = face.vertices[(k + 1) % face.vertex_count];
      if (a > b) continue;
      // The neighbouring face traverses b -> a.
      for (int g = 0; g < nf; ++g) {
        if (g == f) continue;
        const auto& other = p.faces[g];
        for (int m = 0; m < other.vertex_count; ++m) {
          if (other.vertices[m] == b && other.vertices[(m + 1) % other.vertex_count] == a) {
            p.edges.push_back({a, b, f, g});
          }
        }
      }
    }
  }
  p.vertex_faces.resize(nv);
  for (int i = 0; i < nv; ++i) {
    std::copy_n(faces_of[i].begin(), 3, p.vertex_faces[i].begin());
  }
}

// Closest point of a face polygon to a local-frame point.
Vec3 polygon_closest(const Polyhedron& poly, const Polyhedron::Face& face, const Vec3& x) {
  const Vec3& n = face.plane.normal;
  bool inside = true;
  double best = std::numeric_limits<double>::infinity();
  Vec3 best_point = x;
  for (int k = 0; k < face.vertex_count; ++k) {
    const Vec3& a = poly.vertices[face.vertices[k]];
    const Vec3& b = poly.vertices[face.vertices[(k + 1) % face.vertex_count]];
    const Vec3 ab = b - a;
    if (n.cross(ab).dot(x - a) < 0.0) inside = false;
    const double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const Vec3 q = a + t * ab;
    const double d = (q - x).squaredNorm();
    if (d < best) {
      best = d;
      best_point = q;
    }
  }
  if (inside) return x - face.plane.signed_distance(x) * n;
  return best_point;
}

Vec3 local_closest(const Polyhedron& poly, const Vec3& x) {
  double best = std::numeric_limits<double>::infinity();
  Vec3 best_point = x;
  for (const auto& face : poly.faces) {
    if (face.plane.signed_distance(x) > 0.0) {
      const Vec3 q = polygon_closest(poly, face, x);
      const double d = (q - x).squaredNorm();
      if (d < best) {
        best = d;
        best_point = q;
      }
    }
  }
  return best_point;
}

double local_distance(const Polyhedron& poly, const Vec3& x) {
  return (local_closest(poly, x) - x).norm();
}

// ---------------------------------------------------------------------------
// Inclusion-exclusion over face exterior regions.
//
// With E_f = {x : n_f.x > d_f} the exterior half-space of face f and B the
// ball, |B n P| = |B| - sum |B n E_f| + sum |B n E_f n E_g| - ... . For boxes
// and tetrahedra only face sets meeting at an edge or a vertex can have a
// non-empty common exterior, so the series ends at the vertex terms.

template <typename Sink>
double overlap_terms(const SphereProxy& sphere, const ConvexObstacle& obstacle, Sink&& sink) {
  const Polyhedron& poly = obstacle.local();
  const double r = sphere.radius;
  const Vec3 c = obstacle.pose().apply_inverse(sphere.center);
  const double eps = kClassifyEpsilon * r;

  if (c.norm() >= r + obstacle.bounding_radius()) return 0.0;
  if (local_distance(poly, c) >= r - eps) return 0.0;

  const std::size_t nf = poly.faces.size();
  std::array<double, 6> plane_dist{};
  std::array<bool, 6> cap_active{};
  double result = sphere.volume();
  sink(TermKind::WholeSphere, result);

  for (std::size_t f = 0; f < nf; ++f) {
    plane_dist[f] = poly.faces[f].plane.offset - poly.faces[f].plane.normal.dot(c);
    if (plane_dist[f] < r - eps) {
      cap_active[f] = true;
      const double cap = detail::cap_volume(r, plane_dist[f]);
      result -= cap;
      sink(TermKind::FaceCap, -cap);
    }
  }

  auto exterior = [&](std::size_t f) {
    return detail::HalfSpace{-poly.faces[f].plane.normal, -plane_dist[f]};
  };

  std::array<std::array<bool, 6>, 6> wedge_active{};
  for (const auto& e : poly.edges) {
    if (!cap_active[e.f0] || !cap_active[e.f1]) continue;
    const std::array<detail::HalfSpace, 2> hs{exterior(e.f0), exterior(e.f1)};
    const double w = detail::ball_convex_volume(r, hs);
    if (w <= 0.0) continue;
    wedge_active[e.f0][e.f1] = wedge_active[e.f1][e.f0] = true;
    result += w;
    sink(TermKind::EdgeWedge, w);
  }

  for (const auto& vf : poly.vertex_faces) {
    if (!wedge_active[vf[0]][vf[1]] || !wedge_active[vf[1]][vf[2]] ||
        !wedge_active[vf[0]][vf[2]]) {
      continue;
    }
    const std::array<detail::HalfSpace, 3> hs{exterior(vf[0]), exterior(vf[1]), exterior(vf[2])};
    const double cone = detail::ball_convex_volume(r, hs);
    if (cone <= 0.0) continue;
    result -= cone;
    sink(TermKind::VertexCone, -cone);
  }
  const bool contained = std::all_of(poly.vertices.begin(), poly.vertices.end(),
                                     [&](const Vec3& v) { return (v - c).squaredNorm() <= r * r; });
  return contained ? obstacle.volume() : result;
}

double clamp_volume(double v, const SphereProxy& s, const ConvexObstacle& o) {
  return std::clamp(v, 0.0, std::min(s.volume(), o.volume()));
}

void validate(const SphereProxy& sphere) {
  if (!finite(sphere.center) || !std::isfinite(sphere.radius)) {
    throw Error(ErrorCode::NonFinite, "sphere has non-finite center or radius");
  }
  if (sphere.radius <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "sphere radius must be > 0");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

double SphereProxy::volume() const { return 4.0 / 3.0 * pi * radius * radius * radius; }

SphereProxy make_sphere(const Vec3& center, double radius) {
  SphereProxy s{center, radius};
  validate(s);
  return s;
}

ConvexObstacle ConvexObstacle::box(const Pose& pose, const Vec3& half_extents) {
  require_finite(pose, "box");
  if (!finite(half_extents)) throw Error(ErrorCode::NonFinite, "box: non-finite half extents");
  if ((half_extents.array() <= 0.0).any()) {
    throw Error(ErrorCode::DegenerateObstacle, "box: half extents must all be > 0");
  }
  ConvexObstacle o;
  o.kind_ = ObstacleKind::Box;
  o.pose_ = pose;
  o.half_extents_ = half_extents;
  o.build();
  return o;
}

ConvexObstacle ConvexObstacle::tetrahedron(const Pose& pose, const std::array<Vec3, 4>& vertices) {
  require_finite(pose, "tetrahedron");
  double longest = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!finite(vertices[i])) throw Error(ErrorCode::NonFinite, "tetrahedron: non-finite vertex");
    for (std::size_t j = i + 1; j < 4; ++j) {
      longest = std::max(longest, (vertices[i] - vertices[j]).norm());
    }
  }
  const double det = (vertices[1] - vertices[0])
                         .dot((vertices[2] - vertices[0]).cross(vertices[3] - vertices[0]));
  if (!(std::abs(det) > 1e-12 * longest * longest * longest)) {
    throw Error(ErrorCode::DegenerateObstacle, "tetrahedron: vertices are coplanar");
  }
  ConvexObstacle o;
  o.kind_ = ObstacleKind::Tetrahedron;
  o.pose_ = pose;
  o.tet_vertices_ = vertices;
  o.build();
  return o;
}

void ConvexObstacle::build() {
  if (kind_ == ObstacleKind::Box) {
    local_ = box_polyhedron(half_extents_);
    volume_ = 8.0 * half_extents_.prod();
  } else {
    local_ = tet_polyhedron(tet_vertices_);
    const auto& v = tet_vertices_;
    volume_ = std::abs((v[1] - v[0]).dot((v[2] - v[0]).cross(v[3] - v[0]))) / 6.0;
  }
  derive_topology(local_);
  bounding_radius_ = 0.0;
  for (const auto& v : local_.vertices) bounding_radius_ = std::max(bounding_radius_, v.norm());
}

ConvexObstacle ConvexObstacle::moved(const Pose& motion) const {
  ConvexObstacle o = *this;
  o.pose_ = motion * pose_;
  return o;
}

std::string_view to_string(TermKind kind) {
  switch (kind) {
    case TermKind::WholeSphere: return "whole_sphere";
    case TermKind::FaceCap: return "face_cap";
    case TermKind::EdgeWedge: return "edge_wedge";
    case TermKind::VertexCone: return "vertex_cone";
  }
  return "unknown";
}

std::string_view to_string(OverlapMethod method) {
  switch (method) {
    case OverlapMethod::Analytic: return "analytic";
    case OverlapMethod::MonteCarlo: return "monte_carlo";
    case OverlapMethod::Grid: return "grid";
  }
  return "unknown";
}

OverlapReport overlap_analytic(const SphereProxy& sphere, const ConvexObstacle& obstacle) {
  validate(sphere);
  OverlapReport report;
  report.method = OverlapMethod::Analytic;
  const double raw = overlap_terms(sphere, obstacle, [&](TermKind k, double v) {
    report.terms.push_back({k, v});
  });
  report.volume = clamp_volume(raw, sphere, obstacle);
  return report;
}

double overlap_volume(const SphereProxy& sphere, const ConvexObstacle& obstacle) {
  validate(sphere);
  return clamp_volume(overlap_terms(sphere, obstacle, [](TermKind, double) {}), sphere, obstacle);
}

OverlapReport overlap_oracle(const SphereProxy& sphere, const ConvexObstacle& obstacle,
                             std::uint64_t samples, std::uint64_t seed) {
  validate(sphere);
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "oracle needs at least one sample");

  const Vec3 c = obstacle.pose().apply_inverse(sphere.center);
  const double r2 = sphere.radius * sphere.radius;
  CounterRng rng(seed);
  std::uint64_t hits = 0;

  if (obstacle.kind() == ObstacleKind::Box) {
    const Vec3& he = obstacle.half_extents();
    for (std::uint64_t i = 0; i < samples; ++i) {
      const double x = (2.0 * rng.uniform() - 1.0) * he.x() - c.x();
      const double y = (2.0 * rng.uniform() - 1.0) * he.y() - c.y();
      const double z = (2.0 * rng.uniform() - 1.0) * he.z() - c.z();
      hits += (r2 - (x * x + y * y + z * z)) >= 0.0 ? 1 : 0;
    }
  } else {
    const auto& v = obstacle.tet_vertices();
    const Vec3 e1 = v[1] - v[0];
    const Vec3 e2 = v[2] - v[0];
    const Vec3 e3 = v[3] - v[0];
    const Vec3 base = v[0] - c;
    for (std::uint64_t i = 0; i < samples; ++i) {
      // Sorted uniforms give uniform barycentric coordinates.
      double a = rng.uniform();
      double b = rng.uniform();
      double d = rng.uniform();
      if (a > b) std::swap(a, b);
      if (b > d) std::swap(b, d);
      if (a > b) std::swap(a, b);
      const Vec3 p = base + a * e1 + (b - a) * e2 + (d - b) * e3;
      hits += (r2 - p.squaredNorm()) >= 0.0 ? 1 : 0;
    }
  }

  const double n = static_cast<double>(samples);
  const double frac = static_cast<double>(hits) / n;
  OverlapReport report;
  report.method = OverlapMethod::MonteCarlo;
  report.samples = samples;
  report.volume = obstacle.volume() * frac;
  report.standard_error = obstacle.volume() * std::sqrt(frac * (1.0 - frac) / n);
  return report;
}

SphereProxy enlarge(const SphereProxy& sphere, double distance) {
  if (!std::isfinite(distance)) throw Error(ErrorCode::NonFinite, "enlarge: non-finite distance");
  if (distance < 0.0) {
    std::ostringstream msg;
    msg << "enlarge: negative distance " << distance;
    throw Error(ErrorCode::NegativeDistance, msg.str());
  }
  return {sphere.center, sphere.radius + distance};
}

double obstacle_volume(const ConvexObstacle& obstacle) { return obstacle.volume(); }

double distance(const Vec3& point, const ConvexObstacle& obstacle) {
  return local_distance(obstacle.local(), obstacle.pose().apply_inverse(point));
}

Vec3 closest_point(const Vec3& point, const ConvexObstacle& obstacle) {
  const Pose& pose = obstacle.pose();
  return pose.apply(local_closest(obstacle.local(), pose.apply_inverse(point)));
}

double clearance(const SphereProxy& sphere, const ConvexObstacle& obstacle) {
  return distance(sphere.center, obstacle) - sphere.radius;
}

namespace detail {

double cap_volume(double radius, double plane_distance) {
  if (plane_distance >= radius) return 0.0;
  if (plane_distance <= -radius) return 4.0 / 3.0 * pi * radius * radius * radius;
  const double h = radius - plane_distance;
  return pi / 3.0 * h * h * (3.0 * radius - h);
}

double ball_convex_volume(double radius, std::span<const HalfSpace> halfspaces) {
  if (halfspaces.size() > kMaxClipPlanes) {
    throw Error(ErrorCode::InvalidArgument, "ball_convex_volume: too many half-spaces");
  }
  const double half = 2.0 * radius;
  const double tol = 1e-13 * half;
  ClipPolytope poly = make_cube(half);
  for (const auto& hs : halfspaces) {
    const double len = hs.normal.norm();
    if (!clip(poly, hs.normal / len, hs.offset / len, tol)) return 0.0;
  }
  return std::max(0.0, ball_polytope_volume(radius, poly, tol));
}

}  // namespace detail

}  // namespace teleop::geometry
