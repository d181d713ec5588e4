#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "teleop/pose.hpp"

namespace teleop::geometry {

struct SphereProxy {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;

  double volume() const;
};

/// Throws Error{InvalidArgument} for radius <= 0 and Error{NonFinite}.
SphereProxy make_sphere(const Vec3& center, double radius);

/// Plane n.x = offset with unit outward normal n.
struct Plane {
  Vec3 normal;
  double offset;

  double signed_distance(const Vec3& x) const { return normal.dot(x) - offset; }
};

/// Local-frame boundary description of a convex obstacle. Every vertex is
/// shared by exactly three faces (true for boxes and tetrahedra).
struct Polyhedron {
  struct Face {
    Plane plane;
    std::array<int, 4> vertices{};  // counter-clockwise seen from outside
    int vertex_count = 0;
  };
  struct Edge {
    int v0, v1;
    int f0, f1;
  };

  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> vertex_faces;
};

enum class ObstacleKind { Box, Tetrahedron };

class ConvexObstacle {
 public:
  /// Throws Error{DegenerateObstacle} unless all half extents are > 0.
  static ConvexObstacle box(const Pose& pose, const Vec3& half_extents);
  /// Vertices in the local frame; any winding. Throws
  /// Error{DegenerateObstacle} for (nearly) coplanar vertices.
  static ConvexObstacle tetrahedron(const Pose& pose, const std::array<Vec3, 4>& vertices);

  ObstacleKind kind() const { return kind_; }
  const Pose& pose() const { return pose_; }
  const Vec3& half_extents() const { return half_extents_; }
  const std::array<Vec3, 4>& tet_vertices() const { return tet_vertices_; }
  const Polyhedron& local() const { return local_; }
  double volume() const { return volume_; }
  double bounding_radius() const { return bounding_radius_; }

  /// Same body under an additional rigid motion applied in the world frame.
  ConvexObstacle moved(const Pose& motion) const;

 private:
  ConvexObstacle() = default;
  void build();

  ObstacleKind kind_ = ObstacleKind::Box;
  Pose pose_;
  Vec3 half_extents_ = Vec3::Zero();
  std::array<Vec3, 4> tet_vertices_{};
  Polyhedron local_;
  double volume_ = 0.0;
  double bounding_radius_ = 0.0;
};

enum class TermKind { WholeSphere, FaceCap, EdgeWedge, VertexCone };
enum class OverlapMethod { Analytic, MonteCarlo, Grid };

std::string_view to_string(TermKind kind);
std::string_view to_string(OverlapMethod method);

struct OverlapTerm {
  TermKind kind;
  double signed_volume;
};

struct OverlapReport {
  double volume = 0.0;
  std::vector<OverlapTerm> terms;
  OverlapMethod method = OverlapMethod::Analytic;
  /// Monte Carlo only.
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

/// Exact overlap volume by inclusion-exclusion over the exterior regions of
/// the obstacle faces: sphere - face caps + edge wedges - vertex cones.
OverlapReport overlap_analytic(const SphereProxy& sphere, const ConvexObstacle& obstacle);

/// Same value as overlap_analytic().volume without recording the terms.
double overlap_volume(const SphereProxy& sphere, const ConvexObstacle& obstacle);

inline constexpr std::uint64_t kDefaultOracleSamples = 10'000'000;

/// Monte Carlo estimate of the integral of H(R^2 - |x - c|^2) over the
/// obstacle using uniform samples inside it.
OverlapReport overlap_oracle(const SphereProxy& sphere, const ConvexObstacle& obstacle,
                             std::uint64_t samples = kDefaultOracleSamples,
                             std::uint64_t seed = 0);

SphereProxy enlarge(const SphereProxy& sphere, double distance);

double obstacle_volume(const ConvexObstacle& obstacle);

/// Euclidean distance from a world point to the obstacle; 0 inside.
double distance(const Vec3& point, const ConvexObstacle& obstacle);

/// Nearest obstacle point to a world point; the point itself when inside.
Vec3 closest_point(const Vec3& point, const ConvexObstacle& obstacle);

/// Surface gap between sphere and obstacle; negative when they overlap.
double clearance(const SphereProxy& sphere, const ConvexObstacle& obstacle);

namespace detail {

/// Half-space a.y <= b in coordinates relative to the ball center.
struct HalfSpace {
  Vec3 normal;
  double offset;
};

/// Volume of the ball of the given radius centered at the origin intersected
/// with a convex region given by half-spaces (bounded or not). Closed form,
/// obtained by splitting the clipped region into cones over right triangles.
double ball_convex_volume(double radius, std::span<const HalfSpace> halfspaces);

/// Volume of the part of a ball lying beyond a plane at signed distance
/// `plane_distance` from its center.
double cap_volume(double radius, double plane_distance);

}  // namespace detail

}  // namespace teleop::geometry
