#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "qtop/errors.hpp"
#include "qtop/quadform.hpp"

namespace qtop {

// Geodesic triangulation of S^2 obtained by depth-fold midpoint subdivision
// of an icosahedron: F = 20 * 4^depth, V = 10 * 4^depth + 2, E = 30 * 4^depth.
// Icosahedral rather than lat-long to avoid polar degeneracy.
struct SphereMesh {
  int depth = 0;
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;

  // Connectivity (edges keyed by sorted vertex pairs, ids in build order).
  std::vector<std::array<int, 2>> edge_vertices;
  std::vector<std::array<int, 2>> edge_triangles;
  std::vector<std::array<int, 3>> triangle_edges;
  std::vector<std::array<int, 3>> triangle_neighbors;
  std::vector<std::vector<int>> vertex_triangles;
  std::vector<std::vector<int>> vertex_neighbors;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int edge_count() const { return static_cast<int>(edge_vertices.size()); }
  int face_count() const { return static_cast<int>(triangles.size()); }
  int euler_characteristic() const {
    return vertex_count() - edge_count() + face_count();
  }
};

namespace detail {

inline void build_connectivity(SphereMesh& mesh) {
  std::map<std::pair<int, int>, int> edge_ids;
  mesh.triangle_edges.assign(mesh.triangles.size(), {-1, -1, -1});
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int side = 0; side < 3; ++side) {
      int a = tri[side];
      int b = tri[(side + 1) % 3];
      if (a > b) std::swap(a, b);
      auto [it, inserted] = edge_ids.try_emplace({a, b},
                                                 static_cast<int>(mesh.edge_vertices.size()));
      if (inserted) {
        mesh.edge_vertices.push_back({a, b});
        mesh.edge_triangles.push_back({-1, -1});
      }
      const int e = it->second;
      mesh.triangle_edges[t][side] = e;
      if (mesh.edge_triangles[e][0] < 0) {
        mesh.edge_triangles[e][0] = static_cast<int>(t);
      } else if (mesh.edge_triangles[e][1] < 0) {
        mesh.edge_triangles[e][1] = static_cast<int>(t);
      } else {
        throw Error(ErrorCode::invalid_argument,
                    "non-manifold edge in sphere mesh");
      }
    }
  }
  for (const auto& et : mesh.edge_triangles) {
    if (et[0] < 0 || et[1] < 0) {
      throw Error(ErrorCode::invalid_argument, "open edge in sphere mesh");
    }
  }
  mesh.triangle_neighbors.assign(mesh.triangles.size(), {-1, -1, -1});
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int side = 0; side < 3; ++side) {
      const auto& et = mesh.edge_triangles[mesh.triangle_edges[t][side]];
      mesh.triangle_neighbors[t][side] =
          et[0] == static_cast<int>(t) ? et[1] : et[0];
    }
  }
  mesh.vertex_triangles.assign(mesh.vertices.size(), {});
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int v : mesh.triangles[t]) {
      mesh.vertex_triangles[v].push_back(static_cast<int>(t));
    }
  }
  mesh.vertex_neighbors.assign(mesh.vertices.size(), {});
  for (const auto& ev : mesh.edge_vertices) {
    mesh.vertex_neighbors[ev[0]].push_back(ev[1]);
    mesh.vertex_neighbors[ev[1]].push_back(ev[0]);
  }
}

}  // namespace detail

// Deterministic mesh construction; an optional rotation is applied to the
// icosahedron seeds before subdividing, so a rotated mesh has exactly the
// same connectivity.
inline SphereMesh build_mesh(int depth,
                             const Eigen::Matrix3d& rotation =
                                 Eigen::Matrix3d::Identity()) {
  if (depth < 0 || depth > 10) {
    throw Error(ErrorCode::invalid_argument, "mesh depth must be in [0, 10]");
  }
  SphereMesh mesh;
  mesh.depth = depth;

  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const std::array<Eigen::Vector3d, 12> seeds = {{
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
  }};
  for (const auto& s : seeds) {
    mesh.vertices.push_back((rotation * s).normalized());
  }
  mesh.triangles = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };

  for (int level = 0; level < depth; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto midpoint_id = [&](int a, int b) {
      if (a > b) std::swap(a, b);
      auto [it, inserted] = midpoint.try_emplace({a, b},
                                                 static_cast<int>(mesh.vertices.size()));
      if (inserted) {
        mesh.vertices.push_back(
            (mesh.vertices[a] + mesh.vertices[b]).normalized());
      }
      return it->second;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(mesh.triangles.size() * 4);
    for (const auto& tri : mesh.triangles) {
      const int ab = midpoint_id(tri[0], tri[1]);
      const int bc = midpoint_id(tri[1], tri[2]);
      const int ca = midpoint_id(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.triangles = std::move(next);
  }

  detail::build_connectivity(mesh);
  if (mesh.euler_characteristic() != 2) {
    throw Error(ErrorCode::invalid_argument,
                "sphere mesh Euler characteristic is not 2");
  }
  return mesh;
}

// Seeded small rotation used to jitter the mesh when the traced field
// vanishes at a vertex. Attempt 0 is the identity; later attempts draw a
// random axis and a small random angle.
inline Eigen::Matrix3d jitter_rotation(std::uint64_t seed, int attempt) {
  if (attempt <= 0) return Eigen::Matrix3d::Identity();
  std::mt19937_64 rng(detail::mix_seed(seed, 0x6A697474ULL + attempt));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
  while (axis.norm() < 1e-12) {
    axis = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
  }
  std::uniform_real_distribution<double> angle_dist(0.01, 0.1);
  const double angle = angle_dist(rng) * attempt;
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace qtop
