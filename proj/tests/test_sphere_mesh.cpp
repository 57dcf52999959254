#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "qtop/sphere_mesh.hpp"

using qtop::build_mesh;
using qtop::SphereMesh;

TEST_CASE("icosahedron counts at depth 0") {
  const SphereMesh mesh = build_mesh(0);
  CHECK(mesh.vertex_count() == 12);
  CHECK(mesh.face_count() == 20);
  CHECK(mesh.edge_count() == 30);
  CHECK(mesh.euler_characteristic() == 2);
}

TEST_CASE("one subdivision gives 42 vertices and 80 triangles") {
  const SphereMesh mesh = build_mesh(1);
  CHECK(mesh.vertex_count() == 42);
  CHECK(mesh.face_count() == 80);
  CHECK(mesh.euler_characteristic() == 2);
}

TEST_CASE("subdivision counts, unit vertices, and Euler characteristic") {
  for (int depth = 0; depth <= 4; ++depth) {
    const SphereMesh mesh = build_mesh(depth);
    CHECK(mesh.face_count() == 20 * (1 << (2 * depth)));
    CHECK(mesh.vertex_count() == 10 * (1 << (2 * depth)) + 2);
    CHECK(mesh.euler_characteristic() == 2);
    for (const auto& v : mesh.vertices) {
      CHECK(std::abs(v.norm() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("connectivity is consistent") {
  const SphereMesh mesh = build_mesh(3);
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const auto [t0, t1] = mesh.edge_triangles[e];
    CHECK(t0 != t1);
    CHECK(t0 >= 0);
    CHECK(t1 >= 0);
  }
  for (int t = 0; t < mesh.face_count(); ++t) {
    std::set<int> neighbors(mesh.triangle_neighbors[t].begin(),
                            mesh.triangle_neighbors[t].end());
    CHECK(neighbors.size() == 3);
    CHECK(neighbors.count(t) == 0);
    for (int e : mesh.triangle_edges[t]) {
      const auto& et = mesh.edge_triangles[e];
      CHECK((et[0] == t || et[1] == t));
    }
  }
}

TEST_CASE("rotation preserves connectivity and unit norms") {
  const auto rotation = qtop::jitter_rotation(7, 2);
  const SphereMesh base = build_mesh(2);
  const SphereMesh rotated = build_mesh(2, rotation);
  REQUIRE(rotated.vertex_count() == base.vertex_count());
  CHECK(rotated.triangles == base.triangles);
  for (int v = 0; v < base.vertex_count(); ++v) {
    CHECK((rotated.vertices[v] - rotation * base.vertices[v]).norm() <= 1e-12);
  }
  CHECK(qtop::jitter_rotation(7, 0).isIdentity(0.0));
}

TEST_CASE("depth out of range is rejected") {
  CHECK_THROWS_AS(build_mesh(-1), qtop::Error);
  CHECK_THROWS_AS(build_mesh(11), qtop::Error);
}
