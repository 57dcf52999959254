#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "qtop/errors.hpp"
#include "qtop/quadform.hpp"
#include "qtop/sphere_mesh.hpp"

namespace qtop {

struct TraceOptions {
  double vertex_tol_rel = 1e-12;   // |f(v)| must exceed this times max|f|
  double root_tol_rel = 1e-10;     // bisection target for |f| on edges
  int max_bisection_steps = 30;
};

// One connected component of the traced curve: a closed polyline whose
// points lie on mesh edges (edges[i] carries points[i]).
struct Oval {
  std::vector<int> edges;
  std::vector<Eigen::Vector3d> points;
};

struct CurveTrace {
  double epsilon = 0.0;
  std::vector<Oval> ovals;
  std::vector<char> edge_crossed;   // per mesh edge
  std::vector<int> edge_oval;       // per mesh edge, -1 when not crossed
  std::vector<double> vertex_field; // f at mesh vertices
  double field_scale = 0.0;         // max |f| over vertices

  int oval_count() const { return static_cast<int>(ovals.size()); }
};

// Partition of the mesh triangles into connected components of the curve
// complement, with one negative-inertia label per region.
struct RegionMap {
  int region_count = 0;
  int oval_count = 0;
  std::vector<int> triangle_region;
  std::vector<int> index_label;                 // region -> i^-(omega q - eps p)
  std::vector<int> representative;              // region -> labeling vertex
  std::vector<int> region_sign;                 // region -> sign of f (+1/-1)
  std::vector<std::array<int, 2>> oval_regions; // oval -> its two sides
};

struct JumpReport {
  bool ok = true;
  std::vector<int> violating_ovals;
};

namespace detail {

// Batched evaluation of f(omega) = det(omega Q - eps P) with reused buffers.
class DetFieldEvaluator {
 public:
  DetFieldEvaluator(const Pencil& pencil, const QuadraticForm& p)
      : q0_(pencil.form(0).matrix()),
        q1_(pencil.form(1).matrix()),
        q2_(pencil.form(2).matrix()),
        p_(p.matrix()),
        work_(p.dim(), p.dim()),
        lu_(p.dim()) {}

  double operator()(const Eigen::Vector3d& omega, double epsilon) const {
    work_ = omega[0] * q0_ + omega[1] * q1_ + omega[2] * q2_ - epsilon * p_;
    lu_.compute(work_);
    return lu_.determinant();
  }

  void assemble(const Eigen::Vector3d& omega, double epsilon,
                Eigen::MatrixXd& out) const {
    out = omega[0] * q0_ + omega[1] * q1_ + omega[2] * q2_ - epsilon * p_;
  }

 private:
  const Eigen::MatrixXd& q0_;
  const Eigen::MatrixXd& q1_;
  const Eigen::MatrixXd& q2_;
  const Eigen::MatrixXd& p_;
  mutable Eigen::MatrixXd work_;
  mutable Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

inline void require_curve_inputs(const Pencil& pencil, const QuadraticForm& p,
                                 double epsilon) {
  if (pencil.k() != 2) {
    throw Error(ErrorCode::unsupported_k,
                "curve tracing requires a pencil with k = 2");
  }
  if (p.dim() != pencil.dim()) {
    throw Error(ErrorCode::dimension_mismatch,
                "perturbation dimension must match the pencil");
  }
  if (!(epsilon > 0)) {
    throw Error(ErrorCode::invalid_argument, "epsilon must be positive");
  }
}

inline Eigen::Vector3d slerp(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                             double t) {
  const double cos_theta = std::clamp(a.dot(b), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  if (theta < 1e-8) return (a + t * (b - a)).normalized();
  const double s = std::sin(theta);
  return (std::sin((1.0 - t) * theta) / s * a + std::sin(t * theta) / s * b)
      .normalized();
}

struct DisjointSet {
  std::vector<int> parent;

  explicit DisjointSet(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Inertia with the relative degeneracy threshold derived from the matrix
// itself; the label path requires a clean (no numerically-zero eigenvalue)
// answer and reports degeneracy to the caller otherwise.
inline InertiaTriple strict_inertia(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::eigen_failure, "eigenvalue computation failed");
  }
  const double tol = std::max(kZeroTolRel * solver.eigenvalues().cwiseAbs().maxCoeff(),
                              std::numeric_limits<double>::min());
  InertiaTriple t;
  for (int i = 0; i < m.rows(); ++i) {
    const double ev = solver.eigenvalues()[i];
    if (ev > tol) {
      ++t.positive;
    } else if (ev < -tol) {
      ++t.negative;
    } else {
      ++t.zero;
    }
  }
  return t;
}

}  // namespace detail

// f(omega) = det(omega Q - eps P), the defining field of the traced curve.
inline double det_field(const Pencil& pencil, const QuadraticForm& p,
                        double epsilon, const Eigen::Vector3d& omega) {
  detail::require_curve_inputs(pencil, p, epsilon);
  detail::DetFieldEvaluator eval(pencil, p);
  return eval(omega, epsilon);
}

// Marching-triangles extraction of {f = 0} on the mesh. Each triangle with
// two sign-change edges contributes one segment; segments are linked into
// closed ovals. Because every vertex carries a strict sign, a triangle has
// exactly 0 or 2 crossed edges; 3 would indicate a broken field and is
// reported as ambiguous.
inline CurveTrace trace_curve(const Pencil& pencil, const QuadraticForm& p,
                              double epsilon, const SphereMesh& mesh,
                              const TraceOptions& opts = {}) {
  detail::require_curve_inputs(pencil, p, epsilon);
  detail::DetFieldEvaluator eval(pencil, p);

  CurveTrace trace;
  trace.epsilon = epsilon;
  trace.vertex_field.resize(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    trace.vertex_field[v] = eval(mesh.vertices[v], epsilon);
  }
  trace.field_scale = 0.0;
  for (double f : trace.vertex_field) {
    trace.field_scale = std::max(trace.field_scale, std::abs(f));
  }
  const double vertex_tol = opts.vertex_tol_rel * trace.field_scale;
  for (double f : trace.vertex_field) {
    if (std::abs(f) <= vertex_tol) {
      throw Error(ErrorCode::vertex_on_curve,
                  "field vanishes at a mesh vertex; jitter the mesh rotation");
    }
  }

  trace.edge_crossed.assign(mesh.edge_count(), 0);
  trace.edge_oval.assign(mesh.edge_count(), -1);
  std::vector<Eigen::Vector3d> edge_point(mesh.edge_count());
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const auto [a, b] = mesh.edge_vertices[e];
    double fa = trace.vertex_field[a];
    double fb = trace.vertex_field[b];
    if ((fa > 0) == (fb > 0)) continue;
    trace.edge_crossed[e] = 1;

    Eigen::Vector3d lo = mesh.vertices[a];
    Eigen::Vector3d hi = mesh.vertices[b];
    if (fa > 0) {
      std::swap(lo, hi);
      std::swap(fa, fb);
    }
    // Bisection along the great-circle edge, seeded by the linear-
    // interpolation root; the sign structure is already decided, this only
    // sharpens the exported geometry.
    double t = fa / (fa - fb);
    Eigen::Vector3d point = detail::slerp(lo, hi, std::clamp(t, 0.0, 1.0));
    double t_lo = 0.0, t_hi = 1.0;
    double f_mid = eval(point, epsilon);
    for (int step = 0; step < opts.max_bisection_steps &&
                       std::abs(f_mid) > opts.root_tol_rel * trace.field_scale;
         ++step) {
      if (f_mid < 0) {
        t_lo = t;
      } else {
        t_hi = t;
      }
      t = 0.5 * (t_lo + t_hi);
      point = detail::slerp(lo, hi, t);
      f_mid = eval(point, epsilon);
    }
    edge_point[e] = point;
  }

  // Crossed-edge pairs per triangle.
  std::vector<std::array<int, 2>> segment(mesh.face_count(), {-1, -1});
  for (int t = 0; t < mesh.face_count(); ++t) {
    int count = 0;
    for (int e : mesh.triangle_edges[t]) {
      if (!trace.edge_crossed[e]) continue;
      if (count < 2) segment[t][count] = e;
      ++count;
    }
    if (count != 0 && count != 2) {
      throw Error(ErrorCode::ambiguous_triangle,
                  "triangle with " + std::to_string(count) +
                      " crossed edges; refine the mesh");
    }
  }

  // Link segments into closed ovals: each crossed edge joins exactly two
  // triangles, each crossed triangle joins exactly two crossed edges.
  std::vector<char> visited(mesh.edge_count(), 0);
  for (int start = 0; start < mesh.edge_count(); ++start) {
    if (!trace.edge_crossed[start] || visited[start]) continue;
    Oval oval;
    int edge = start;
    int tri = mesh.edge_triangles[start][0];
    while (true) {
      visited[edge] = 1;
      trace.edge_oval[edge] = static_cast<int>(trace.ovals.size());
      oval.edges.push_back(edge);
      oval.points.push_back(edge_point[edge]);
      const auto& seg = segment[tri];
      const int next_edge = seg[0] == edge ? seg[1] : seg[0];
      const auto& tris = mesh.edge_triangles[next_edge];
      const int next_tri = tris[0] == tri ? tris[1] : tris[0];
      edge = next_edge;
      tri = next_tri;
      if (edge == start) break;
    }
    trace.ovals.push_back(std::move(oval));
  }
  return trace;
}

// Connected components of the curve complement via union-find over
// triangles (merging across non-crossed edges), labeled by the negative
// inertia index at a representative vertex chosen as far as possible from
// the crossed edges. Labels are cross-checked at up to two further interior
// vertices and against the sign of f, which must equal (-1)^label.
inline RegionMap extract_regions(const CurveTrace& trace, const SphereMesh& mesh,
                                 const Pencil& pencil, const QuadraticForm& p,
                                 double epsilon) {
  detail::require_curve_inputs(pencil, p, epsilon);
  const int dim = pencil.dim();

  detail::DisjointSet dsu(mesh.face_count());
  for (int e = 0; e < mesh.edge_count(); ++e) {
    if (trace.edge_crossed[e]) continue;
    dsu.unite(mesh.edge_triangles[e][0], mesh.edge_triangles[e][1]);
  }

  RegionMap map;
  map.oval_count = trace.oval_count();
  map.triangle_region.assign(mesh.face_count(), -1);
  std::vector<int> root_region(mesh.face_count(), -1);
  for (int t = 0; t < mesh.face_count(); ++t) {
    const int root = dsu.find(t);
    if (root_region[root] < 0) {
      root_region[root] = map.region_count++;
    }
    map.triangle_region[t] = root_region[root];
  }

  // Region sign from non-crossed edges: both endpoints of such an edge lie
  // on the region's side of the curve.
  map.region_sign.assign(map.region_count, 0);
  for (int e = 0; e < mesh.edge_count(); ++e) {
    if (trace.edge_crossed[e]) continue;
    const int region = map.triangle_region[mesh.edge_triangles[e][0]];
    const int sign = trace.vertex_field[mesh.edge_vertices[e][0]] > 0 ? 1 : -1;
    if (map.region_sign[region] == 0) {
      map.region_sign[region] = sign;
    } else if (map.region_sign[region] != sign) {
      throw Error(ErrorCode::region_topology,
                  "inconsistent field sign inside one region");
    }
  }
  for (int r = 0; r < map.region_count; ++r) {
    if (map.region_sign[r] == 0) {
      throw Error(ErrorCode::region_topology, "region without a field sign");
    }
  }

  // Graph distance from the curve: multi-source BFS over the vertex graph
  // seeded with the endpoints of crossed edges.
  std::vector<int> dist(mesh.vertex_count(), -1);
  std::queue<int> queue;
  for (int e = 0; e < mesh.edge_count(); ++e) {
    if (!trace.edge_crossed[e]) continue;
    for (int v : mesh.edge_vertices[e]) {
      if (dist[v] < 0) {
        dist[v] = 0;
        queue.push(v);
      }
    }
  }
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop();
    for (int u : mesh.vertex_neighbors[v]) {
      if (dist[u] < 0) {
        dist[u] = dist[v] + 1;
        queue.push(u);
      }
    }
  }
  for (auto& d : dist) {
    if (d < 0) d = mesh.vertex_count();  // no curve at all
  }

  // Labeling candidates: vertices on the region's side whose entire
  // triangle fan lies in the region. Keep the three deepest per region.
  struct Candidate {
    int depth;
    int vertex;
  };
  std::vector<std::vector<Candidate>> eligible(map.region_count);
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const int region = map.triangle_region[mesh.vertex_triangles[v].front()];
    bool owned = true;
    for (int t : mesh.vertex_triangles[v]) {
      if (map.triangle_region[t] != region) {
        owned = false;
        break;
      }
    }
    if (!owned) continue;
    const int sign = trace.vertex_field[v] > 0 ? 1 : -1;
    if (sign != map.region_sign[region]) continue;
    auto& list = eligible[region];
    list.push_back({dist[v], v});
    std::sort(list.begin(), list.end(), [](const Candidate& a, const Candidate& b) {
      return a.depth != b.depth ? a.depth > b.depth : a.vertex < b.vertex;
    });
    if (list.size() > 3) list.resize(3);
  }
  // Fallback for regions so thin that no vertex is fully owned: deepest
  // vertex of the right sign on the region's triangles.
  std::vector<Candidate> fallback(map.region_count, {-1, -1});
  for (int t = 0; t < mesh.face_count(); ++t) {
    const int region = map.triangle_region[t];
    for (int v : mesh.triangles[t]) {
      const int sign = trace.vertex_field[v] > 0 ? 1 : -1;
      if (sign != map.region_sign[region]) continue;
      auto& best = fallback[region];
      if (dist[v] > best.depth ||
          (dist[v] == best.depth && (best.vertex < 0 || v < best.vertex))) {
        best = {dist[v], v};
      }
    }
  }

  detail::DetFieldEvaluator eval(pencil, p);
  Eigen::MatrixXd matrix(dim, dim);
  auto label_at = [&](int vertex) {
    eval.assemble(mesh.vertices[vertex], epsilon, matrix);
    const InertiaTriple t = detail::strict_inertia(matrix);
    if (t.zero != 0) {
      throw Error(ErrorCode::label_conflict,
                  "numerically degenerate eigenvalue at a labeling vertex");
    }
    return t.negative;
  };

  map.index_label.assign(map.region_count, -1);
  map.representative.assign(map.region_count, -1);
  for (int r = 0; r < map.region_count; ++r) {
    std::vector<int> probes;
    for (const auto& c : eligible[r]) probes.push_back(c.vertex);
    if (probes.empty() && fallback[r].vertex >= 0) {
      probes.push_back(fallback[r].vertex);
    }
    if (probes.empty()) {
      throw Error(ErrorCode::region_topology,
                  "region without a labeling vertex");
    }
    map.representative[r] = probes.front();
    map.index_label[r] = label_at(probes.front());
    for (std::size_t i = 1; i < probes.size(); ++i) {
      if (label_at(probes[i]) != map.index_label[r]) {
        throw Error(ErrorCode::label_conflict,
                    "two vertices in one region disagree on the index label");
      }
    }
    if (map.index_label[r] < 0 || map.index_label[r] > dim) {
      throw Error(ErrorCode::label_conflict, "index label out of range");
    }
    // det(omega Q - eps P) has sign (-1)^{i^-} off the curve.
    const int parity_sign = map.index_label[r] % 2 == 0 ? 1 : -1;
    if (parity_sign != map.region_sign[r]) {
      throw Error(ErrorCode::label_conflict,
                  "field sign inconsistent with the inertia label");
    }
  }

  // Each oval must separate exactly one pair of regions.
  map.oval_regions.assign(map.oval_count, {-1, -1});
  for (int e = 0; e < mesh.edge_count(); ++e) {
    if (!trace.edge_crossed[e]) continue;
    const int oval = trace.edge_oval[e];
    int a = map.triangle_region[mesh.edge_triangles[e][0]];
    int b = map.triangle_region[mesh.edge_triangles[e][1]];
    if (a > b) std::swap(a, b);
    auto& sides = map.oval_regions[oval];
    if (sides[0] < 0) {
      sides = {a, b};
    } else if (sides[0] != a || sides[1] != b) {
      throw Error(ErrorCode::region_topology,
                  "oval borders more than two regions");
    }
  }
  return map;
}

// Checks the unit-jump property of the index function: adjacent regions
// must differ by exactly 1. A violation list is diagnostic data, not an
// error; degenerate pencils legitimately produce violations.
inline JumpReport validate_jump(const RegionMap& map) {
  JumpReport report;
  for (int oval = 0; oval < map.oval_count; ++oval) {
    const auto& sides = map.oval_regions[oval];
    const int delta =
        std::abs(map.index_label[sides[0]] - map.index_label[sides[1]]);
    if (delta != 1) {
      report.ok = false;
      report.violating_ovals.push_back(oval);
    }
  }
  return report;
}

struct StabilizationOptions {
  int max_halvings = 40;
  TraceOptions trace;
};

struct StabilizationResult {
  double epsilon = 0.0;          // larger member of the first agreeing pair
  double initial_epsilon = 0.0;  // start of the run that stabilized
  int halvings = 0;              // halvings consumed in that run
  int evaluations = 0;           // total candidate evaluations, all runs
  int ladder_stage = 0;          // 0 = spec start, >0 = larger restarts
  CurveTrace trace;
  RegionMap regions;
};

// Epsilon selection by stabilization: halve from a small start until two
// consecutive values agree on the oval count and the multiset of region
// labels, with all index jumps equal to +-1. The returned epsilon is the
// larger member of the agreeing pair (both were validated; the larger one
// has the better mesh margin).
//
// The nominal start is 0.1 * min over mesh vertices of the spectral radius
// of omega Q (floored at 1e-3). Pencils whose spectral radius collapses
// somewhere on the sphere make that start far too small for any fixed mesh,
// so when the first run fails the search restarts from spectral scales
// derived from the maximum radius. Every accepted value passed the same
// validation; downstream refinement and oracle checks gate the result.
inline StabilizationResult choose_epsilon(const Pencil& pencil,
                                          const QuadraticForm& p,
                                          const SphereMesh& mesh,
                                          const StabilizationOptions& opts = {}) {
  detail::require_curve_inputs(pencil, p, 1.0);

  double radius_min = std::numeric_limits<double>::infinity();
  double radius_max = 0.0;
  {
    Eigen::MatrixXd m(pencil.dim(), pencil.dim());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    const auto& q0 = pencil.form(0).matrix();
    const auto& q1 = pencil.form(1).matrix();
    const auto& q2 = pencil.form(2).matrix();
    for (const auto& v : mesh.vertices) {
      m = v[0] * q0 + v[1] * q1 + v[2] * q2;
      solver.compute(m, Eigen::EigenvaluesOnly);
      if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::eigen_failure, "eigenvalue computation failed");
      }
      const double rho = solver.eigenvalues().cwiseAbs().maxCoeff();
      radius_min = std::min(radius_min, rho);
      radius_max = std::max(radius_max, rho);
    }
  }

  struct Candidate {
    CurveTrace trace;
    RegionMap regions;
    bool valid = false;
    int count = 0;
    std::vector<int> labels;
  };
  StabilizationResult result;
  auto evaluate = [&](double epsilon) {
    Candidate c;
    ++result.evaluations;
    try {
      c.trace = trace_curve(pencil, p, epsilon, mesh, opts.trace);
      c.regions = extract_regions(c.trace, mesh, pencil, p, epsilon);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::label_conflict ||
          err.code() == ErrorCode::region_topology ||
          err.code() == ErrorCode::ambiguous_triangle) {
        return c;  // under-resolved at this epsilon; keep halving
      }
      throw;
    }
    c.count = c.trace.oval_count();
    const int regions = c.regions.region_count;
    if (!validate_jump(c.regions).ok) return c;
    if (regions > c.count + 1) return c;
    if (c.count >= 1 && regions < 2) return c;
    c.labels = c.regions.index_label;
    std::sort(c.labels.begin(), c.labels.end());
    c.valid = true;
    return c;
  };

  std::vector<double> starts;
  starts.push_back(0.1 * std::max(radius_min, 1e-3));
  if (radius_max > 0.0) {
    for (double scale : {0.05, 0.1, 0.3}) {
      const double start = scale * radius_max;
      if (start > 2.0 * starts.front()) starts.push_back(start);
    }
  }

  for (std::size_t stage = 0; stage < starts.size(); ++stage) {
    double epsilon = starts[stage];
    Candidate prev = evaluate(epsilon);
    for (int h = 1; h <= opts.max_halvings; ++h) {
      const double next_epsilon = epsilon / 2.0;
      Candidate cur = evaluate(next_epsilon);
      if (prev.valid && cur.valid && prev.count == cur.count &&
          prev.labels == cur.labels) {
        result.epsilon = epsilon;
        result.initial_epsilon = starts[stage];
        result.halvings = h;
        result.ladder_stage = static_cast<int>(stage);
        result.trace = std::move(prev.trace);
        result.regions = std::move(prev.regions);
        return result;
      }
      prev = std::move(cur);
      epsilon = next_epsilon;
    }
  }
  throw Error(ErrorCode::no_stabilization,
              "no stabilized epsilon after " +
                  std::to_string(opts.max_halvings) + " halvings over " +
                  std::to_string(starts.size()) +
                  " starting scales; the pencil may be genuinely singular "
                  "for this perturbation");
}

}  // namespace qtop
