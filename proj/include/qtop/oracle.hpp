#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qtop/betti_bounds.hpp"
#include "qtop/errors.hpp"
#include "qtop/quadform.hpp"

namespace qtop {

// Distance between projective points given by unit representatives.
inline double projective_distance(const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& b) {
  return std::min((a - b).norm(), (a + b).norm());
}

// Canonical representative: first coordinate of magnitude above 1e-12 made
// positive. Points near the flip locus are handled by always measuring with
// projective_distance.
inline void canonicalize_sign(Eigen::VectorXd& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) > 1e-12) {
      if (x[i] < 0) x = -x;
      return;
    }
  }
}

namespace detail {

// Spatial hash over unit vectors supporting neighbor queries in the
// projective metric (probes buckets around both +x and -x).
class ProjectiveGrid {
 public:
  ProjectiveGrid(const std::vector<Eigen::VectorXd>& points, double cell)
      : points_(points), cell_(cell) {}

  void insert(int idx) { buckets_[key_of(points_[idx])].push_back(idx); }

  template <typename Visitor>
  void visit_neighbors(const Eigen::VectorXd& x, double radius,
                       Visitor&& visit) const {
    const int range = static_cast<int>(std::ceil(radius / cell_));
    for (int sign : {1, -1}) {
      const Eigen::VectorXd y = sign * x;
      enumerate_offsets(y, range, [&](std::uint64_t key) {
        auto it = buckets_.find(key);
        if (it == buckets_.end()) return;
        for (int idx : it->second) {
          const double d = projective_distance(points_[idx], x);
          if (d <= radius) visit(idx, d);
        }
      });
      // A unit-vector neighbor within radius < 1 is found by exactly one of
      // the two sign probes, so no deduplication is needed; stop after the
      // first probe only if x is its own canonical antipode (never for unit
      // vectors).
    }
  }

 private:
  std::uint64_t key_of(const Eigen::VectorXd& x) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const auto q = static_cast<std::int64_t>(std::floor(x[i] / cell_));
      h ^= static_cast<std::uint64_t>(q) + 0x9E3779B97F4A7C15ULL + (h << 6) +
           (h >> 2);
    }
    return h;
  }

  template <typename F>
  void enumerate_offsets(const Eigen::VectorXd& y, int range, F&& f) const {
    const int dim = static_cast<int>(y.size());
    std::vector<std::int64_t> base(dim), cur(dim);
    for (int i = 0; i < dim; ++i) {
      base[i] = static_cast<std::int64_t>(std::floor(y[i] / cell_));
    }
    const int span = 2 * range + 1;
    long long total = 1;
    for (int i = 0; i < dim; ++i) total *= span;
    for (long long code = 0; code < total; ++code) {
      long long rest = code;
      for (int i = 0; i < dim; ++i) {
        cur[i] = base[i] + rest % span - range;
        rest /= span;
      }
      std::uint64_t h = 1469598103934665603ULL;
      for (int i = 0; i < dim; ++i) {
        h ^= static_cast<std::uint64_t>(cur[i]) + 0x9E3779B97F4A7C15ULL +
             (h << 6) + (h >> 2);
      }
      f(h);
    }
  }

  const std::vector<Eigen::VectorXd>& points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

// Tangent-space Gauss-Newton on the residual (q_0(x), ..., q_k(x)),
// constrained to the unit sphere by projecting the Jacobian and
// renormalizing after each step.
inline Eigen::VectorXd gauss_newton_project(const Pencil& pencil,
                                            Eigen::VectorXd x, double target,
                                            int max_steps,
                                            double* final_residual) {
  const int dim = pencil.dim();
  const int m = pencil.k() + 1;
  Eigen::VectorXd residual(m);
  Eigen::MatrixXd jac(m, dim);
  double res_norm = std::numeric_limits<double>::infinity();
  for (int step = 0; step < max_steps; ++step) {
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd qx = pencil.form(i).matrix() * x;
      residual[i] = x.dot(qx);
      jac.row(i) = 2.0 * qx.transpose();
    }
    res_norm = residual.cwiseAbs().maxCoeff();
    if (res_norm <= target) break;
    const Eigen::MatrixXd tangent_jac = jac - (jac * x) * x.transpose();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(tangent_jac);
    Eigen::VectorXd delta = cod.solve(-residual);
    const double step_norm = delta.norm();
    if (!(step_norm > 0) || !std::isfinite(step_norm)) break;
    if (step_norm > 0.5) delta *= 0.5 / step_norm;
    x = (x + delta).normalized();
  }
  for (int i = 0; i < m; ++i) {
    residual[i] = x.dot(pencil.form(i).matrix() * x);
  }
  *final_residual = residual.cwiseAbs().maxCoeff();
  return x;
}

}  // namespace detail

// Point sample of the base locus X on S^n, stored with antipodal
// identification.
struct VarietySample {
  int n = 0;
  int resolution = 0;
  double residual_tol = 1e-8;
  std::vector<Eigen::VectorXd> points;
  double cell_diameter = 0.0;
  bool budget_exceeded = false;
  bool certified_empty = false;  // every cell excluded by interval bounds
  long long cells_processed = 0;
  int survivor_cells = 0;
};

// Recursive subdivision of S^n through the n+1 cube faces {x_a = 1} (radial
// projection; the positive faces cover RP^n once). A cell is discarded when
// some |q_i| at its projected center exceeds the Lipschitz bound over the
// cell, is refined while every q_i straddles zero, and at full resolution
// its center is projected onto X by Gauss-Newton and filtered by the
// residual.
inline VarietySample sample_variety(const Pencil& pencil, int resolution,
                                    double residual_tol = 1e-8,
                                    long long cell_budget = 10000000) {
  const int dim = pencil.dim();
  const int n = dim - 1;
  if (dim > 5) {
    throw Error(ErrorCode::invalid_argument,
                "variety sampling supports n+1 <= 5");
  }
  if (resolution < 0 || resolution > 9) {
    throw Error(ErrorCode::invalid_argument, "resolution must be in [0, 9]");
  }
  if (!(residual_tol > 0)) {
    throw Error(ErrorCode::invalid_argument, "residual_tol must be positive");
  }

  VarietySample sample;
  sample.n = n;
  sample.resolution = resolution;
  sample.residual_tol = residual_tol;

  std::vector<double> lipschitz;
  for (const auto& form : pencil.forms()) {
    lipschitz.push_back(2.0 * spectral_radius(form));
  }

  struct Cell {
    Eigen::VectorXd center;  // box coordinates, one coordinate pinned to 1
    int axis;
    double half;
  };
  std::vector<Cell> current;
  for (int axis = 0; axis < dim; ++axis) {
    Cell cell;
    cell.center = Eigen::VectorXd::Zero(dim);
    cell.center[axis] = 1.0;
    cell.axis = axis;
    cell.half = 1.0;
    current.push_back(std::move(cell));
  }

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  auto is_excluded = [&](const Cell& cell, const Eigen::VectorXd& unit) {
    const double radius = cell.half * sqrt_n;
    for (int i = 0; i <= pencil.k(); ++i) {
      if (std::abs(pencil.form(i)(unit)) > lipschitz[i] * radius) return true;
    }
    return false;
  };

  std::vector<Cell> survivors;
  for (int level = 0;; ++level) {
    std::vector<Cell> keep;
    for (auto& cell : current) {
      if (++sample.cells_processed > cell_budget) {
        sample.budget_exceeded = true;
        break;
      }
      const Eigen::VectorXd unit = cell.center.normalized();
      if (!is_excluded(cell, unit)) keep.push_back(std::move(cell));
    }
    if (sample.budget_exceeded || level == resolution) {
      survivors = std::move(keep);
      sample.cell_diameter = 2.0 * std::pow(0.5, level) * sqrt_n;
      break;
    }
    std::vector<Cell> next;
    next.reserve(keep.size() * (1u << n));
    for (const auto& cell : keep) {
      const double child_half = cell.half / 2.0;
      for (unsigned corner = 0; corner < (1u << n); ++corner) {
        Cell child;
        child.center = cell.center;
        child.axis = cell.axis;
        child.half = child_half;
        unsigned bit = 0;
        for (int j = 0; j < dim; ++j) {
          if (j == cell.axis) continue;
          child.center[j] += (corner >> bit & 1u) ? child_half : -child_half;
          ++bit;
        }
        next.push_back(std::move(child));
      }
    }
    current = std::move(next);
  }

  sample.survivor_cells = static_cast<int>(survivors.size());
  sample.certified_empty = survivors.empty() && !sample.budget_exceeded;

  // Project survivors and deduplicate (antipodal representatives collapse
  // to near-identical canonical points).
  const double dedup_radius = 1e-8;
  detail::ProjectiveGrid dedup(sample.points, dedup_radius);
  for (const auto& cell : survivors) {
    double residual = 0.0;
    Eigen::VectorXd x = detail::gauss_newton_project(
        pencil, cell.center.normalized(), 0.01 * residual_tol, 50, &residual);
    if (!(residual <= residual_tol)) continue;
    canonicalize_sign(x);
    bool duplicate = false;
    dedup.visit_neighbors(x, dedup_radius,
                          [&](int, double) { duplicate = true; });
    if (duplicate) continue;
    sample.points.push_back(std::move(x));
    dedup.insert(static_cast<int>(sample.points.size()) - 1);
  }
  return sample;
}

enum class OracleFlag { exact, lower_bound_only };

inline const char* to_string(OracleFlag flag) {
  return flag == OracleFlag::exact ? "exact" : "lower_bound_only";
}

struct BettiEstimate {
  int b0 = 0;
  long long estimate = 0;
  OracleFlag flag = OracleFlag::exact;
  bool clusters_are_points = false;
  bool clusters_are_curves = false;
  std::vector<int> cluster_of_point;
};

// b_0 by single-linkage clustering at radius 3x the cell diameter, then a
// dimension heuristic per cluster: tight clusters are isolated points of X;
// clusters that thin to a closed chain (every thinned point has exactly two
// thinned neighbors and local PCA is line-like) are circles, contributing 2
// to b each. Anything else downgrades the estimate to a lower bound.
inline BettiEstimate estimate_betti(const VarietySample& sample,
                                    const Pencil& pencil) {
  (void)pencil;
  BettiEstimate est;
  est.cluster_of_point.assign(sample.points.size(), -1);
  if (sample.points.empty()) {
    est.flag = sample.certified_empty ? OracleFlag::exact
                                      : OracleFlag::lower_bound_only;
    return est;
  }

  const double link_radius = 3.0 * sample.cell_diameter;
  const int count = static_cast<int>(sample.points.size());

  std::vector<int> parent(count);
  for (int i = 0; i < count; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  detail::ProjectiveGrid grid(sample.points, link_radius);
  for (int i = 0; i < count; ++i) {
    grid.visit_neighbors(sample.points[i], link_radius, [&](int j, double) {
      const int a = find(i);
      const int b = find(j);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    });
    grid.insert(i);
  }

  std::vector<int> cluster_id(count, -1);
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < count; ++i) {
    const int root = find(i);
    if (cluster_id[root] < 0) {
      cluster_id[root] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    cluster_id[i] = cluster_id[root];
    clusters[cluster_id[root]].push_back(i);
    est.cluster_of_point[i] = cluster_id[i];
  }
  est.b0 = static_cast<int>(clusters.size());

  bool all_points = true;
  bool all_curves = true;
  const double h = 3.0 * sample.cell_diameter;
  for (const auto& cluster : clusters) {
    // 0-dimensional: the whole cluster sits in a ball of cell scale.
    bool tight = true;
    for (int idx : cluster) {
      if (projective_distance(sample.points[cluster.front()],
                              sample.points[idx]) > 1.5 * sample.cell_diameter) {
        tight = false;
        break;
      }
    }
    if (tight) {
      all_curves = false;
      continue;
    }
    all_points = false;

    // 1-dimensional closed-curve test on a thinned subsample.
    std::vector<Eigen::VectorXd> kept;
    {
      detail::ProjectiveGrid thin_grid(kept, h);
      for (int idx : cluster) {
        bool near = false;
        thin_grid.visit_neighbors(sample.points[idx], h,
                                  [&](int, double) { near = true; });
        if (near) continue;
        kept.push_back(sample.points[idx]);
        thin_grid.insert(static_cast<int>(kept.size()) - 1);
      }
    }
    bool curve = kept.size() >= 4;
    if (curve) {
      detail::ProjectiveGrid kept_grid(kept, 1.7 * h);
      for (int i = 0; i < static_cast<int>(kept.size()); ++i) kept_grid.insert(i);
      for (int i = 0; curve && i < static_cast<int>(kept.size()); ++i) {
        int neighbors = 0;
        kept_grid.visit_neighbors(kept[i], 1.7 * h, [&](int j, double) {
          if (j != i) ++neighbors;
        });
        if (neighbors != 2) curve = false;
      }
    }
    if (curve) {
      // Local PCA: within 2.5h of each thinned point the cluster must look
      // like a line segment.
      detail::ProjectiveGrid local_grid(sample.points, 2.5 * h);
      for (int idx : cluster) local_grid.insert(idx);
      for (std::size_t i = 0; curve && i < kept.size(); ++i) {
        const Eigen::VectorXd& x = kept[i];
        std::vector<Eigen::VectorXd> aligned;
        local_grid.visit_neighbors(x, 2.5 * h, [&](int j, double) {
          const Eigen::VectorXd& y = sample.points[j];
          aligned.push_back((y - x).norm() <= (y + x).norm() ? y : -y);
        });
        if (aligned.size() < 3) {
          curve = false;
          break;
        }
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.size());
        for (const auto& y : aligned) mean += y;
        mean /= static_cast<double>(aligned.size());
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(x.size(), x.size());
        for (const auto& y : aligned) {
          cov += (y - mean) * (y - mean).transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
            cov, Eigen::EigenvaluesOnly);
        const auto& ev = solver.eigenvalues();
        const double top = ev[ev.size() - 1];
        const double second = ev[ev.size() - 2];
        if (!(second <= 0.1225 * top)) curve = false;
      }
    }
    if (!curve) {
      all_curves = false;
    }
  }

  if (all_points) {
    est.estimate = est.b0;
    est.flag = OracleFlag::exact;
    est.clusters_are_points = true;
  } else if (all_curves) {
    est.estimate = 2LL * est.b0;
    est.flag = OracleFlag::exact;
    est.clusters_are_curves = true;
  } else {
    est.estimate = est.b0;
    est.flag = OracleFlag::lower_bound_only;
  }
  return est;
}

struct OracleResult {
  VarietySample sample;     // finer of the two runs
  BettiEstimate estimate;   // estimate on the finer run
  int resolution_coarse = 0;
  int resolution_fine = 0;
  int b0_coarse = 0;
  bool authoritative = false;
};

// Runs the oracle at two consecutive resolutions; the result is
// authoritative only when both runs stayed within budget, agree on b_0 and
// on the cluster classification, and an empty answer is exclusion-certified.
inline OracleResult run_oracle(const Pencil& pencil, int resolution,
                               double residual_tol = 1e-8,
                               long long cell_budget = 10000000) {
  OracleResult result;
  result.resolution_fine = std::min(resolution + 1, 9);
  result.resolution_coarse = result.resolution_fine - 1;

  VarietySample coarse =
      sample_variety(pencil, result.resolution_coarse, residual_tol, cell_budget);
  BettiEstimate coarse_est = estimate_betti(coarse, pencil);
  result.sample =
      sample_variety(pencil, result.resolution_fine, residual_tol, cell_budget);
  result.estimate = estimate_betti(result.sample, pencil);
  result.b0_coarse = coarse_est.b0;

  const bool empties_certified =
      (!result.sample.points.empty() || result.sample.certified_empty) &&
      (!coarse.points.empty() || coarse.certified_empty);
  result.authoritative =
      !coarse.budget_exceeded && !result.sample.budget_exceeded &&
      coarse_est.b0 == result.estimate.b0 &&
      coarse_est.clusters_are_points == result.estimate.clusters_are_points &&
      coarse_est.clusters_are_curves == result.estimate.clusters_are_curves &&
      empties_certified;
  return result;
}

enum class VerdictStatus { PASS, FAIL, NON_AUTHORITATIVE };

inline const char* to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::PASS: return "PASS";
    case VerdictStatus::FAIL: return "FAIL";
    case VerdictStatus::NON_AUTHORITATIVE: return "NON_AUTHORITATIVE";
  }
  return "unknown";
}

struct Verdict {
  VerdictStatus status = VerdictStatus::NON_AUTHORITATIVE;
  long long oracle_estimate = 0;
  long long refined_bound = 0;
  long long cap = 0;
  bool oracle_authoritative = false;
  bool curve_authoritative = false;
};

// PASS iff oracle estimate <= refined bound <= n(n+1), on authoritative
// runs of both pipelines. A FAIL with authoritative flags is data of the
// most serious kind.
inline Verdict verify_bound(const Pencil& pencil, const BoundReport& report,
                            const OracleResult& oracle) {
  if (report.n != pencil.dim() - 1) {
    throw Error(ErrorCode::dimension_mismatch,
                "bound report does not match the pencil");
  }
  Verdict verdict;
  verdict.oracle_estimate = oracle.estimate.estimate;
  verdict.refined_bound = report.refined;
  verdict.cap = theorem_cap(report.n);
  verdict.oracle_authoritative = oracle.authoritative;
  verdict.curve_authoritative = report.authoritative;
  if (!oracle.authoritative || !report.authoritative) {
    verdict.status = VerdictStatus::NON_AUTHORITATIVE;
  } else if (verdict.oracle_estimate <= verdict.refined_bound &&
             verdict.refined_bound <= verdict.cap) {
    verdict.status = VerdictStatus::PASS;
  } else {
    verdict.status = VerdictStatus::FAIL;
  }
  return verdict;
}

}  // namespace qtop
