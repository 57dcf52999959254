#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "qtop/errors.hpp"
#include "qtop/quadform.hpp"
#include "qtop/spectral_curve.hpp"

namespace qtop {

inline long long theorem_cap(int n) {
  return static_cast<long long>(n) * (n + 1);
}

// Oval-count cap for a smooth degree-(n+1) curve on S^2.
inline long long harnack_cap(int n) {
  return static_cast<long long>(n + 1) * (n - 1) + 2;
}

inline bool harnack_check(int oval_count, int n) {
  return oval_count <= harnack_cap(n);
}

// One level of the filtration: the union of regions whose index label is
// at most `threshold` = n - j, realizing the set with positive inertia
// index >= j+1 at stabilized epsilon.
struct OmegaLevel {
  int j = 0;
  int threshold = 0;
  std::vector<int> region_ids;
  std::vector<int> boundary_ovals;
  int betti_total = 0;
  bool full_sphere = false;
  bool empty = false;
};

struct Filtration {
  int n = 0;
  int mu = 0;          // max positive inertia index over the sphere
  int nu = 0;          // min positive inertia index over the sphere
  int oval_count = 0;
  std::vector<OmegaLevel> levels;  // proper levels, nu+1 <= j+1 <= mu
};

// Total Betti number of a level as a sub-surface of S^2: the number of
// boundary ovals when proper and nonempty, 2 for the full sphere, 0 when
// empty.
inline int betti_of_omega(const OmegaLevel& level) {
  if (level.empty) return 0;
  if (level.full_sphere) return 2;
  return static_cast<int>(level.boundary_ovals.size());
}

// Assembles the proper filtration levels from a validated region map. The
// positive inertia index of omega q is read off the perturbed labels as
// n+1 - label, so mu = n+1 - min label and nu = n+1 - max label. Each oval
// separates labels (l, l+1) and therefore lies on the boundary of exactly
// one level, the one with threshold l; the level Betti numbers consequently
// sum to the oval count.
inline Filtration build_filtration(const RegionMap& map, int n) {
  if (map.region_count < 1) {
    throw Error(ErrorCode::invalid_argument, "region map is empty");
  }
  if (!validate_jump(map).ok) {
    throw Error(ErrorCode::invalid_argument,
                "build_filtration requires a region map with unit jumps");
  }
  Filtration filtration;
  filtration.n = n;
  filtration.oval_count = map.oval_count;

  int min_label = map.index_label.front();
  int max_label = map.index_label.front();
  for (int label : map.index_label) {
    min_label = std::min(min_label, label);
    max_label = std::max(max_label, label);
  }
  if (min_label < 0 || max_label > n + 1) {
    throw Error(ErrorCode::invalid_argument, "index labels out of [0, n+1]");
  }
  filtration.mu = n + 1 - min_label;
  filtration.nu = n + 1 - max_label;

  for (int t = filtration.nu + 1; t <= filtration.mu; ++t) {
    OmegaLevel level;
    level.j = t - 1;
    level.threshold = n - level.j;
    for (int r = 0; r < map.region_count; ++r) {
      if (map.index_label[r] <= level.threshold) level.region_ids.push_back(r);
    }
    for (int oval = 0; oval < map.oval_count; ++oval) {
      const auto& sides = map.oval_regions[oval];
      const int low =
          std::min(map.index_label[sides[0]], map.index_label[sides[1]]);
      if (low == level.threshold) level.boundary_ovals.push_back(oval);
    }
    if (level.region_ids.empty() ||
        level.region_ids.size() == static_cast<std::size_t>(map.region_count)) {
      throw Error(ErrorCode::nesting_violation,
                  "proper level is empty or covers the sphere");
    }
    if (level.boundary_ovals.empty()) {
      throw Error(ErrorCode::nesting_violation,
                  "proper level without boundary ovals");
    }
    level.betti_total = static_cast<int>(level.boundary_ovals.size());
    filtration.levels.push_back(std::move(level));
  }

  // Nesting: thresholds decrease with j, so each level's region set must
  // contain the next one.
  for (std::size_t i = 1; i < filtration.levels.size(); ++i) {
    const auto& outer = filtration.levels[i - 1].region_ids;
    const auto& inner = filtration.levels[i].region_ids;
    if (!std::includes(outer.begin(), outer.end(), inner.begin(), inner.end())) {
      throw Error(ErrorCode::nesting_violation,
                  "filtration levels are not nested");
    }
  }
  int boundary_total = 0;
  for (const auto& level : filtration.levels) {
    boundary_total += level.betti_total;
  }
  if (boundary_total != map.oval_count) {
    throw Error(ErrorCode::nesting_violation,
                "ovals are not partitioned by the level boundaries");
  }
  return filtration;
}

// b(X) <= n+1 + sum over all j >= 0 of the level Betti numbers. Levels with
// j <= nu-1 are the whole sphere (2 each), levels with j >= mu are empty.
inline long long eq1_bound(const Filtration& filtration) {
  long long sum = 2LL * filtration.nu;
  for (const auto& level : filtration.levels) {
    sum += betti_of_omega(level);
  }
  return filtration.n + 1 + sum;
}

// The refined bound b(X) <= n+1 - 2(mu - nu) + c, with the mu = nu case
// collapsing to n+1.
inline long long refined_bound(const Filtration& filtration) {
  const int n = filtration.n;
  if (filtration.mu == filtration.nu) return n + 1;
  const long long value =
      n + 1 - 2LL * (filtration.mu - filtration.nu) + filtration.oval_count;
  if (value < 0) {
    throw Error(ErrorCode::nesting_violation, "refined bound is negative");
  }
  if (filtration.oval_count <= harnack_cap(n) && value > theorem_cap(n)) {
    throw Error(ErrorCode::nesting_violation,
                "refined bound exceeds n(n+1) despite the oval cap");
  }
  return value;
}

// Everything the pipeline reports for one pencil.
struct BoundReport {
  int n = 0;
  int k = 2;
  int mu = 0;
  int nu = 0;
  int oval_count = 0;
  int region_count = 0;
  std::vector<int> region_labels;  // sorted multiset
  std::vector<int> level_j;
  std::vector<int> level_betti;
  long long eq1 = 0;
  long long refined = 0;
  long long cap_theorem = 0;
  long long cap_harnack = 0;
  bool harnack_ok = false;

  double epsilon_used = 0.0;
  int mesh_depth = 0;
  std::uint64_t seed = 0;
  bool epsilon_overridden = false;
  double initial_epsilon = 0.0;
  int stabilization_iterations = 0;
  int stabilization_halvings = 0;
  int ladder_stage = 0;
  int jitter_attempts = 0;
  int p_redraws = 0;
  bool stabilized = false;
  bool refinement_checked = false;
  bool refinement_stable = false;
  bool authoritative = false;
  double zero_tol_rel = kZeroTolRel;
};

inline BoundReport make_bound_report(const Filtration& filtration,
                                     const RegionMap& regions) {
  BoundReport report;
  report.n = filtration.n;
  report.mu = filtration.mu;
  report.nu = filtration.nu;
  report.oval_count = filtration.oval_count;
  report.region_count = regions.region_count;
  report.region_labels = regions.index_label;
  std::sort(report.region_labels.begin(), report.region_labels.end());
  for (const auto& level : filtration.levels) {
    report.level_j.push_back(level.j);
    report.level_betti.push_back(level.betti_total);
  }
  report.eq1 = eq1_bound(filtration);
  report.refined = refined_bound(filtration);
  report.cap_theorem = theorem_cap(filtration.n);
  report.cap_harnack = harnack_cap(filtration.n);
  report.harnack_ok = harnack_check(filtration.oval_count, filtration.n);
  if (report.nu < 0 || report.nu > report.mu || report.mu > filtration.n + 1) {
    throw Error(ErrorCode::nesting_violation, "mu/nu out of range");
  }
  return report;
}

}  // namespace qtop
