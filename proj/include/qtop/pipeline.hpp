#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "qtop/betti_bounds.hpp"
#include "qtop/errors.hpp"
#include "qtop/quadform.hpp"
#include "qtop/spectral_curve.hpp"
#include "qtop/sphere_mesh.hpp"

namespace qtop {

struct PipelineOptions {
  int depth = 6;
  std::uint64_t seed = 0;
  std::optional<double> epsilon_override;
  std::optional<QuadraticForm> perturbation;  // default: seeded random draws
  int max_p_redraws = 10;
  int max_jitter = 4;
  bool refinement_check = true;
  StabilizationOptions stabilization;
};

struct PipelineResult {
  std::optional<QuadraticForm> perturbation;
  double epsilon = 0.0;
  CurveTrace trace;
  RegionMap regions;
  Filtration filtration;
  BoundReport report;
};

namespace detail {

struct TraceSummary {
  int oval_count = 0;
  std::vector<int> labels;
};

inline TraceSummary summarize(const CurveTrace& trace, const RegionMap& regions) {
  TraceSummary s;
  s.oval_count = trace.oval_count();
  s.labels = regions.index_label;
  std::sort(s.labels.begin(), s.labels.end());
  return s;
}

}  // namespace detail

// End-to-end curve pipeline for one pencil: draw a perturbation, jitter the
// mesh away from vertex hits, stabilize epsilon (or take the override),
// extract and validate regions, build the filtration, and confirm the
// result on the once-refined mesh. Perturbation re-draws react to failed
// stabilization; mesh jitter reacts to the field vanishing at a vertex.
inline PipelineResult run_curve_pipeline(const Pencil& pencil,
                                         const PipelineOptions& opts) {
  if (pencil.k() != 2) {
    throw Error(ErrorCode::unsupported_k,
                "the curve pipeline requires exactly three quadrics (k = 2)");
  }
  const int dim = pencil.dim();
  const int n = dim - 1;
  const int p_attempts = opts.perturbation ? 1 : std::max(1, opts.max_p_redraws);

  for (int p_attempt = 0; p_attempt < p_attempts; ++p_attempt) {
    const QuadraticForm p =
        opts.perturbation
            ? *opts.perturbation
            : random_posdef(dim, detail::mix_seed(opts.seed, p_attempt));
    bool stabilization_failed = false;
    for (int jitter = 0; jitter <= opts.max_jitter && !stabilization_failed;
         ++jitter) {
      const Eigen::Matrix3d rotation = jitter_rotation(opts.seed, jitter);
      const SphereMesh mesh = build_mesh(opts.depth, rotation);
      PipelineResult result;
      try {
        if (opts.epsilon_override) {
          const double epsilon = *opts.epsilon_override;
          if (!(epsilon > 0)) {
            throw Error(ErrorCode::invalid_argument,
                        "epsilon override must be positive");
          }
          result.epsilon = epsilon;
          result.trace = trace_curve(pencil, p, epsilon, mesh,
                                     opts.stabilization.trace);
          result.regions =
              extract_regions(result.trace, mesh, pencil, p, epsilon);
          if (!validate_jump(result.regions).ok) {
            throw Error(ErrorCode::region_topology,
                        "index jumps are not +-1 at the forced epsilon");
          }
          result.report.initial_epsilon = epsilon;
          result.report.stabilization_iterations = 1;
          result.report.epsilon_overridden = true;
        } else {
          StabilizationResult stab =
              choose_epsilon(pencil, p, mesh, opts.stabilization);
          result.epsilon = stab.epsilon;
          result.trace = std::move(stab.trace);
          result.regions = std::move(stab.regions);
          result.report.initial_epsilon = stab.initial_epsilon;
          result.report.stabilization_iterations = stab.evaluations;
          result.report.stabilization_halvings = stab.halvings;
          result.report.ladder_stage = stab.ladder_stage;
          result.report.stabilized = true;
        }
      } catch (const Error& err) {
        if (err.code() == ErrorCode::vertex_on_curve) continue;
        if (err.code() == ErrorCode::no_stabilization) {
          stabilization_failed = true;
          continue;
        }
        throw;
      }

      result.filtration = build_filtration(result.regions, n);
      BoundReport numbers = make_bound_report(result.filtration, result.regions);
      numbers.initial_epsilon = result.report.initial_epsilon;
      numbers.stabilization_iterations = result.report.stabilization_iterations;
      numbers.stabilization_halvings = result.report.stabilization_halvings;
      numbers.ladder_stage = result.report.ladder_stage;
      numbers.stabilized = result.report.stabilized;
      numbers.epsilon_overridden = result.report.epsilon_overridden;
      result.report = std::move(numbers);
      result.report.epsilon_used = result.epsilon;
      result.report.mesh_depth = opts.depth;
      result.report.seed = opts.seed;
      result.report.jitter_attempts = jitter;
      result.report.p_redraws = p_attempt;

      if (opts.refinement_check && opts.depth < 10) {
        result.report.refinement_checked = true;
        result.report.refinement_stable = false;
        try {
          const SphereMesh fine = build_mesh(opts.depth + 1, rotation);
          const CurveTrace fine_trace = trace_curve(
              pencil, p, result.epsilon, fine, opts.stabilization.trace);
          const RegionMap fine_regions =
              extract_regions(fine_trace, fine, pencil, p, result.epsilon);
          const auto coarse = detail::summarize(result.trace, result.regions);
          const auto refined = detail::summarize(fine_trace, fine_regions);
          result.report.refinement_stable =
              validate_jump(fine_regions).ok &&
              coarse.oval_count == refined.oval_count &&
              coarse.labels == refined.labels;
        } catch (const Error&) {
          result.report.refinement_stable = false;
        }
      }
      result.report.authoritative =
          (result.report.stabilized || result.report.epsilon_overridden) &&
          result.report.refinement_checked && result.report.refinement_stable;
      result.perturbation = p;
      return result;
    }
    if (!stabilization_failed && opts.epsilon_override) {
      // every jitter hit a vertex, with a forced epsilon there is nothing
      // else to vary
      break;
    }
  }
  throw Error(ErrorCode::no_stabilization,
              "curve pipeline failed for every perturbation draw and mesh "
              "jitter; the pencil appears singular at this mesh depth");
}

}  // namespace qtop
