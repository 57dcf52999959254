#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtop/betti_bounds.hpp"
#include "qtop/errors.hpp"
#include "qtop/oracle.hpp"
#include "qtop/quadform.hpp"
#include "qtop/spectral_curve.hpp"

namespace qtop {

using ordered_json = nlohmann::ordered_json;

// All floats in exported artifacts use 17 significant digits, enough to
// round-trip a double exactly.
inline std::string sig17(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

// Serializer with the 17-digit float policy; every other value type defers
// to the library dump.
inline void dump_json17(const ordered_json& j, std::string& out) {
  switch (j.type()) {
    case ordered_json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += ordered_json(it.key()).dump();
        out += ':';
        dump_json17(it.value(), out);
      }
      out += '}';
      break;
    }
    case ordered_json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ',';
        first = false;
        dump_json17(item, out);
      }
      out += ']';
      break;
    }
    case ordered_json::value_t::number_float:
      out += sig17(j.get<double>());
      break;
    default:
      out += j.dump();
      break;
  }
}

inline std::string dump_json17(const ordered_json& j) {
  std::string out;
  dump_json17(j, out);
  out += '\n';
  return out;
}

struct ParsedInput {
  Pencil pencil;
  int n = 0;
  std::string comment;
};

// Input schema: {"n": int, "quadrics": [[row-major (n+1)x(n+1) matrix], x(k+1)],
// "comment": string?}. Matrices are given in full for readability; symmetry
// is validated (relative asymmetry above 1e-6 is an error, below it the
// matrix is symmetrized).
inline ParsedInput parse_pencil_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j.contains("quadrics")) {
    throw Error(ErrorCode::parse_error,
                "input must be an object with \"n\" and \"quadrics\"");
  }
  if (!j["n"].is_number_integer()) {
    throw Error(ErrorCode::parse_error, "\"n\" must be an integer");
  }
  const int n = j["n"].get<int>();
  if (n < 1) {
    throw Error(ErrorCode::parse_error, "\"n\" must be >= 1");
  }
  const int dim = n + 1;
  if (!j["quadrics"].is_array() || j["quadrics"].empty()) {
    throw Error(ErrorCode::parse_error, "\"quadrics\" must be a nonempty array");
  }

  std::vector<QuadraticForm> forms;
  for (const auto& entry : j["quadrics"]) {
    if (!entry.is_array() ||
        entry.size() != static_cast<std::size_t>(dim) * dim) {
      throw Error(ErrorCode::dimension_mismatch,
                  "each quadric must be a row-major (n+1)x(n+1) matrix");
    }
    Eigen::MatrixXd m(dim, dim);
    std::size_t idx = 0;
    for (int r = 0; r < dim; ++r) {
      for (int c = 0; c < dim; ++c, ++idx) {
        if (!entry[idx].is_number()) {
          throw Error(ErrorCode::parse_error, "matrix entries must be numbers");
        }
        m(r, c) = entry[idx].get<double>();
      }
    }
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (scale > 0 && asym > 1e-6 * scale) {
      throw Error(ErrorCode::asymmetric_input,
                  "matrix relative asymmetry exceeds 1e-6");
    }
    forms.emplace_back(std::move(m));
  }
  ParsedInput parsed{Pencil(std::move(forms)), n,
                     j.contains("comment") && j["comment"].is_string()
                         ? j["comment"].get<std::string>()
                         : std::string()};
  return parsed;
}

inline ParsedInput load_pencil_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io_error, "cannot read input file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_pencil_json(buffer.str());
}

inline ordered_json report_to_json(const BoundReport& report) {
  ordered_json j;
  j["n"] = report.n;
  j["k"] = report.k;
  j["mu"] = report.mu;
  j["nu"] = report.nu;
  j["oval_count"] = report.oval_count;
  j["region_count"] = report.region_count;
  j["region_labels"] = report.region_labels;
  ordered_json levels = ordered_json::array();
  for (std::size_t i = 0; i < report.level_j.size(); ++i) {
    levels.push_back({{"j", report.level_j[i]}, {"betti", report.level_betti[i]}});
  }
  j["levels"] = levels;
  j["eq1_bound"] = report.eq1;
  j["refined_bound"] = report.refined;
  j["theorem_cap"] = report.cap_theorem;
  j["harnack_cap"] = report.cap_harnack;
  j["harnack_ok"] = report.harnack_ok;
  j["epsilon_used"] = report.epsilon_used;
  j["mesh_depth"] = report.mesh_depth;
  j["seed"] = report.seed;
  j["epsilon_overridden"] = report.epsilon_overridden;
  j["initial_epsilon"] = report.initial_epsilon;
  j["stabilization_iterations"] = report.stabilization_iterations;
  j["stabilization_halvings"] = report.stabilization_halvings;
  j["ladder_stage"] = report.ladder_stage;
  j["jitter_attempts"] = report.jitter_attempts;
  j["p_redraws"] = report.p_redraws;
  j["stabilized"] = report.stabilized;
  j["refinement_checked"] = report.refinement_checked;
  j["refinement_stable"] = report.refinement_stable;
  j["authoritative"] = report.authoritative;
  j["zero_tol_rel"] = report.zero_tol_rel;
  return j;
}

inline ordered_json verdict_to_json(const Verdict& verdict,
                                    const OracleResult& oracle) {
  ordered_json j;
  j["verdict"] = to_string(verdict.status);
  j["oracle_estimate"] = verdict.oracle_estimate;
  j["oracle_b0"] = oracle.estimate.b0;
  j["oracle_b0_coarse"] = oracle.b0_coarse;
  j["oracle_flag"] = to_string(oracle.estimate.flag);
  j["oracle_points"] = static_cast<long long>(oracle.sample.points.size());
  j["oracle_resolution_coarse"] = oracle.resolution_coarse;
  j["oracle_resolution_fine"] = oracle.resolution_fine;
  j["oracle_certified_empty"] = oracle.sample.certified_empty;
  j["oracle_budget_exceeded"] = oracle.sample.budget_exceeded;
  j["oracle_authoritative"] = verdict.oracle_authoritative;
  j["curve_authoritative"] = verdict.curve_authoritative;
  j["refined_bound"] = verdict.refined_bound;
  j["theorem_cap"] = verdict.cap;
  return j;
}

inline ordered_json error_json(ErrorCode code, const std::string& message) {
  ordered_json j;
  j["error"] = {{"code", to_string(code)}, {"message", message}};
  return j;
}

// Oval export: one row per polyline point, unit coordinates.
inline std::string ovals_csv(const CurveTrace& trace) {
  std::string out = "oval_id,point_index,x,y,z\n";
  for (std::size_t oval = 0; oval < trace.ovals.size(); ++oval) {
    const auto& points = trace.ovals[oval].points;
    for (std::size_t i = 0; i < points.size(); ++i) {
      out += std::to_string(oval);
      out += ',';
      out += std::to_string(i);
      for (int c = 0; c < 3; ++c) {
        out += ',';
        out += sig17(points[i][c]);
      }
      out += '\n';
    }
  }
  return out;
}

inline std::string sample_csv(const VarietySample& sample,
                              const std::vector<int>& cluster_of_point) {
  std::string out;
  for (int c = 0; c <= sample.n; ++c) {
    out += "x" + std::to_string(c) + ",";
  }
  out += "cluster\n";
  for (std::size_t i = 0; i < sample.points.size(); ++i) {
    for (int c = 0; c <= sample.n; ++c) {
      out += sig17(sample.points[i][c]);
      out += ',';
    }
    out += i < cluster_of_point.size() ? std::to_string(cluster_of_point[i])
                                       : std::string("-1");
    out += '\n';
  }
  return out;
}

}  // namespace qtop
