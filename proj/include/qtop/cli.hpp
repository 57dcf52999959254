#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qtop/betti_bounds.hpp"
#include "qtop/errors.hpp"
#include "qtop/json_io.hpp"
#include "qtop/oracle.hpp"
#include "qtop/pipeline.hpp"
#include "qtop/quadform.hpp"
#include "qtop/spectral_curve.hpp"

namespace qtop {

enum class Command { analyze, trace, verify, selftest };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::analyze: return "analyze";
    case Command::trace: return "trace";
    case Command::verify: return "verify";
    case Command::selftest: return "selftest";
  }
  return "unknown";
}

struct JobConfig {
  Command command = Command::analyze;
  std::string input_path;
  int depth = 6;
  std::optional<double> epsilon;
  std::uint64_t seed = 0;
  int oracle_resolution = 5;
  std::string out_dir = ".";
};

// Exit codes: 0 success / PASS, 1 error, 2 FAIL verdict, 3 non-authoritative.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFail = 2;
inline constexpr int kExitNonAuthoritative = 3;

namespace detail {

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::io_error, "cannot write " + path.string());
  }
  out << content;
}

// Inertia-only report for pencils with k != 2: per-form inertia by both
// routes plus the sampled range of the positive index over S^k.
inline ordered_json inertia_report(const Pencil& pencil, std::uint64_t seed) {
  ordered_json j;
  j["n"] = pencil.dim() - 1;
  j["k"] = pencil.k();
  j["seed"] = seed;
  ordered_json forms = ordered_json::array();
  for (int i = 0; i <= pencil.k(); ++i) {
    const auto triple = inertia_eigen(pencil.form(i));
    forms.push_back({{"index", i},
                     {"positive", triple.positive},
                     {"negative", triple.negative},
                     {"zero", triple.zero},
                     {"descartes_positive", inertia_descartes(pencil.form(i))}});
  }
  j["forms"] = forms;

  std::mt19937_64 rng(qtop::detail::mix_seed(seed, 0x616E6C79ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  int min_plus = pencil.dim();
  int max_plus = 0;
  const int samples = 512;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd omega(pencil.k() + 1);
    do {
      for (int i = 0; i <= pencil.k(); ++i) omega[i] = gauss(rng);
    } while (omega.norm() < 1e-9);
    omega.normalize();
    const int plus = inertia_eigen(evaluate_pencil(pencil, omega)).positive;
    min_plus = std::min(min_plus, plus);
    max_plus = std::max(max_plus, plus);
  }
  j["sampled_mu"] = max_plus;
  j["sampled_nu"] = min_plus;
  j["sample_count"] = samples;
  j["sampled"] = true;
  return j;
}

}  // namespace detail

inline int run_selftest(std::ostream& out);

// Executes one batch job and writes its artifacts into the output
// directory: report.json always; ovals.csv for trace; sample.csv and
// verdict.json for verify. Errors produce an error JSON on stdout and in
// error.json.
inline int run_job(const JobConfig& config, std::ostream& out = std::cout) {
  namespace fs = std::filesystem;
  try {
    fs::create_directories(config.out_dir);
  } catch (const std::exception& e) {
    out << dump_json17(error_json(ErrorCode::io_error, e.what()));
    return kExitError;
  }

  if (config.command == Command::selftest) {
    return run_selftest(out);
  }

  try {
    ParsedInput input = load_pencil_file(config.input_path);
    if (input.pencil.k() != 2 && config.command != Command::analyze) {
      throw Error(ErrorCode::unsupported_k,
                  std::string(to_string(config.command)) +
                      " requires exactly three quadrics (k = 2), got k = " +
                      std::to_string(input.pencil.k()));
    }
    if (config.command == Command::analyze && input.pencil.k() != 2) {
      ordered_json j = detail::inertia_report(input.pencil, config.seed);
      j["command"] = "analyze";
      j["comment"] = input.comment;
      detail::write_file(fs::path(config.out_dir) / "report.json",
                         dump_json17(j));
      out << "analyze: inertia-only report for k = " << input.pencil.k()
          << " written\n";
      return kExitOk;
    }

    PipelineOptions opts;
    opts.depth = config.depth;
    opts.seed = config.seed;
    opts.epsilon_override = config.epsilon;
    PipelineResult result = run_curve_pipeline(input.pencil, opts);

    ordered_json report = report_to_json(result.report);
    report["command"] = to_string(config.command);
    report["comment"] = input.comment;

    if (config.command == Command::verify) {
      OracleResult oracle = run_oracle(input.pencil, config.oracle_resolution);
      Verdict verdict = verify_bound(input.pencil, result.report, oracle);
      detail::write_file(fs::path(config.out_dir) / "report.json",
                         dump_json17(report));
      detail::write_file(fs::path(config.out_dir) / "verdict.json",
                         dump_json17(verdict_to_json(verdict, oracle)));
      detail::write_file(fs::path(config.out_dir) / "sample.csv",
                         sample_csv(oracle.sample,
                                    oracle.estimate.cluster_of_point));
      out << "verify: " << to_string(verdict.status) << " (oracle "
          << verdict.oracle_estimate << " <= refined " << verdict.refined_bound
          << " <= cap " << verdict.cap << ")\n";
      switch (verdict.status) {
        case VerdictStatus::PASS: return kExitOk;
        case VerdictStatus::FAIL: return kExitFail;
        case VerdictStatus::NON_AUTHORITATIVE: return kExitNonAuthoritative;
      }
    }

    detail::write_file(fs::path(config.out_dir) / "report.json",
                       dump_json17(report));
    if (config.command == Command::trace) {
      detail::write_file(fs::path(config.out_dir) / "ovals.csv",
                         ovals_csv(result.trace));
    }
    out << to_string(config.command) << ": c = " << result.report.oval_count
        << ", refined bound " << result.report.refined << " <= "
        << result.report.cap_theorem
        << (result.report.authoritative ? "" : " (non-authoritative)") << "\n";
    return result.report.authoritative ? kExitOk : kExitNonAuthoritative;
  } catch (const Error& err) {
    const auto j = error_json(err.code(), err.what());
    out << dump_json17(j);
    try {
      detail::write_file(fs::path(config.out_dir) / "error.json", dump_json17(j));
    } catch (...) {
    }
    return kExitError;
  } catch (const std::exception& e) {
    out << dump_json17(error_json(ErrorCode::invalid_argument, e.what()));
    return kExitError;
  }
}

// Built-in smoke checks used by the selftest command.
inline int run_selftest(std::ostream& out) {
  int failures = 0;
  auto check = [&](bool ok, const std::string& name) {
    out << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };

  {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
      const int dim = 2 + static_cast<int>(rng() % 7);
      Eigen::MatrixXd m(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = gauss(rng);
      QuadraticForm q(0.5 * (m + m.transpose()));
      const double tol = relative_zero_tol(q);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
          q.matrix(), Eigen::EigenvaluesOnly);
      if (solver.eigenvalues().cwiseAbs().minCoeff() <= 10.0 * tol) continue;
      ok = inertia_descartes(q) == inertia_eigen(q, tol).positive;
    }
    check(ok, "inertia: Descartes route agrees with the eigensolver");
  }

  {
    bool ok = true;
    for (int depth = 0; depth <= 3 && ok; ++depth) {
      const SphereMesh mesh = build_mesh(depth);
      ok = mesh.euler_characteristic() == 2 &&
           mesh.face_count() == 20 * (1 << (2 * depth));
    }
    check(ok, "mesh: icosahedral subdivision counts and Euler characteristic");
  }

  {
    // One diagonal factor vanishing on the circle {omega_0 = 1/2}. The
    // unrotated mesh has vertices exactly on that circle, so this also
    // exercises the jitter recovery.
    Eigen::MatrixXd q0 = Eigen::MatrixXd::Zero(3, 3);
    q0(0, 0) = 1.0;
    Pencil pencil({QuadraticForm(q0), QuadraticForm::zero(3),
                   QuadraticForm::zero(3)});
    PipelineOptions opts;
    opts.depth = 4;
    opts.epsilon_override = 0.5;
    opts.perturbation = QuadraticForm::identity(3);
    PipelineResult r = run_curve_pipeline(pencil, opts);
    std::vector<int> labels = r.regions.index_label;
    std::sort(labels.begin(), labels.end());
    check(r.trace.oval_count() == 1 && r.regions.region_count == 2 &&
              labels == std::vector<int>{2, 3} && validate_jump(r.regions).ok,
          "trace: single analytic circle, labels {2,3}, unit jump");
  }

  {
    Pencil zero({QuadraticForm::zero(3), QuadraticForm::zero(3),
                 QuadraticForm::zero(3)});
    PipelineOptions opts;
    opts.depth = 4;
    PipelineResult r = run_curve_pipeline(zero, opts);
    check(r.report.oval_count == 0 && r.report.refined == 3 &&
              r.report.eq1 == 3 && r.report.authoritative,
          "pipeline: zero pencil gives the constant filtration and bound n+1");
  }

  {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 3);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 3);
    a(0, 1) = a(1, 0) = 0.5;  // x0 x1
    b(0, 2) = b(2, 0) = 0.5;  // x0 x2
    c(1, 2) = c(2, 1) = 0.5;  // x1 x2
    Pencil pencil({QuadraticForm(a), QuadraticForm(b), QuadraticForm(c)});
    OracleResult oracle = run_oracle(pencil, 4);
    check(oracle.estimate.b0 == 3 && oracle.estimate.clusters_are_points &&
              oracle.authoritative,
          "oracle: three coordinate points recovered with b0 = 3");
  }

  out << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? kExitOk : kExitError;
}

}  // namespace qtop
