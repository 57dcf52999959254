#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "qtop/errors.hpp"

namespace qtop {

namespace detail {

// splitmix64 step; used to derive independent sub-seeds from one user seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Number of positive / negative / numerically-zero eigenvalues of a
// symmetric matrix.
struct InertiaTriple {
  int positive = 0;
  int negative = 0;
  int zero = 0;

  int dim() const { return positive + negative + zero; }
  bool operator==(const InertiaTriple&) const = default;
};

// Real quadratic form q(x) = <x, Qx> with Q symmetric. The constructor
// symmetrizes, so the stored matrix is exactly symmetric.
class QuadraticForm {
 public:
  explicit QuadraticForm(Eigen::MatrixXd m) : mat_(std::move(m)) {
    if (mat_.rows() < 1 || mat_.rows() != mat_.cols()) {
      throw Error(ErrorCode::invalid_argument,
                  "quadratic form matrix must be square with dim >= 1");
    }
    mat_ = (0.5 * (mat_ + mat_.transpose())).eval();
  }

  static QuadraticForm zero(int dim) {
    return QuadraticForm(Eigen::MatrixXd::Zero(dim, dim));
  }

  static QuadraticForm identity(int dim) {
    return QuadraticForm(Eigen::MatrixXd::Identity(dim, dim));
  }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Eigen::MatrixXd& matrix() const { return mat_; }

  double operator()(const Eigen::VectorXd& x) const {
    if (x.size() != mat_.rows()) {
      throw Error(ErrorCode::dimension_mismatch,
                  "evaluation point has wrong dimension");
    }
    return x.dot(mat_ * x);
  }

 private:
  Eigen::MatrixXd mat_;
};

// Tuple (q_0, ..., q_k) of quadratic forms of a common dimension, together
// with the linear evaluation omega -> omega_0 q_0 + ... + omega_k q_k.
class Pencil {
 public:
  explicit Pencil(std::vector<QuadraticForm> forms) : forms_(std::move(forms)) {
    if (forms_.empty()) {
      throw Error(ErrorCode::invalid_argument, "pencil needs at least one form");
    }
    const int d = forms_.front().dim();
    for (const auto& f : forms_) {
      if (f.dim() != d) {
        throw Error(ErrorCode::dimension_mismatch,
                    "pencil forms must share one dimension");
      }
    }
  }

  int k() const { return static_cast<int>(forms_.size()) - 1; }
  int dim() const { return forms_.front().dim(); }
  const QuadraticForm& form(int i) const { return forms_.at(i); }
  const std::vector<QuadraticForm>& forms() const { return forms_; }

 private:
  std::vector<QuadraticForm> forms_;
};

// Unnormalized linear combination sum_i coeffs[i] * Q_i. evaluate_pencil is
// this plus unit-norm handling; tests assert linearity through this entry.
inline QuadraticForm linear_combination(const Pencil& pencil,
                                        const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != pencil.k() + 1) {
    throw Error(ErrorCode::dimension_mismatch,
                "coefficient vector length must equal k+1");
  }
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(pencil.dim(), pencil.dim());
  for (int i = 0; i <= pencil.k(); ++i) {
    acc.noalias() += coeffs[i] * pencil.form(i).matrix();
  }
  return QuadraticForm(std::move(acc));
}

// omega q for omega on the unit sphere S^k. omega must be unit to 1e-9 and
// is renormalized internally.
inline QuadraticForm evaluate_pencil(const Pencil& pencil,
                                     const Eigen::VectorXd& omega) {
  if (omega.size() != pencil.k() + 1) {
    throw Error(ErrorCode::dimension_mismatch,
                "omega length must equal k+1");
  }
  const double norm = omega.norm();
  if (std::abs(norm - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_argument,
                "omega must be a unit vector (|omega| within 1e-9 of 1)");
  }
  return linear_combination(pencil, omega / norm);
}

// Largest |eigenvalue|; 0 for the zero form.
inline double spectral_radius(const QuadraticForm& form) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(form.matrix(),
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::eigen_failure, "eigenvalue computation failed");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// Degeneracy threshold relative to the spectral radius. Every inertia
// decision in the pipeline is thresholded; this is the default threshold and
// it is reported in the output.
constexpr double kZeroTolRel = 1e-9;

inline double relative_zero_tol(const QuadraticForm& form,
                                double rel = kZeroTolRel) {
  const double radius = spectral_radius(form);
  const double tol = rel * radius;
  return tol > 0 ? tol : std::numeric_limits<double>::min();
}

// Inertia by direct symmetric eigendecomposition. Eigenvalues within
// zero_tol of 0 count as zero.
inline InertiaTriple inertia_eigen(const QuadraticForm& form, double zero_tol) {
  if (!(zero_tol > 0)) {
    throw Error(ErrorCode::invalid_argument, "zero_tol must be positive");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(form.matrix(),
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::eigen_failure, "eigenvalue computation failed");
  }
  InertiaTriple t;
  for (int i = 0; i < form.dim(); ++i) {
    const double ev = solver.eigenvalues()[i];
    if (ev > zero_tol) {
      ++t.positive;
    } else if (ev < -zero_tol) {
      ++t.negative;
    } else {
      ++t.zero;
    }
  }
  return t;
}

inline InertiaTriple inertia_eigen(const QuadraticForm& form) {
  return inertia_eigen(form, relative_zero_tol(form));
}

// Coefficients (a_0, ..., a_d) of det(Q - tI) in increasing degree, leading
// coefficient (-1)^d. Computed by the Faddeev-LeVerrier recurrence, a route
// independent of the eigensolver: a_0 = det(Q).
inline std::vector<double> char_poly_coeffs(const QuadraticForm& form) {
  const int d = form.dim();
  const Eigen::MatrixXd& a = form.matrix();
  // det(tI - Q) = sum_j c[j] t^j with c[d] = 1.
  std::vector<double> c(static_cast<std::size_t>(d) + 1, 0.0);
  c[d] = 1.0;
  Eigen::MatrixXd am = a;  // A * M_1 with M_1 = I
  c[d - 1] = -am.trace();
  Eigen::MatrixXd m(d, d);
  for (int k = 2; k <= d; ++k) {
    m = am + c[d - k + 1] * Eigen::MatrixXd::Identity(d, d);
    am.noalias() = a * m;
    c[d - k] = -am.trace() / k;
  }
  const double sign = (d % 2 == 0) ? 1.0 : -1.0;
  for (auto& v : c) v *= sign;
  return c;
}

// Positive inertia index via Descartes' rule of signs on the characteristic
// polynomial: the char poly of a symmetric matrix has only real roots, so
// the sign-variation count of its coefficient sequence equals the number of
// positive eigenvalues. Coefficients below zero_tol * max|a_i| are zeroed
// and skipped.
inline int inertia_descartes(const QuadraticForm& form, double zero_tol) {
  if (!(zero_tol > 0)) {
    throw Error(ErrorCode::invalid_argument, "zero_tol must be positive");
  }
  const std::vector<double> a = char_poly_coeffs(form);
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  int variations = 0;
  int prev = 0;
  for (double v : a) {
    if (std::abs(v) <= zero_tol * scale) continue;
    const int s = v > 0 ? 1 : -1;
    if (prev != 0 && s != prev) ++variations;
    prev = s;
  }
  return variations;
}

inline int inertia_descartes(const QuadraticForm& form) {
  return inertia_descartes(form, kZeroTolRel);
}

// Deterministic positive definite form with eigenvalues in [0.5, 1.5]:
// random orthogonal conjugation of a random diagonal. Used as the generic
// perturbation; callers re-draw with a new seed when downstream
// transversality checks reject a draw.
inline QuadraticForm random_posdef(int dim, std::uint64_t seed) {
  if (dim < 1) {
    throw Error(ErrorCode::invalid_argument, "dim must be >= 1");
  }
  std::mt19937_64 rng(detail::mix_seed(seed, 0x706F7364ULL));
  std::uniform_real_distribution<double> eig(0.5, 1.5);
  Eigen::VectorXd d(dim);
  for (int i = 0; i < dim; ++i) d[i] = eig(rng);
  if (dim == 1) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = d[0];
    return QuadraticForm(std::move(m));
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  return QuadraticForm(q * d.asDiagonal() * q.transpose());
}

}  // namespace qtop
