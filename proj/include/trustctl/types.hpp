#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace trustctl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Seedable generator used for every noise draw in the library.
using Rng = std::mt19937_64;

/// Raised for malformed inputs: dimension mismatches, out-of-range parameters,
/// bad configuration values.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot produce a trustworthy result
/// (singular factorization, non-convergence, unstable closed loop).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

inline std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline bool is_symmetric(const Matrix& m, double tol = 1e-9) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

// Exact equality that tolerates differing shapes.
inline bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || (a.array() == b.array()).all());
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double min_eigenvalue(const Matrix& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(sym), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Symmetric square root of a PSD matrix; tiny negative eigenvalues are clipped.
inline Matrix psd_sqrt(const Matrix& cov) {
  if (cov.size() == 0) return cov;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

inline Vector standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector z(n);
  for (Index i = 0; i < n; ++i) z(i) = dist(rng);
  return z;
}

inline double spectral_radius(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::EigenSolver<Matrix>(a, false).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail
}  // namespace trustctl
