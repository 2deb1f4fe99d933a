#pragma once

// Gram matrices of channels under a kernel, with the PSD check that makes the
// Hilbert-space construction concrete: min eigenvalue >= -tol_psd * trace,
// tol_psd = 1e-10. Hermiticity is structural (conjugate symmetry of the
// quadrature), so only the upper triangle is computed.

#include <Eigen/Dense>

#include "modlab/kernel.hpp"

namespace modlab {

inline constexpr double kTolPsd = 1e-10;

inline GramReport gram_matrix(const std::vector<Channel>& channels, const KernelSpec& K,
                              const GridSpec& grid, double hbar = 1.0) {
  if (channels.empty()) throw InvariantViolation("gram_matrix: needs at least one channel");
  const int n = static_cast<int>(channels.size());
  ShellEngine eng(grid, hbar);
  GramReport rep;
  rep.n = n;
  rep.matrix.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), Complex{0, 0});
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Complex v = eng.kernel_inner(channels[static_cast<std::size_t>(i)],
                                   channels[static_cast<std::size_t>(j)], K)
                      .value;
      rep.matrix[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = v;
      rep.matrix[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = std::conj(v);
    }
  Eigen::MatrixXcd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      M(i, j) = rep.matrix[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(M, Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = solver.eigenvalues().minCoeff();
  rep.trace = M.trace().real();
  rep.tolerance = kTolPsd * std::abs(rep.trace);
  rep.psd = rep.min_eigenvalue >= -rep.tolerance;
  return rep;
}

}  // namespace modlab
