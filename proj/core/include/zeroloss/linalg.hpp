#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace zeroloss {

// All dense objects (data X, weights W, Jacobians D, label matrices Y) are
// 64-bit column-major Eigen matrices. Indexing is logical: A(i, j) is row i,
// column j regardless of storage order.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct RankResult {
    std::size_t numerical_rank = 0;
    std::vector<double> singular_values;  // descending
    double tolerance = 0.0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t max_rank() const { return rows < cols ? rows : cols; }
    bool full_rank() const { return numerical_rank == max_rank(); }
};

bool all_finite(const Matrix& a);

// Throws Error(InvalidMatrix) on empty or non-finite input.
void require_finite(const Matrix& a, const char* what);

// SVD-based numerical rank. Without an explicit tolerance the cutoff is
// max(rows, cols) * eps * sigma_max.
RankResult numerical_rank(const Matrix& a, std::optional<double> tolerance = std::nullopt);

// Minimum-norm solution W of X^T W = rhs, i.e. X (X^T X)^{-1} rhs, computed from
// a thin QR factorization of X. X is M x N with N <= M and full column rank;
// rhs is N x k. Throws RankDeficient otherwise.
Matrix pseudo_solve(const Matrix& x, const Matrix& rhs);

// Broadcast vectorized tensor product (row-wise Kronecker / face-splitting
// product). Row i of the n x (s*t) result is Vec[A^i (x) B^i] with the pair
// index (alpha, beta) stored at column alpha * t + beta.
Matrix bvtp(const Matrix& a, const Matrix& b);

}  // namespace zeroloss
