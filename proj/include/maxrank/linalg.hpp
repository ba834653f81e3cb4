#pragma once

#include <Eigen/Dense>

namespace maxrank {

// Small dense types. Space-time matrices are at most 5x5 (n <= 4 in the
// identity lab, n <= 3 on grids); storage stays on the stack.
inline constexpr int kMaxDim = 5;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Determinant by cofactor expansion for d <= 2 and partial-pivot elimination
/// above; exact zero for a matrix with a zero row. Size 0 returns 1.
double det(const Mat& m);

/// Determinant of m with the listed rows and columns removed.
double minor_det(const Mat& m, int row_a, int col_a, int row_b = -1, int col_b = -1);

} // namespace maxrank
