#pragma once

#include <vector>

namespace unmix {

// In-place Cholesky factorization of a symmetric positive-definite matrix
// (row-major n x n).  Throws std::domain_error if not positive definite.
void cholesky_factor(std::vector<double>& a, int n);

// Solves L L^T x = b given the factor from cholesky_factor; b is overwritten
// with the solution.
void cholesky_solve(const std::vector<double>& l, int n, std::vector<double>& b);

}  // namespace unmix
