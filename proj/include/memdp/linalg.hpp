#pragma once

#include <stdexcept>
#include <vector>

#include "memdp/rational.hpp"

namespace memdp {

// Exact Gaussian elimination with partial (first nonzero) pivoting. A is
// consumed. Throws on a singular matrix.
inline std::vector<Rat> solve_linear(std::vector<std::vector<Rat>> A, std::vector<Rat> b) {
    const int n = static_cast<int>(A.size());
    for (int col = 0; col < n; ++col) {
        int pivot = -1;
        for (int r = col; r < n; ++r)
            if (sgn(A[r][col]) != 0) {
                pivot = r;
                break;
            }
        if (pivot < 0) throw std::domain_error("singular linear system");
        std::swap(A[col], A[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < n; ++r) {
            if (sgn(A[r][col]) == 0) continue;
            Rat f = A[r][col] / A[col][col];
            A[r][col] = 0;
            for (int c = col + 1; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<Rat> x(n);
    for (int r = n - 1; r >= 0; --r) {
        Rat acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= A[r][c] * x[c];
        x[r] = acc / A[r][r];
    }
    return x;
}

}  // namespace memdp
