#pragma once

// Cyclic Jacobi rotations for small dense symmetric matrices.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "qklab/tensor.hpp"

namespace qklab {

struct SymmetricEigen {
    std::vector<double> values;        // descending
    std::vector<Vector> vectors;       // vectors[a] pairs with values[a]
    int sweeps = 0;
};

inline double off_diagonal_norm(const Matrix& a) {
    double m = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j)
            if (i != j) m = std::max(m, std::abs(a(i, j)));
    return m;
}

/// Diagonalizes a symmetric matrix until every off-diagonal entry is
/// <= off_tol * max(1, |A|).
inline SymmetricEigen jacobi_eigen(Matrix a, double off_tol = 1e-12, int max_sweeps = 64) {
    const int n = a.dim();
    Matrix v = identity_matrix(n);
    const double target = off_tol * std::max(1.0, a.inf_norm());
    int sweep = 0;
    for (; sweep < max_sweeps && off_diagonal_norm(a) > target; ++sweep) {
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    if (off_diagonal_norm(a) > target) throw std::runtime_error("Jacobi iteration did not converge");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&a](int x, int y) { return a(x, x) > a(y, y); });
    SymmetricEigen out;
    out.sweeps = sweep;
    for (int idx : order) {
        out.values.push_back(a(idx, idx));
        Vector col(n);
        for (int k = 0; k < n; ++k) col(k) = v(k, idx);
        out.vectors.push_back(std::move(col));
    }
    return out;
}

}  // namespace qklab
