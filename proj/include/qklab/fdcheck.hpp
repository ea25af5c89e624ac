#pragma once

// Finite-difference cross-check of the exact-derivative pipeline.
//
// The reference side never touches symbolic derivatives: it evaluates the
// metric expressions only, differentiates by central differences, and
// rebuilds Christoffel symbols and curvature with its own loops.

#include <algorithm>
#include <cmath>
#include <span>

#include "qklab/chart.hpp"
#include "qklab/curvature.hpp"
#include "qklab/tensor.hpp"

namespace qklab {

namespace fd {

inline Point shifted(std::span<const double> x, int a, double delta) {
    Point p(x.begin(), x.end());
    p[a] += delta;
    return p;
}

/// Γ^k_ij from central differences of the metric.
inline Tensor3 christoffel(const ManifoldSpec& spec, std::span<const double> x, double h) {
    const int n = spec.dim();
    const Matrix g = metric_at(spec, x);
    Matrix gi;
    if (!invert(g, gi)) throw GeometryError("metric is singular");
    Tensor3 dg(n);  // (a, i, j)
    for (int a = 0; a < n; ++a) {
        const Matrix gp = metric_at(spec, shifted(x, a, h));
        const Matrix gm = metric_at(spec, shifted(x, a, -h));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dg(a, i, j) = (gp(i, j) - gm(i, j)) / (2 * h);
    }
    Tensor3 gamma(n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int l = 0; l < n; ++l) s += 0.5 * gi(k, l) * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
                gamma(k, i, j) = s;
            }
    return gamma;
}

/// R_ijkl from central differences of the finite-difference Christoffel symbols.
inline Tensor4 riemann(const ManifoldSpec& spec, std::span<const double> x, double h) {
    const int n = spec.dim();
    const Matrix g = metric_at(spec, x);
    const Tensor3 gamma = christoffel(spec, x, h);
    Tensor4 dgamma(n);  // (a, k, i, j)
    for (int a = 0; a < n; ++a) {
        const Tensor3 gp = christoffel(spec, shifted(x, a, h), h);
        const Tensor3 gm = christoffel(spec, shifted(x, a, -h), h);
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) dgamma(a, k, i, j) = (gp(k, i, j) - gm(k, i, j)) / (2 * h);
    }
    Tensor4 r(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (int q = 0; q < n; ++q) {
                        double up = dgamma(i, q, j, k) - dgamma(j, q, i, k);
                        for (int m = 0; m < n; ++m) up += gamma(q, i, m) * gamma(m, j, k) - gamma(q, j, m) * gamma(m, i, k);
                        s += g(l, q) * up;
                    }
                    r(i, j, k, l) = s;
                }
    return r;
}

}  // namespace fd

/// Relative deviation |exact - reference|_inf / max(1, |exact|_inf).
template <std::size_t Rank>
double relative_deviation(const Tensor<Rank>& exact, const Tensor<Rank>& reference) {
    return max_abs_diff(exact, reference) / std::max(1.0, exact.inf_norm());
}

struct FdComparison {
    double metric_first = 0.0;   // ∂g against differences of g
    double metric_third = 0.0;   // ∂³g against differences of the exact ∂²g
    double christoffel = 0.0;    // Γ against the difference-built Γ
    double riemann = 0.0;        // R against the twice-differenced R
    double riemann_derivative = 0.0;  // ∂R against differences of the exact R

    double worst() const { return std::max({metric_first, metric_third, christoffel, riemann, riemann_derivative}); }
};

inline FdComparison fd_compare(const ManifoldSpec& spec, std::span<const double> x, double h = 1e-4) {
    const int n = spec.dim();
    const MetricJet jet = metric_jet(spec, x);
    const Connection conn = christoffel(jet);
    const Tensor4 R = riemann(jet, conn);
    const Tensor5 dR = riemann_derivative(jet, conn);

    FdComparison out;
    Tensor3 dg_fd(n);
    Tensor5 d3g_fd(n);
    Tensor5 dR_fd(n);
    for (int a = 0; a < n; ++a) {
        const Point xp = fd::shifted(x, a, h);
        const Point xm = fd::shifted(x, a, -h);
        const Matrix gp = metric_at(spec, xp);
        const Matrix gm = metric_at(spec, xm);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dg_fd(a, i, j) = (gp(i, j) - gm(i, j)) / (2 * h);

        const MetricJet jp = metric_jet(spec, xp);
        const MetricJet jm = metric_jet(spec, xm);
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        d3g_fd(b, c, a, i, j) = (jp.d2g(b, c, i, j) - jm.d2g(b, c, i, j)) / (2 * h);
        const Tensor4 Rp = riemann(jp, christoffel(jp));
        const Tensor4 Rm = riemann(jm, christoffel(jm));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) dR_fd(a, i, j, k, l) = (Rp(i, j, k, l) - Rm(i, j, k, l)) / (2 * h);
    }
    out.metric_first = relative_deviation(jet.dg, dg_fd);
    out.metric_third = relative_deviation(jet.d3g, d3g_fd);
    out.christoffel = relative_deviation(conn.gamma, fd::christoffel(spec, x, h));
    out.riemann = relative_deviation(R, fd::riemann(spec, x, h));
    out.riemann_derivative = relative_deviation(dR, dR_fd);
    return out;
}

}  // namespace qklab
