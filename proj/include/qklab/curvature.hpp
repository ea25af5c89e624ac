#pragma once

// Levi-Civita curvature at a point, from exact metric jets.
//
// Conventions:
//   R(X,Y)Z = ∇_X ∇_Y Z - ∇_Y ∇_X Z - ∇_[X,Y] Z
//   R_ijkl  = g(R(∂_i,∂_j)∂_k, ∂_l)
//   S_jk    = g^il R_ijkl,  tau = g^jk S_jk
// With these, a space of constant curvature c has
//   R_ijkl = c (g_il g_jk - g_ik g_jl),  S = (n-1) c g.

#include <algorithm>
#include <cmath>
#include <span>

#include "qklab/chart.hpp"
#include "qklab/tensor.hpp"

namespace qklab {

struct MetricJet {
    int n = 0;
    Matrix g;
    Matrix g_inv;
    Tensor3 dg;   // ∂_a g_ij          -> (a, i, j)
    Tensor4 d2g;  // ∂_a ∂_b g_ij      -> (a, b, i, j)
    Tensor5 d3g;  // ∂_a ∂_b ∂_c g_ij  -> (a, b, c, i, j)
};

inline MetricJet metric_jet(const ManifoldSpec& spec, std::span<const double> point) {
    const int n = spec.dim();
    const Env env = spec.env_at(point);
    const ChartDerivatives& d = *spec.derivatives;
    MetricJet jet;
    jet.n = n;
    jet.g = eval_matrix(spec.metric, env);
    if (!invert(jet.g, jet.g_inv, 1e-14)) throw GeometryError("metric is singular at the point");
    jet.dg = Tensor3(n);
    jet.d2g = Tensor4(n);
    jet.d3g = Tensor5(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int a = 0; a < n; ++a) {
                jet.dg(a, i, j) = jet.dg(a, j, i) = eval(d.dg[d.idx3(a, i, j)], env);
                for (int b = a; b < n; ++b) {
                    const double v2 = eval(d.d2g[d.idx4(a, b, i, j)], env);
                    for (auto [p, q] : {std::pair{a, b}, std::pair{b, a}}) jet.d2g(p, q, i, j) = jet.d2g(p, q, j, i) = v2;
                    for (int c = b; c < n; ++c) {
                        const double v3 = eval(d.d3g[d.idx5(a, b, c, i, j)], env);
                        const int perm[6][3] = {{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}};
                        for (const auto& p : perm) jet.d3g(p[0], p[1], p[2], i, j) = jet.d3g(p[0], p[1], p[2], j, i) = v3;
                    }
                }
            }
    return jet;
}

/// Derivatives of the inverse metric: first (a, k, l) and second (a, b, k, l).
struct InverseMetricJet {
    Tensor3 d;
    Tensor4 d2;
};

inline InverseMetricJet inverse_metric_jet(const MetricJet& jet) {
    const int n = jet.n;
    const Matrix& gi = jet.g_inv;
    InverseMetricJet out{Tensor3(n), Tensor4(n)};
    // ∂_a g^kl = -g^kp ∂_a g_pq g^ql
    for (int a = 0; a < n; ++a)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                double s = 0.0;
                for (int p = 0; p < n; ++p)
                    for (int q = 0; q < n; ++q) s += gi(k, p) * jet.dg(a, p, q) * gi(q, l);
                out.d(a, k, l) = -s;
            }
    // ∂_b ∂_a g^kl = -(∂_b g^kp ∂_a g_pq g^ql + g^kp ∂_ab g_pq g^ql + g^kp ∂_a g_pq ∂_b g^ql)
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (int p = 0; p < n; ++p)
                        for (int q = 0; q < n; ++q)
                            s += out.d(b, k, p) * jet.dg(a, p, q) * gi(q, l) +
                                 gi(k, p) * jet.d2g(a, b, p, q) * gi(q, l) +
                                 gi(k, p) * jet.dg(a, p, q) * out.d(b, q, l);
                    out.d2(a, b, k, l) = -s;
                }
    return out;
}

struct Connection {
    Tensor3 gamma;    // Γ^k_ij          -> (k, i, j)
    Tensor4 dgamma;   // ∂_a Γ^k_ij      -> (a, k, i, j)
    Tensor5 d2gamma;  // ∂_a ∂_b Γ^k_ij  -> (a, b, k, i, j)
};

/// Christoffel symbols Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il - ∂_l g_ij)
/// together with their first and second coordinate derivatives.
inline Connection christoffel(const MetricJet& jet) {
    const int n = jet.n;
    const InverseMetricJet inv = inverse_metric_jet(jet);
    // first-kind symbols Γ_lij and their derivatives
    Tensor3 first(n);
    Tensor4 dfirst(n);
    Tensor5 d2first(n);
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                first(l, i, j) = 0.5 * (jet.dg(i, j, l) + jet.dg(j, i, l) - jet.dg(l, i, j));
                for (int a = 0; a < n; ++a) {
                    dfirst(a, l, i, j) = 0.5 * (jet.d2g(a, i, j, l) + jet.d2g(a, j, i, l) - jet.d2g(a, l, i, j));
                    for (int b = 0; b < n; ++b)
                        d2first(a, b, l, i, j) =
                            0.5 * (jet.d3g(a, b, i, j, l) + jet.d3g(a, b, j, i, l) - jet.d3g(a, b, l, i, j));
                }
            }
    Connection c{Tensor3(n), Tensor4(n), Tensor5(n)};
    const Matrix& gi = jet.g_inv;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int l = 0; l < n; ++l) s += gi(k, l) * first(l, i, j);
                c.gamma(k, i, j) = s;
                for (int a = 0; a < n; ++a) {
                    double da = 0.0;
                    for (int l = 0; l < n; ++l) da += inv.d(a, k, l) * first(l, i, j) + gi(k, l) * dfirst(a, l, i, j);
                    c.dgamma(a, k, i, j) = da;
                    for (int b = 0; b < n; ++b) {
                        double dab = 0.0;
                        for (int l = 0; l < n; ++l)
                            dab += inv.d2(a, b, k, l) * first(l, i, j) + inv.d(a, k, l) * dfirst(b, l, i, j) +
                                   inv.d(b, k, l) * dfirst(a, l, i, j) + gi(k, l) * d2first(a, b, l, i, j);
                        c.d2gamma(a, b, k, i, j) = dab;
                    }
                }
            }
    return c;
}

namespace detail {

// Components of R(∂_i,∂_j)∂_k along ∂_l: (i, j, k, l).
inline Tensor4 riemann_up(const Connection& c) {
    const int n = c.gamma.dim();
    Tensor4 r(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double s = c.dgamma(i, l, j, k) - c.dgamma(j, l, i, k);
                    for (int m = 0; m < n; ++m) s += c.gamma(l, i, m) * c.gamma(m, j, k) - c.gamma(l, j, m) * c.gamma(m, i, k);
                    r(i, j, k, l) = s;
                }
    return r;
}

}  // namespace detail

/// Fully lowered curvature R_ijkl = R(∂_i, ∂_j, ∂_k, ∂_l).
inline Tensor4 riemann(const MetricJet& jet, const Connection& c) {
    const int n = jet.n;
    const Tensor4 up = detail::riemann_up(c);
    Tensor4 r(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (int q = 0; q < n; ++q) s += up(i, j, k, q) * jet.g(q, l);
                    r(i, j, k, l) = s;
                }
    return r;
}

/// Coordinate derivatives ∂_p R_ijkl -> (p, i, j, k, l).
inline Tensor5 riemann_derivative(const MetricJet& jet, const Connection& c) {
    const int n = jet.n;
    const Tensor4 up = detail::riemann_up(c);
    Tensor5 dup(n);
    for (int p = 0; p < n; ++p)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        double s = c.d2gamma(p, i, l, j, k) - c.d2gamma(p, j, l, i, k);
                        for (int m = 0; m < n; ++m)
                            s += c.dgamma(p, l, i, m) * c.gamma(m, j, k) + c.gamma(l, i, m) * c.dgamma(p, m, j, k) -
                                 c.dgamma(p, l, j, m) * c.gamma(m, i, k) - c.gamma(l, j, m) * c.dgamma(p, m, i, k);
                        dup(p, i, j, k, l) = s;
                    }
    Tensor5 dr(n);
    for (int p = 0; p < n; ++p)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        double s = 0.0;
                        for (int q = 0; q < n; ++q) s += dup(p, i, j, k, q) * jet.g(q, l) + up(i, j, k, q) * jet.dg(p, q, l);
                        dr(p, i, j, k, l) = s;
                    }
    return dr;
}

struct Ricci {
    Matrix S;
    double tau = 0.0;
};

inline Ricci ricci_scalar(const MetricJet& jet, const Tensor4& R) {
    const int n = jet.n;
    Ricci out{Matrix(n), 0.0};
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                for (int l = 0; l < n; ++l) s += jet.g_inv(i, l) * R(i, j, k, l);
            out.S(j, k) = s;
        }
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) out.tau += jet.g_inv(j, k) * out.S(j, k);
    return out;
}

struct RicciDerivative {
    Tensor3 dS;   // ∂_p S_jk -> (p, j, k)
    Vector dtau;  // ∂_p tau
};

inline RicciDerivative ricci_derivative(const MetricJet& jet, const Tensor4& R, const Tensor5& dR, const Matrix& S) {
    const int n = jet.n;
    const InverseMetricJet inv = inverse_metric_jet(jet);
    RicciDerivative out{Tensor3(n), Vector(n)};
    for (int p = 0; p < n; ++p) {
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int l = 0; l < n; ++l) s += inv.d(p, i, l) * R(i, j, k, l) + jet.g_inv(i, l) * dR(p, i, j, k, l);
                out.dS(p, j, k) = s;
            }
        double t = 0.0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) t += inv.d(p, j, k) * S(j, k) + jet.g_inv(j, k) * out.dS(p, j, k);
        out.dtau(p) = t;
    }
    return out;
}

/// (∇_i S)_jk = ∂_i S_jk - Γ^m_ij S_mk - Γ^m_ik S_jm  -> (i, j, k)
inline Tensor3 covariant_S(const Connection& c, const Matrix& S, const Tensor3& dS) {
    const int n = S.dim();
    Tensor3 out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = dS(i, j, k);
                for (int m = 0; m < n; ++m) s -= c.gamma(m, i, j) * S(m, k) + c.gamma(m, i, k) * S(j, m);
                out(i, j, k) = s;
            }
    return out;
}

/// (∇_p R)_ijkl -> (p, i, j, k, l)
inline Tensor5 covariant_R(const Connection& c, const Tensor4& R, const Tensor5& dR) {
    const int n = R.dim();
    Tensor5 out(n);
    for (int p = 0; p < n; ++p)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        double s = dR(p, i, j, k, l);
                        for (int m = 0; m < n; ++m)
                            s -= c.gamma(m, p, i) * R(m, j, k, l) + c.gamma(m, p, j) * R(i, m, k, l) +
                                 c.gamma(m, p, k) * R(i, j, m, l) + c.gamma(m, p, l) * R(i, j, k, m);
                        out(p, i, j, k, l) = s;
                    }
    return out;
}

/// Weyl tensor, i.e. what remains of R after subtracting its conformally
/// flat part built from S and tau. Surfaces are always conformally flat,
/// so for 2m = 2 the residual is zero.
inline Tensor4 conformal_residual(const Matrix& g, const Tensor4& R, const Matrix& S, double tau, int m) {
    const int n = 2 * m;
    if (n < 4) return Tensor4(n);
    const double a = 1.0 / (n - 2);
    const double b = tau / ((n - 1.0) * (n - 2.0));
    Tensor4 w(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    w(i, j, k, l) = R(i, j, k, l) -
                                    a * (g(i, l) * S(j, k) - g(i, k) * S(j, l) + g(j, k) * S(i, l) - g(j, l) * S(i, k)) +
                                    b * (g(i, l) * g(j, k) - g(i, k) * g(j, l));
    return w;
}

struct BianchiResiduals {
    Tensor4 first;   // R_ijkl + R_jkil + R_kijl
    Tensor5 second;  // (∇_p R)_ijkl + (∇_i R)_jpkl + (∇_j R)_pikl
};

inline BianchiResiduals bianchi_residuals(const Tensor4& R, const Tensor5& nablaR) {
    const int n = R.dim();
    BianchiResiduals out{Tensor4(n), Tensor5(n)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) out.first(i, j, k, l) = R(i, j, k, l) + R(j, k, i, l) + R(k, i, j, l);
    for (int p = 0; p < n; ++p)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l)
                        out.second(p, i, j, k, l) = nablaR(p, i, j, k, l) + nablaR(i, j, p, k, l) + nablaR(j, p, i, k, l);
    return out;
}

/// R(X, Y, Z, U) for chart-component vectors.
inline double riemann_form(const Tensor4& R, const Vector& x, const Vector& y, const Vector& z, const Vector& u) {
    const int n = R.dim();
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        if (x(i) == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            if (y(j) == 0.0) continue;
            for (int k = 0; k < n; ++k) {
                if (z(k) == 0.0) continue;
                for (int l = 0; l < n; ++l) s += x(i) * y(j) * z(k) * u(l) * R(i, j, k, l);
            }
        }
    }
    return s;
}

/// (∇_W R)(X, Y, Z, U).
inline double nabla_riemann_form(const Tensor5& nablaR, const Vector& w, const Vector& x, const Vector& y,
                                 const Vector& z, const Vector& u) {
    const int n = nablaR.dim();
    double s = 0.0;
    for (int p = 0; p < n; ++p) {
        if (w(p) == 0.0) continue;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) s += w(p) * x(i) * y(j) * z(k) * u(l) * nablaR(p, i, j, k, l);
    }
    return s;
}

/// K(X,Y) = R(X,Y,Y,X) / (g(X,X) g(Y,Y) - g(X,Y)^2)
inline double sectional_curvature(const Matrix& g, const Tensor4& R, const Vector& x, const Vector& y) {
    const double gxx = bilinear(g, x, x);
    const double gyy = bilinear(g, y, y);
    const double gxy = bilinear(g, x, y);
    const double area = gxx * gyy - gxy * gxy;
    if (!(area > 0.0)) throw GeometryError("sectional curvature of a degenerate plane");
    return riemann_form(R, x, y, y, x) / area;
}

/// Constant-curvature model c (g_il g_jk - g_ik g_jl).
inline Tensor4 constant_curvature_model(const Matrix& g, double c) {
    const int n = g.dim();
    Tensor4 r(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) r(i, j, k, l) = c * (g(i, l) * g(j, k) - g(i, k) * g(j, l));
    return r;
}

/// Everything curvature-related at one point.
struct CurvatureBundle {
    Point point;
    MetricJet jet;
    Connection connection;
    Tensor4 R;
    Tensor5 dR;
    Matrix S;
    double tau = 0.0;
    Tensor3 dS;
    Vector dtau;
    Tensor3 nablaS;
    Tensor5 nablaR;
    Tensor4 W;
    double scale = 1.0;  // max(1, |R|, |S|)
};

inline CurvatureBundle curvature_bundle(const ManifoldSpec& spec, std::span<const double> point) {
    CurvatureBundle b;
    b.point.assign(point.begin(), point.end());
    b.jet = metric_jet(spec, point);
    b.connection = christoffel(b.jet);
    b.R = riemann(b.jet, b.connection);
    b.dR = riemann_derivative(b.jet, b.connection);
    auto ric = ricci_scalar(b.jet, b.R);
    b.S = std::move(ric.S);
    b.tau = ric.tau;
    auto dric = ricci_derivative(b.jet, b.R, b.dR, b.S);
    b.dS = std::move(dric.dS);
    b.dtau = std::move(dric.dtau);
    b.nablaS = covariant_S(b.connection, b.S, b.dS);
    b.nablaR = covariant_R(b.connection, b.R, b.dR);
    b.W = conformal_residual(b.jet.g, b.R, b.S, b.tau, spec.m);
    b.scale = std::max({1.0, b.R.inf_norm(), b.S.inf_norm()});
    return b;
}

}  // namespace qklab
