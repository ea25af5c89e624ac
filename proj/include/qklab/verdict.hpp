#pragma once

// The lemma's equation chain as residual checks, and the four-dimensional
// classification of conformally flat QK3 manifolds.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qklab/chart.hpp"
#include "qklab/curvature.hpp"
#include "qklab/hermitian.hpp"
#include "qklab/jacobi.hpp"
#include "qklab/tensor.hpp"

namespace qklab {

// ---------------------------------------------------------------------------
// Contractions with concrete vectors

/// (∇_W S)(X, Y)
inline double nabla_S_form(const Tensor3& nablaS, const Vector& w, const Vector& x, const Vector& y) {
    const int n = nablaS.dim();
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) s += w(i) * x(j) * y(k) * nablaS(i, j, k);
    return s;
}

/// (∇_W J) V
inline Vector nabla_J_apply(const Tensor3& nablaJ, const Vector& w, const Vector& v) {
    const int n = nablaJ.dim();
    Vector out(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) out(k) += w(i) * nablaJ(i, k, j) * v(j);
    return out;
}

inline double dtau_along(const Vector& dtau, const Vector& x) {
    double s = 0.0;
    for (int i = 0; i < x.dim(); ++i) s += dtau(i) * x(i);
    return s;
}

/// Pairs (X, Y) of g-unit vectors with g(X,Y) = g(X,JY) = 0, built from a
/// g-orthonormal frame by projecting each frame vector off span{X, JX}.
inline std::vector<std::pair<Vector, Vector>> adapted_pairs(const Matrix& g, const Matrix& J,
                                                            const std::vector<Vector>& frame) {
    std::vector<std::pair<Vector, Vector>> out;
    const int n = g.dim();
    for (const Vector& x : frame) {
        const Vector jx = apply(J, x);
        for (const Vector& e : frame) {
            Vector y = e;
            const double a = bilinear(g, x, e);
            const double b = bilinear(g, jx, e);
            for (int i = 0; i < n; ++i) y(i) -= a * x(i) + b * jx(i);
            const double nn = bilinear(g, y, y);
            if (nn < 1e-6) continue;
            y *= 1.0 / std::sqrt(nn);
            out.emplace_back(x, std::move(y));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lemma equations

/// L_ijk = 2(∇_i S)_jk - S((∇_i J)e_j, J e_k) - S(J e_j, (∇_i J)e_k)
inline Tensor3 lemma_eq2_residual(const Tensor3& nablaS, const Matrix& S, const StructureJet& sj) {
    const int n = S.dim();
    const Matrix& J = sj.J;
    Tensor3 out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 2.0 * nablaS(i, j, k);
                for (int p = 0; p < n; ++p)
                    for (int q = 0; q < n; ++q)
                        s -= S(p, q) * (sj.nablaJ(i, p, j) * J(q, k) + J(p, j) * sj.nablaJ(i, q, k));
                out(i, j, k) = s;
            }
    return out;
}

/// T(X,Y) = (∇_Y S)(X,Y) + (∇_{JY} S)(X,JY)
inline double lemma_eq3_value(const Tensor3& nablaS, const Matrix& J, const Vector& x, const Vector& y) {
    const Vector jy = apply(J, y);
    return nabla_S_form(nablaS, y, x, y) + nabla_S_form(nablaS, jy, x, jy);
}

/// max |T(X,Y)| over all ordered pairs of frame vectors.
inline double lemma_eq3_residual(const Tensor3& nablaS, const Matrix& J, const std::vector<Vector>& frame) {
    double worst = 0.0;
    for (const Vector& x : frame)
        for (const Vector& y : frame) worst = std::max(worst, std::abs(lemma_eq3_value(nablaS, J, x, y)));
    return worst;
}

/// r4 = ½ X(tau) - (∇_X S)(X,X) - (∇_{JX} S)(X,JX), X a g-unit vector.
inline double lemma_eq4_residual(const Vector& dtau, const Tensor3& nablaS, const Matrix& J, const Vector& x) {
    const Vector jx = apply(J, x);
    return 0.5 * dtau_along(dtau, x) - nabla_S_form(nablaS, x, x, x) - nabla_S_form(nablaS, jx, x, jx);
}

/// r6 = X(tau) - 2(2m-1){(∇_X S)(JX,JX) - (∇_{JX} S)(X,JX)}, X a g-unit vector.
inline double lemma_eq6_residual(const Vector& dtau, const Tensor3& nablaS, const Matrix& J, const Vector& x, int m) {
    const Vector jx = apply(J, x);
    return dtau_along(dtau, x) -
           2.0 * (2 * m - 1) * (nabla_S_form(nablaS, x, jx, jx) - nabla_S_form(nablaS, jx, x, jx));
}

/// E_ijk = (∇_i S)_jk - (∇_j S)_ik - (∂_i tau g_jk - ∂_j tau g_ik) / (2(2m-1))
inline Tensor3 lemma_eq5_residual(const Tensor3& nablaS, const Vector& dtau, const Matrix& g, int m) {
    const int n = g.dim();
    const double f = 1.0 / (2.0 * (2 * m - 1));
    Tensor3 out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                out(i, j, k) = nablaS(i, j, k) - nablaS(j, i, k) - f * (dtau(i) * g(j, k) - dtau(j) * g(i, k));
    return out;
}

/// r = (∇_Y S)(X,Y) - S(JX,(∇_Y J)Y) - S(JY,(∇_Y J)X) + S(Y,(∇_{JX} J)Y)
/// for g-unit X, Y with g(X,Y) = g(X,JY) = 0.
inline double lemma_step1_residual(const Tensor3& nablaS, const Matrix& S, const StructureJet& sj, const Vector& x,
                                   const Vector& y) {
    const Vector jx = apply(sj.J, x);
    const Vector jy = apply(sj.J, y);
    return nabla_S_form(nablaS, y, x, y) - bilinear(S, jx, nabla_J_apply(sj.nablaJ, y, y)) -
           bilinear(S, jy, nabla_J_apply(sj.nablaJ, y, x)) + bilinear(S, y, nabla_J_apply(sj.nablaJ, jx, y));
}

/// (∇_{JX}R)(X,Y,JY,X) + (∇_X R)(Y,JX,JY,X) + (∇_Y R)(JX,X,JY,X)
inline double bianchi_lemma_instance(const Tensor5& nablaR, const Matrix& J, const Vector& x, const Vector& y) {
    const Vector jx = apply(J, x);
    const Vector jy = apply(J, y);
    return nabla_riemann_form(nablaR, jx, x, y, jy, x) + nabla_riemann_form(nablaR, x, y, jx, jy, x) +
           nabla_riemann_form(nablaR, y, jx, x, jy, x);
}

struct NablaSInvariance {
    Tensor3 symmetry;     // (∇_i S)_jk - (∇_j S)_ik
    Tensor3 j_invariance; // (∇_i S)_jk + (∇_i S)_pq J^p_j J^q_k
};

inline NablaSInvariance nabla_S_invariance_residuals(const Tensor3& nablaS, const Matrix& J) {
    const int n = J.dim();
    NablaSInvariance out{Tensor3(n), Tensor3(n)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                out.symmetry(i, j, k) = nablaS(i, j, k) - nablaS(j, i, k);
                double s = nablaS(i, j, k);
                for (int p = 0; p < n; ++p)
                    for (int q = 0; q < n; ++q) s += nablaS(i, p, q) * J(p, j) * J(q, k);
                out.j_invariance(i, j, k) = s;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Per-point analysis

struct PointAnalysis {
    CurvatureBundle bundle;
    StructureJet structure;
    ClassReport classes;
    std::vector<Vector> frame;
};

inline PointAnalysis analyze_point(const ManifoldSpec& spec, std::span<const double> point, const Tolerances& tol) {
    PointAnalysis a;
    a.bundle = curvature_bundle(spec, point);
    a.structure = structure_jet(spec, point, a.bundle.jet, a.bundle.connection);
    a.classes = classify_point(a.bundle, a.structure, tol);
    a.frame = gram_schmidt(a.bundle.jet.g);
    return a;
}

/// Scale-relative residuals of every lemma equation at one point.
struct LemmaPointResiduals {
    double eq2 = 0, eq3 = 0, eq4 = 0, eq5 = 0, eq6 = 0, step1 = 0;
    double bianchi_instance = 0;
    double nabla_S_symmetry = 0, nabla_S_J_invariance = 0, nabla_S_norm = 0;
    double dtau_norm = 0;
};

/// Unit test vectors: the frame and the normalized pairwise sums of frame vectors.
inline std::vector<Vector> unit_probe_vectors(const std::vector<Vector>& frame) {
    std::vector<Vector> out = frame;
    const double r = 1.0 / std::sqrt(2.0);
    for (std::size_t a = 0; a < frame.size(); ++a)
        for (std::size_t b = a + 1; b < frame.size(); ++b) out.push_back(r * (frame[a] + frame[b]));
    return out;
}

inline LemmaPointResiduals lemma_point_residuals(const PointAnalysis& pa, int m) {
    const CurvatureBundle& b = pa.bundle;
    const StructureJet& sj = pa.structure;
    const double sc = b.scale;
    LemmaPointResiduals r;
    r.eq2 = lemma_eq2_residual(b.nablaS, b.S, sj).inf_norm() / sc;
    r.eq3 = lemma_eq3_residual(b.nablaS, sj.J, pa.frame) / sc;
    for (const Vector& x : unit_probe_vectors(pa.frame)) {
        r.eq4 = std::max(r.eq4, std::abs(lemma_eq4_residual(b.dtau, b.nablaS, sj.J, x)) / sc);
        r.eq6 = std::max(r.eq6, std::abs(lemma_eq6_residual(b.dtau, b.nablaS, sj.J, x, m)) / sc);
    }
    r.eq5 = lemma_eq5_residual(b.nablaS, b.dtau, b.jet.g, m).inf_norm() / sc;
    for (const auto& [x, y] : adapted_pairs(b.jet.g, sj.J, pa.frame)) {
        r.step1 = std::max(r.step1, std::abs(lemma_step1_residual(b.nablaS, b.S, sj, x, y)) / sc);
        r.bianchi_instance = std::max(r.bianchi_instance, std::abs(bianchi_lemma_instance(b.nablaR, sj.J, x, y)) / sc);
    }
    const NablaSInvariance inv = nabla_S_invariance_residuals(b.nablaS, sj.J);
    r.nabla_S_symmetry = inv.symmetry.inf_norm() / sc;
    r.nabla_S_J_invariance = inv.j_invariance.inf_norm() / sc;
    r.nabla_S_norm = b.nablaS.inf_norm() / sc;
    r.dtau_norm = b.dtau.inf_norm() / sc;
    return r;
}

struct LemmaReport {
    std::vector<LemmaPointResiduals> points;
    double tau_deviation = 0.0;  // max |tau(p) - tau(q)|
    double max_dtau = 0.0;       // max |∂tau| (raw)
};

inline LemmaReport lemma_report(const std::vector<PointAnalysis>& analyses, int m) {
    LemmaReport rep;
    double tmin = INFINITY, tmax = -INFINITY;
    for (const auto& pa : analyses) {
        rep.points.push_back(lemma_point_residuals(pa, m));
        tmin = std::min(tmin, pa.bundle.tau);
        tmax = std::max(tmax, pa.bundle.tau);
        rep.max_dtau = std::max(rep.max_dtau, pa.bundle.dtau.inf_norm());
    }
    rep.tau_deviation = analyses.empty() ? 0.0 : tmax - tmin;
    return rep;
}

// ---------------------------------------------------------------------------
// J-adapted Ricci eigenbasis

struct EigenData {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    Vector e1, e2, je1, je2;
    double eigen_residual = 0.0;        // max g-norm of S e - lambda e over the four vectors
    double orthonormality = 0.0;        // |Gram - I|
};

/// Orthonormal basis {e1, e2, Je1, Je2} with S e_i = lambda_i e_i, lambda1 >= lambda2.
/// Throws GeometryError when S and J do not commute within `commute_tol`
/// (absolute) or when the eigenvectors cannot be paired by J.
inline EigenData ricci_eigen_jadapted(const Matrix& S, const Matrix& g, const Matrix& J, double commute_tol,
                                      double pairing_tol) {
    const int n = g.dim();
    if (n != 4) throw GeometryError("J-adapted Ricci eigenbasis requires dimension 4");
    const double commute = sj_commute_residual(S, J).inf_norm();
    if (commute > commute_tol)
        throw GeometryError("Ricci tensor does not commute with J (residual " + std::to_string(commute) + ")");

    const std::vector<Vector> frame = gram_schmidt(g);
    Matrix a(n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) a(p, q) = bilinear(S, frame[p], frame[q]);
    // symmetrize away rounding
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) a(p, q) = a(q, p) = 0.5 * (a(p, q) + a(q, p));
    const SymmetricEigen eig = jacobi_eigen(a, 1e-12);

    std::vector<Vector> vecs;
    for (const Vector& y : eig.vectors) {
        Vector v(n);
        for (int p = 0; p < n; ++p)
            for (int i = 0; i < n; ++i) v(i) += y(p) * frame[p](i);
        vecs.push_back(std::move(v));
    }

    EigenData out;
    out.e1 = vecs[0];
    out.je1 = apply(J, out.e1);
    double best = -1.0;
    for (int k = 1; k < n; ++k) {
        Vector v = vecs[k];
        const double a1 = bilinear(g, out.e1, v);
        const double a2 = bilinear(g, out.je1, v);
        for (int i = 0; i < n; ++i) v(i) -= a1 * out.e1(i) + a2 * out.je1(i);
        const double nn = bilinear(g, v, v);
        if (nn > best) {
            best = nn;
            out.e2 = v;
        }
    }
    out.e2 *= 1.0 / std::sqrt(best);
    out.je2 = apply(J, out.e2);
    out.lambda1 = bilinear(S, out.e1, out.e1);
    out.lambda2 = bilinear(S, out.e2, out.e2);

    Matrix g_inv;
    invert(g, g_inv);
    const Matrix endo = matmul(g_inv, S);
    auto eigen_err = [&](const Vector& e, double lambda) {
        Vector r = apply(endo, e);
        for (int i = 0; i < n; ++i) r(i) -= lambda * e(i);
        return std::sqrt(std::max(0.0, bilinear(g, r, r)));
    };
    out.eigen_residual = std::max({eigen_err(out.e1, out.lambda1), eigen_err(out.je1, out.lambda1),
                                   eigen_err(out.e2, out.lambda2), eigen_err(out.je2, out.lambda2)});
    out.orthonormality = max_abs_diff(gram_matrix(g, {out.e1, out.e2, out.je1, out.je2}), identity_matrix(4));
    if (out.eigen_residual > pairing_tol)
        throw GeometryError("Ricci eigenvectors cannot be paired by J (residual " + std::to_string(out.eigen_residual) +
                            ")");
    if (out.orthonormality > 1e-10) throw GeometryError("J-adapted basis is not orthonormal");
    return out;
}

// ---------------------------------------------------------------------------
// Classification

enum class VerdictKind { constant_curvature, product_of_surfaces, not_applicable, indeterminate };

inline std::string_view to_string(VerdictKind k) {
    switch (k) {
        case VerdictKind::constant_curvature: return "constant_curvature";
        case VerdictKind::product_of_surfaces: return "product_of_surfaces";
        case VerdictKind::not_applicable: return "not_applicable";
        case VerdictKind::indeterminate: return "indeterminate";
    }
    return "?";
}

struct TheoremVerdict {
    VerdictKind kind = VerdictKind::indeterminate;
    double c = 0.0;
    std::vector<std::string> reasons;                          // failed hypotheses or failed checks
    std::vector<std::pair<std::string, double>> diagnostics;  // ordered numeric evidence
    std::vector<EigenData> eigen;                              // per point, when computed
};

inline TheoremVerdict theorem_classify(int m, const std::vector<PointAnalysis>& analyses, const Tolerances& tol) {
    TheoremVerdict v;
    const double eps = tol.membership;
    auto diag = [&v](std::string k, double x) { v.diagnostics.emplace_back(std::move(k), x); };
    auto indeterminate = [&v](std::string why) {
        v.kind = VerdictKind::indeterminate;
        v.reasons.push_back(std::move(why));
        return v;
    };

    // 1. hypotheses
    double worst_qk = 0, worst_id3 = 0, worst_conf = 0;
    for (const auto& pa : analyses) {
        worst_qk = std::max(worst_qk, pa.classes[ClassCheck::quasi_kahler].relative);
        worst_id3 = std::max(worst_id3, pa.classes[ClassCheck::identity3].relative);
        worst_conf = std::max(worst_conf, pa.classes[ClassCheck::conformal].relative);
    }
    diag("max_quasi_kahler", worst_qk);
    diag("max_identity3", worst_id3);
    diag("max_conformal", worst_conf);
    if (2 * m != 4) v.reasons.emplace_back("dimension is not 4");
    if (worst_qk > eps) v.reasons.emplace_back("quasi-Kahler condition fails");
    if (worst_id3 > eps) v.reasons.emplace_back("curvature identity (3) fails");
    if (worst_conf > eps) v.reasons.emplace_back("conformal flatness fails");
    if (analyses.empty()) v.reasons.emplace_back("no sample points");
    if (!v.reasons.empty()) {
        v.kind = VerdictKind::not_applicable;
        return v;
    }

    // 2. lemma conclusions, checked rather than assumed
    double scale = 1.0, tmin = INFINITY, tmax = -INFINITY, max_dtau = 0, max_nablaS = 0;
    for (const auto& pa : analyses) {
        const auto& b = pa.bundle;
        scale = std::max(scale, b.scale);
        tmin = std::min(tmin, b.tau);
        tmax = std::max(tmax, b.tau);
        max_dtau = std::max(max_dtau, b.dtau.inf_norm());
        max_nablaS = std::max(max_nablaS, b.nablaS.inf_norm());
    }
    diag("tau_deviation", tmax - tmin);
    diag("max_dtau", max_dtau);
    diag("max_nabla_S", max_nablaS);
    if (tmax - tmin > eps * scale) return indeterminate("scalar curvature is not constant across points");
    if (max_dtau > eps * scale) return indeterminate("scalar curvature has non-zero differential");
    if (max_nablaS > eps * scale) return indeterminate("Ricci tensor is not parallel");

    // 3. J-adapted eigenbasis and the proof scalars
    double worst_proof = 0.0;
    for (const auto& pa : analyses) {
        const auto& b = pa.bundle;
        EigenData e;
        try {
            e = ricci_eigen_jadapted(b.S, b.jet.g, pa.structure.J, eps * b.scale, eps * b.scale);
        } catch (const GeometryError& err) {
            return indeterminate(err.what());
        }
        const Vector* es[2] = {&e.e1, &e.e2};
        const double lam[2] = {e.lambda1, e.lambda2};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const Vector jei = apply(pa.structure.J, *es[i]);
                const double val = (lam[i] - lam[j]) *
                                   bilinear(b.jet.g, jei, nabla_J_apply(pa.structure.nablaJ, *es[j], *es[j]));
                worst_proof = std::max(worst_proof, std::abs(val) / b.scale);
            }
        v.eigen.push_back(std::move(e));
    }
    diag("max_proof_scalar", worst_proof);
    if (worst_proof > eps) return indeterminate("eigenvalue proof scalar does not vanish");

    auto rel_gap = [](double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); };
    std::size_t einstein_points = 0;
    for (const auto& e : v.eigen)
        if (rel_gap(e.lambda1, e.lambda2) <= tol.eigen_gap) ++einstein_points;

    // 4. Einstein at every point: constant curvature
    if (einstein_points == v.eigen.size()) {
        double tau_sum = 0.0;
        for (const auto& pa : analyses) tau_sum += pa.bundle.tau;
        const int n = 2 * m;
        const double c = tau_sum / static_cast<double>(analyses.size()) / (n * (n - 1.0));
        double worst = 0.0;
        for (const auto& pa : analyses)
            worst = std::max(worst, max_abs_diff(pa.bundle.R, constant_curvature_model(pa.bundle.jet.g, c)) /
                                        pa.bundle.scale);
        diag("constant_curvature_model_residual", worst);
        if (worst > eps) return indeterminate("Einstein at every point but curvature is not of constant-curvature form");
        v.kind = VerdictKind::constant_curvature;
        v.c = c;
        return v;
    }
    if (einstein_points != 0) return indeterminate("Einstein at some points only");

    // 5. split Ricci spectrum: product of surfaces of curvature c and -c
    double lam_sum = 0.0;
    for (std::size_t p = 0; p < analyses.size(); ++p) {
        const auto& e = v.eigen[p];
        const auto& b = analyses[p].bundle;
        if (std::abs(e.lambda1 + e.lambda2) > tol.eigen_gap * std::max({1.0, std::abs(e.lambda1), std::abs(e.lambda2)}))
            return indeterminate("Ricci eigenvalues are not opposite");
        if (std::abs(b.tau) > eps * b.scale) return indeterminate("scalar curvature is not zero");
        if (!(e.lambda1 > 0.0)) return indeterminate("top Ricci eigenvalue is not positive");
        lam_sum += e.lambda1;
    }
    const double c = lam_sum / static_cast<double>(analyses.size());
    double worst_sec = 0.0;
    for (std::size_t p = 0; p < analyses.size(); ++p) {
        const auto& e = v.eigen[p];
        const auto& b = analyses[p].bundle;
        const Matrix& g = b.jet.g;
        auto dev = [&](const Vector& x, const Vector& y, double want) {
            worst_sec = std::max(worst_sec, std::abs(sectional_curvature(g, b.R, x, y) - want) / b.scale);
        };
        worst_sec = std::max(worst_sec, std::abs(e.lambda1 - c) / b.scale);
        dev(e.e1, e.je1, c);
        dev(e.e2, e.je2, -c);
        for (const Vector* x : {&e.e1, &e.je1})
            for (const Vector* y : {&e.e2, &e.je2}) dev(*x, *y, 0.0);
    }
    diag("product_sectional_residual", worst_sec);
    if (worst_sec > eps) return indeterminate("sectional curvatures do not match a product of surfaces");
    v.kind = VerdictKind::product_of_surfaces;
    v.c = c;
    return v;
}

inline std::vector<PointAnalysis> analyze_points(const ManifoldSpec& spec, const Tolerances& tol) {
    std::vector<PointAnalysis> out;
    out.reserve(spec.sample_points.size());
    for (const auto& p : spec.sample_points) out.push_back(analyze_point(spec, p, tol));
    return out;
}

}  // namespace qklab
