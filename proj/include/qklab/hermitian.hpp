#pragma once

// Almost Hermitian structure tensors and the class / curvature-identity
// residuals built from them.

#include <algorithm>
#include <array>
#include <span>
#include <string_view>

#include "qklab/chart.hpp"
#include "qklab/curvature.hpp"
#include "qklab/tensor.hpp"

namespace qklab {

struct StructureJet {
    Matrix J;        // J^k_j               -> (k, j)
    Tensor3 dJ;      // ∂_a J^k_j           -> (a, k, j)
    Tensor3 nablaJ;  // (∇_i J)^k_j         -> (i, k, j)
    Matrix F;        // F_ij = g_ik J^k_j   (F(X,Y) = g(X,JY))
    Tensor3 dF;      // dF_ijk = ∂_i F_jk + ∂_j F_ki + ∂_k F_ij
};

inline StructureJet structure_jet(const ManifoldSpec& spec, std::span<const double> point, const MetricJet& jet,
                                  const Connection& c) {
    const int n = spec.dim();
    const Env env = spec.env_at(point);
    const ChartDerivatives& d = *spec.derivatives;
    StructureJet sj{eval_matrix(spec.complex_structure, env), Tensor3(n), Tensor3(n), Matrix(n), Tensor3(n)};
    for (int a = 0; a < n; ++a)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) sj.dJ(a, k, j) = eval(d.dJ[d.idx3(a, k, j)], env);

    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) {
                double s = sj.dJ(i, k, j);
                for (int m = 0; m < n; ++m) s += c.gamma(k, i, m) * sj.J(m, j) - c.gamma(m, i, j) * sj.J(k, m);
                sj.nablaJ(i, k, j) = s;
            }

    Tensor3 dFcomp(n);  // ∂_a F_jk
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            double f = 0.0;
            for (int m = 0; m < n; ++m) f += jet.g(j, m) * sj.J(m, k);
            sj.F(j, k) = f;
            for (int a = 0; a < n; ++a) {
                double s = 0.0;
                for (int m = 0; m < n; ++m) s += jet.dg(a, j, m) * sj.J(m, k) + jet.g(j, m) * sj.dJ(a, m, k);
                dFcomp(a, j, k) = s;
            }
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) sj.dF(i, j, k) = dFcomp(i, j, k) + dFcomp(j, k, i) + dFcomp(k, i, j);
    return sj;
}

/// Cyclic sum (∇_i F)_jk + (∇_j F)_ki + (∇_k F)_ij with (∇_i F)_jk = g_jm (∇_i J)^m_k.
/// Equals dF for a torsion-free metric connection.
inline Tensor3 covariant_dF(const Matrix& g, const StructureJet& sj) {
    const int n = g.dim();
    Tensor3 nablaF(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int m = 0; m < n; ++m) s += g(j, m) * sj.nablaJ(i, m, k);
                nablaF(i, j, k) = s;
            }
    Tensor3 out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) out(i, j, k) = nablaF(i, j, k) + nablaF(j, k, i) + nablaF(k, i, j);
    return out;
}

/// (∇_i J)^k_j + (∇_j J)^k_i -> (i, k, j); vanishes iff (∇_X J)X = 0.
inline Tensor3 nearly_kahler_residual(const StructureJet& sj) {
    const int n = sj.J.dim();
    Tensor3 out(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) out(i, k, j) = sj.nablaJ(i, k, j) + sj.nablaJ(j, k, i);
    return out;
}

/// Q^k_ij = (∇_i J)^k_j + J^p_i (∇_p J)^k_l J^l_j -> (i, k, j), the
/// components of (∇_X J)Y + (∇_{JX} J)JY.
inline Tensor3 qk_residual(const StructureJet& sj) {
    const int n = sj.J.dim();
    const Matrix& J = sj.J;
    Tensor3 out(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) {
                double s = sj.nablaJ(i, k, j);
                for (int p = 0; p < n; ++p) {
                    if (J(p, i) == 0.0) continue;
                    for (int l = 0; l < n; ++l) s += J(p, i) * sj.nablaJ(p, k, l) * J(l, j);
                }
                out(i, k, j) = s;
            }
    return out;
}

struct IdentityResiduals {
    Tensor4 i1;  // R(X,Y,Z,U) - R(X,Y,JZ,JU)
    Tensor4 i2;  // R(X,Y,Z,U) - R(X,Y,JZ,JU) - R(X,JY,Z,JU) - R(JX,Y,Z,JU)
    Tensor4 i3;  // R(X,Y,Z,U) - R(JX,JY,JZ,JU)
};

inline IdentityResiduals identity_residuals(const Tensor4& R, const Matrix& J) {
    const int n = R.dim();
    // Apply J to one slot of R at a time: (RJ_s)(..., e_a, ...) = R(..., J e_a, ...).
    auto on_slot = [n, &J](const Tensor4& t, int slot) {
        Tensor4 out(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        double s = 0.0;
                        for (int p = 0; p < n; ++p) {
                            switch (slot) {
                                case 0: s += t(p, j, k, l) * J(p, i); break;
                                case 1: s += t(i, p, k, l) * J(p, j); break;
                                case 2: s += t(i, j, p, l) * J(p, k); break;
                                default: s += t(i, j, k, p) * J(p, l); break;
                            }
                        }
                        out(i, j, k, l) = s;
                    }
        return out;
    };
    const Tensor4 r_zu = on_slot(on_slot(R, 2), 3);
    const Tensor4 r_yu = on_slot(on_slot(R, 1), 3);
    const Tensor4 r_xu = on_slot(on_slot(R, 0), 3);
    const Tensor4 r_all = on_slot(on_slot(r_zu, 0), 1);
    return {R - r_zu, R - r_zu - r_yu - r_xu, R - r_all};
}

/// H_ij = S_ij - S_pq J^p_i J^q_j
inline Matrix sj_commute_residual(const Matrix& S, const Matrix& J) {
    return S - matmul(transpose(J), matmul(S, J));
}

// ---------------------------------------------------------------------------
// Class membership

struct Tolerances {
    double membership = 1e-8;  // scale-relative residual at or below => member
    double nonmember = 1e-2;   // scale-relative residual at or above => definitely not
    double eigen_gap = 1e-4;   // relative Ricci eigenvalue gap separating the two theorem cases
};

enum class Membership { yes, no, inconclusive };

inline std::string_view to_string(Membership m) {
    switch (m) {
        case Membership::yes: return "yes";
        case Membership::no: return "no";
        case Membership::inconclusive: return "inconclusive";
    }
    return "?";
}

enum class ClassCheck {
    kahler,
    nearly_kahler,
    almost_kahler,
    quasi_kahler,
    identity1,
    identity2,
    identity3,
    sj_commute,
    conformal,
};

inline constexpr std::array<ClassCheck, 9> all_class_checks = {
    ClassCheck::kahler,    ClassCheck::nearly_kahler, ClassCheck::almost_kahler,
    ClassCheck::quasi_kahler, ClassCheck::identity1,  ClassCheck::identity2,
    ClassCheck::identity3, ClassCheck::sj_commute,    ClassCheck::conformal,
};

inline std::string_view to_string(ClassCheck c) {
    switch (c) {
        case ClassCheck::kahler: return "kahler";
        case ClassCheck::nearly_kahler: return "nearly_kahler";
        case ClassCheck::almost_kahler: return "almost_kahler";
        case ClassCheck::quasi_kahler: return "quasi_kahler";
        case ClassCheck::identity1: return "identity1";
        case ClassCheck::identity2: return "identity2";
        case ClassCheck::identity3: return "identity3";
        case ClassCheck::sj_commute: return "sj_commute";
        case ClassCheck::conformal: return "conformal";
    }
    return "?";
}

struct ClassResidual {
    double raw = 0.0;       // max-abs component
    double relative = 0.0;  // raw / scale
    bool member = false;    // relative <= membership tolerance
    Membership verdict = Membership::no;
};

struct ClassReport {
    Point point;
    double scale = 1.0;
    std::array<ClassResidual, all_class_checks.size()> residuals{};

    const ClassResidual& operator[](ClassCheck c) const { return residuals[static_cast<std::size_t>(c)]; }
    ClassResidual& operator[](ClassCheck c) { return residuals[static_cast<std::size_t>(c)]; }
};

inline ClassResidual make_residual(double raw, double scale, const Tolerances& tol) {
    ClassResidual r;
    r.raw = raw;
    r.relative = raw / scale;
    r.member = r.relative <= tol.membership;
    r.verdict = r.member ? Membership::yes : r.relative >= tol.nonmember ? Membership::no : Membership::inconclusive;
    return r;
}

inline ClassReport classify_point(const CurvatureBundle& b, const StructureJet& sj, const Tolerances& tol) {
    ClassReport rep;
    rep.point = b.point;
    rep.scale = b.scale;
    const IdentityResiduals ids = identity_residuals(b.R, sj.J);
    auto set = [&](ClassCheck c, double raw) { rep[c] = make_residual(raw, b.scale, tol); };
    set(ClassCheck::kahler, sj.nablaJ.inf_norm());
    set(ClassCheck::nearly_kahler, nearly_kahler_residual(sj).inf_norm());
    set(ClassCheck::almost_kahler, sj.dF.inf_norm());
    set(ClassCheck::quasi_kahler, qk_residual(sj).inf_norm());
    set(ClassCheck::identity1, ids.i1.inf_norm());
    set(ClassCheck::identity2, ids.i2.inf_norm());
    set(ClassCheck::identity3, ids.i3.inf_norm());
    set(ClassCheck::sj_commute, sj_commute_residual(b.S, sj.J).inf_norm());
    set(ClassCheck::conformal, b.W.inf_norm());
    return rep;
}

}  // namespace qklab
