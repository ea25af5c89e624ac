#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qklab/gallery.hpp"
#include "qklab/hermitian.hpp"
#include "qklab/verdict.hpp"

using namespace qklab;

namespace {

PointAnalysis at(const std::string& name, std::size_t p) {
    const ManifoldSpec s = gallery_entry(name).spec;
    return analyze_point(s, s.sample_points[p], Tolerances{});
}

}  // namespace

TEST_CASE("nabla J of a constant J under a conformal metric matches the hand expansion") {
    // g = exp(2u) delta, J constant:
    // (nabla_i J)^k_j = delta_ki (uJ)_j - u_k J^i_j - J^k_i u_j + delta_ij (Ju)^k
    const ManifoldSpec s = gallery_entry("h4_constJ").spec;
    for (const auto& p : s.sample_points) {
        const PointAnalysis pa = analyze_point(s, p, Tolerances{});
        const Matrix& J = pa.structure.J;
        double r2 = 0.0;
        for (double x : p) r2 += x * x;
        double u[4];
        for (int i = 0; i < 4; ++i) u[i] = 2.0 * p[i] / (1.0 - r2);
        double worst = 0.0, biggest = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k)
                for (int j = 0; j < 4; ++j) {
                    double uj = 0.0, ju = 0.0;
                    for (int l = 0; l < 4; ++l) uj += u[l] * J(l, j), ju += J(k, l) * u[l];
                    const double want = (k == i) * uj - u[k] * J(i, j) - J(k, i) * u[j] + (i == j) * ju;
                    worst = std::max(worst, std::abs(pa.structure.nablaJ(i, k, j) - want));
                    biggest = std::max(biggest, std::abs(want));
                }
        CHECK(worst <= 1e-12 * std::max(1.0, biggest));
        CHECK(pa.classes[ClassCheck::quasi_kahler].raw >= 0.1);
        CHECK(pa.classes[ClassCheck::quasi_kahler].verdict == Membership::no);
    }
}

TEST_CASE("quasi-Kahler tensor matches its vector form") {
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    for (const char* name : {"h4_constJ", "kodaira_thurston", "conf_flat_generic"}) {
        const PointAnalysis pa = at(name, 1);
        const Tensor3 Q = qk_residual(pa.structure);
        const Matrix& J = pa.structure.J;
        for (int t = 0; t < 4; ++t) {
            Vector x(4), y(4);
            for (int i = 0; i < 4; ++i) x(i) = nd(rng), y(i) = nd(rng);
            const Vector lhs = nabla_J_apply(pa.structure.nablaJ, x, y) +
                               nabla_J_apply(pa.structure.nablaJ, apply(J, x), apply(J, y));
            for (int k = 0; k < 4; ++k) {
                double s = 0.0;
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 4; ++j) s += Q(i, k, j) * x(i) * y(j);
                CHECK(s == Catch::Approx(lhs(k)).margin(1e-12));
            }
        }
    }
}

TEST_CASE("exterior derivative of F equals the covariant cyclic sum") {
    for (const auto& e : entries())
        for (const auto& p : e.spec.sample_points) {
            INFO(e.spec.name);
            const PointAnalysis pa = analyze_point(e.spec, p, Tolerances{});
            const Tensor3 cov = covariant_dF(pa.bundle.jet.g, pa.structure);
            CHECK(max_abs_diff(cov, pa.structure.dF) <= 1e-9 * pa.bundle.scale);
        }
}

TEST_CASE("Kahler product is Kahler and satisfies every curvature identity") {
    for (std::size_t p = 0; p < 5; ++p) {
        const PointAnalysis pa = at("s2xh2", p);
        for (ClassCheck c : all_class_checks) {
            INFO(to_string(c));
            CHECK(pa.classes[c].member);
            CHECK(pa.classes[c].relative <= 1e-8);
        }
    }
}

TEST_CASE("Kodaira-Thurston structure is almost Kahler but neither Kahler nor nearly Kahler") {
    for (std::size_t p = 0; p < 5; ++p) {
        const PointAnalysis pa = at("kodaira_thurston", p);
        CHECK(pa.classes[ClassCheck::almost_kahler].member);
        CHECK(pa.classes[ClassCheck::quasi_kahler].member);
        CHECK(pa.classes[ClassCheck::kahler].raw >= 0.1);
        CHECK(pa.classes[ClassCheck::kahler].verdict == Membership::no);
        CHECK(pa.classes[ClassCheck::nearly_kahler].verdict == Membership::no);
        CHECK(std::abs(pa.bundle.tau + 0.5) <= 1e-12);
    }
}

TEST_CASE("constant curvature with a compatible J satisfies identity (3) but not identity (1)") {
    for (std::size_t p = 0; p < 5; ++p) {
        const PointAnalysis pa = at("h4_constJ", p);
        CHECK(pa.classes[ClassCheck::identity3].member);
        CHECK(pa.classes[ClassCheck::identity1].verdict == Membership::no);
        CHECK(pa.classes[ClassCheck::sj_commute].member);
    }
}

TEST_CASE("class inclusions hold at every gallery point") {
    for (const auto& e : entries())
        for (const auto& p : e.spec.sample_points) {
            const ClassReport c = analyze_point(e.spec, p, Tolerances{}).classes;
            auto yes = [&c](ClassCheck k) { return c[k].member; };
            if (yes(ClassCheck::kahler)) {
                CHECK(yes(ClassCheck::nearly_kahler));
                CHECK(yes(ClassCheck::almost_kahler));
                CHECK(yes(ClassCheck::quasi_kahler));
            }
            if (yes(ClassCheck::almost_kahler)) CHECK(yes(ClassCheck::quasi_kahler));
            if (yes(ClassCheck::nearly_kahler)) CHECK(yes(ClassCheck::quasi_kahler));
            if (yes(ClassCheck::identity1)) CHECK(yes(ClassCheck::identity2));
            if (yes(ClassCheck::identity2)) CHECK(yes(ClassCheck::identity3));
        }
}

TEST_CASE("membership verdicts follow the two thresholds") {
    const Tolerances tol;
    CHECK(make_residual(1e-9, 10.0, tol).verdict == Membership::yes);
    CHECK(make_residual(1e-6, 10.0, tol).verdict == Membership::inconclusive);
    CHECK(make_residual(0.1, 10.0, tol).verdict == Membership::no);
    CHECK(make_residual(0.1, 10.0, tol).relative == Catch::Approx(0.01));
}

TEST_CASE("identity residuals vanish for curvature built from the metric and a Hermitian J") {
    const PointAnalysis pa = at("h4_constJ", 2);
    const Tensor4 model = constant_curvature_model(pa.bundle.jet.g, 2.5);
    const IdentityResiduals ir = identity_residuals(model, pa.structure.J);
    CHECK(ir.i3.inf_norm() <= 1e-12 * model.inf_norm());
    CHECK(ir.i1.inf_norm() >= 0.1 * model.inf_norm());
}
