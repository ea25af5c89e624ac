// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "qklab/fdcheck.hpp"
#include "qklab/gallery.hpp"
#include "qklab/jacobi.hpp"
#include "qklab/report.hpp"

using namespace qklab;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

ChartRun run(const std::string& name, const std::vector<std::pair<std::string, double>>& params = {}) {
    return run_chart(gallery_entry(name, params).spec, Tolerances{});
}

double rel(double raw, const PointAnalysis& pa) { return raw / pa.bundle.scale; }

// Ricci eigenvalues of g^{-1}S through an orthonormal frame, descending.
std::vector<double> ricci_spectrum(const PointAnalysis& pa) {
    const auto frame = gram_schmidt(pa.bundle.jet.g);
    Matrix a(4);
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) a(p, q) = bilinear(pa.bundle.S, frame[p], frame[q]);
    return jacobi_eigen(a).values;
}

Outcome flat_baseline() {
    Outcome o;
    const ChartRun r = run("flat_c2");
    double worst = 0.0;
    for (std::size_t p = 0; p < r.analyses.size(); ++p) {
        const auto& pa = r.analyses[p];
        const auto& b = pa.bundle;
        const auto& lem = r.lemma.points[p];
        const auto br = bianchi_residuals(b.R, b.nablaR);
        const auto ir = identity_residuals(b.R, pa.structure.J);
        for (double v : {b.connection.gamma.inf_norm(), b.R.inf_norm(), b.W.inf_norm(), pa.structure.nablaJ.inf_norm(),
                         b.S.inf_norm(), std::abs(b.tau), b.nablaS.inf_norm(), br.first.inf_norm(),
                         br.second.inf_norm(), ir.i1.inf_norm(), ir.i2.inf_norm(), ir.i3.inf_norm(), lem.eq2, lem.eq3,
                         lem.eq4, lem.eq5, lem.eq6, lem.step1, lem.bianchi_instance, lem.nabla_S_symmetry,
                         lem.nabla_S_J_invariance})
            worst = std::max(worst, v);
        for (ClassCheck c : all_class_checks) worst = std::max(worst, pa.classes[c].raw);
    }
    o.require(worst <= 1e-12, "max residual " + num(worst));
    o.require(r.verdict.kind == VerdictKind::constant_curvature && r.verdict.c == 0.0,
              "verdict " + std::string(to_string(r.verdict.kind)));
    if (o.pass) o.detail = "max residual " + num(worst) + ", constant_curvature(0)";
    return o;
}

Outcome product_case() {
    Outcome o;
    const ChartRun r = run("s2xh2");
    o.require(r.analyses.size() == 5, "expected 5 points");
    for (const auto& pa : r.analyses) {
        const auto& b = pa.bundle;
        o.require(pa.classes[ClassCheck::kahler].raw <= 1e-8, "Kahler residual " + num(pa.classes[ClassCheck::kahler].raw));
        o.require(b.W.inf_norm() <= 1e-8 * b.scale, "Weyl " + num(b.W.inf_norm()));
        o.require(b.nablaS.inf_norm() <= 1e-8 * b.scale, "nabla S " + num(b.nablaS.inf_norm()));
        o.require(std::abs(b.tau) <= 1e-8, "tau " + num(b.tau));
        const auto ev = ricci_spectrum(pa);
        const double want[4] = {1.0, 1.0, -1.0, -1.0};
        for (int i = 0; i < 4; ++i) o.require(std::abs(ev[i] - want[i]) <= 1e-6, "Ricci eigenvalue " + num(ev[i]));
    }
    o.require(r.verdict.kind == VerdictKind::product_of_surfaces && std::abs(r.verdict.c - 1.0) <= 1e-6,
              "verdict " + std::string(to_string(r.verdict.kind)) + " c=" + num(r.verdict.c));
    const ChartRun r2 = run("s2xh2", {{"c", 2.0}});
    o.require(r2.verdict.kind == VerdictKind::product_of_surfaces && std::abs(r2.verdict.c - 2.0) <= 1e-6,
              "c=2 verdict " + std::string(to_string(r2.verdict.kind)) + " c=" + num(r2.verdict.c));
    if (o.pass) o.detail = "product_of_surfaces c=" + num(r.verdict.c) + ", rerun c=" + num(r2.verdict.c);
    return o;
}

Outcome conformal_discrimination() {
    Outcome o;
    const ChartRun s = run("s2xs2");
    double min_w = INFINITY;
    for (const auto& pa : s.analyses) min_w = std::min(min_w, pa.bundle.W.inf_norm());
    o.require(min_w >= 0.1, "s2xs2 min |W| " + num(min_w));
    o.require(s.verdict.kind == VerdictKind::not_applicable, "s2xs2 verdict " + std::string(to_string(s.verdict.kind)));

    const ChartRun h = run("h4_constJ");
    std::mt19937 rng(20240611);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<std::size_t> pick(0, h.analyses.size() - 1);
    double worst_k = 0.0;
    for (const auto& pa : h.analyses)
        o.require(pa.bundle.W.inf_norm() <= 1e-8 * pa.bundle.scale, "h4 Weyl " + num(pa.bundle.W.inf_norm()));
    for (int t = 0; t < 20; ++t) {
        const auto& b = h.analyses[pick(rng)].bundle;
        Vector x(4), y(4);
        for (int i = 0; i < 4; ++i) x(i) = nd(rng), y(i) = nd(rng);
        worst_k = std::max(worst_k, std::abs(sectional_curvature(b.jet.g, b.R, x, y) + 1.0));
    }
    o.require(worst_k <= 1e-6, "sectional curvature deviation " + num(worst_k));
    if (o.pass) o.detail = "s2xs2 min |W| " + num(min_w) + ", h4 |K+1| <= " + num(worst_k) + " on 20 planes";
    return o;
}

Outcome hypothesis_discrimination() {
    Outcome o;
    const ChartRun h = run("h4_constJ");
    double min_q = INFINITY, max_i3 = 0.0;
    for (const auto& pa : h.analyses) {
        max_i3 = std::max(max_i3, pa.classes[ClassCheck::identity3].relative);
        min_q = std::min(min_q, pa.classes[ClassCheck::quasi_kahler].raw);
    }
    o.require(max_i3 <= 1e-8, "identity (3) residual " + num(max_i3));
    o.require(min_q >= 0.1, "quasi-Kahler residual " + num(min_q));
    o.require(h.verdict.kind == VerdictKind::not_applicable && !h.verdict.reasons.empty() &&
                  h.verdict.reasons.front() == "quasi-Kahler condition fails",
              "verdict " + std::string(to_string(h.verdict.kind)));
    if (o.pass) o.detail = "identity (3) " + num(max_i3) + ", min |Q| " + num(min_q) + ", not_applicable(QK)";
    return o;
}

Outcome dimension_four_equivalence() {
    Outcome o;
    const ChartRun k = run("kodaira_thurston");
    double max_df = 0, max_q = 0, min_k = INFINITY;
    for (const auto& pa : k.analyses) {
        max_df = std::max(max_df, rel(pa.structure.dF.inf_norm(), pa));
        max_q = std::max(max_q, pa.classes[ClassCheck::quasi_kahler].relative);
        min_k = std::min(min_k, pa.classes[ClassCheck::kahler].raw);
    }
    o.require(max_df <= 1e-8, "dF " + num(max_df));
    o.require(max_q <= 1e-8, "quasi-Kahler " + num(max_q));
    o.require(min_k >= 0.1, "Kahler " + num(min_k));
    if (o.pass) o.detail = "dF " + num(max_df) + ", Q " + num(max_q) + ", min |nabla J| " + num(min_k);
    return o;
}

Outcome lemma_suite() {
    Outcome o;
    const ChartRun c = run("conf_flat_generic");
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    double worst5 = 0, worst6 = 0;
    for (std::size_t p = 0; p < c.analyses.size(); ++p) {
        const auto& pa = c.analyses[p];
        const auto& b = pa.bundle;
        o.require(b.dtau.inf_norm() > 1e-3, "dtau vanishes");
        worst5 = std::max(worst5, c.lemma.points[p].eq5);
        worst6 = std::max(worst6, c.lemma.points[p].eq6);
        for (int t = 0; t < 10; ++t) {
            Vector x(4);
            for (int i = 0; i < 4; ++i) x(i) = nd(rng);
            x *= 1.0 / std::sqrt(bilinear(b.jet.g, x, x));
            worst6 = std::max(worst6, std::abs(lemma_eq6_residual(b.dtau, b.nablaS, pa.structure.J, x, 2)) / b.scale);
        }
    }
    o.require(worst5 <= 1e-7, "eq5 " + num(worst5));
    o.require(worst6 <= 1e-7, "eq6 " + num(worst6));
    double worst_b = 0.0;
    for (const auto& e : entries())
        for (const auto& pa : run_chart(e.spec, Tolerances{}).analyses) {
            const auto br = bianchi_residuals(pa.bundle.R, pa.bundle.nablaR);
            worst_b = std::max({worst_b, rel(br.first.inf_norm(), pa), rel(br.second.inf_norm(), pa)});
        }
    o.require(worst_b <= 1e-7, "Bianchi " + num(worst_b));
    if (o.pass) o.detail = "eq5 " + num(worst5) + ", eq6 " + num(worst6) + ", Bianchi " + num(worst_b);
    return o;
}

Outcome derivative_engine() {
    Outcome o;
    double worst = 0.0;
    for (const auto& e : entries())
        for (const auto& p : e.spec.sample_points) {
            const FdComparison c = fd_compare(e.spec, p, 1e-4);
            worst = std::max({worst, c.metric_first, c.christoffel, c.riemann});
        }
    o.require(worst <= 1e-6, "relative deviation " + num(worst));
    if (o.pass) o.detail = "max relative deviation " + num(worst);
    return o;
}

Outcome inclusions() {
    Outcome o;
    std::size_t points = 0;
    for (const auto& e : entries())
        for (const auto& pa : run_chart(e.spec, Tolerances{}).analyses) {
            ++points;
            for (const auto& v : inclusion_violations(pa.classes)) o.require(false, e.spec.name + ": " + v);
        }
    if (o.pass) o.detail = std::to_string(points) + " points consistent";
    return o;
}

Outcome determinism() {
    Outcome o;
    auto capture = [&o]() {
        std::string out;
        FILE* p = popen((std::string(QKLAB_CLI) + " gallery run-all --format json").c_str(), "r");
        if (!p) {
            o.require(false, "cannot start command");
            return out;
        }
        char buf[4096];
        std::size_t got;
        while ((got = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, got);
        const int status = pclose(p);
        o.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "run-all exit status " + std::to_string(status));
        return out;
    };
    const std::string a = capture();
    const std::string b = capture();
    o.require(!a.empty() && a == b, "outputs differ");
    if (o.pass) o.detail = std::to_string(a.size()) + " identical bytes";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"flat baseline", flat_baseline},
        {"product of surfaces", product_case},
        {"conformal flatness discrimination", conformal_discrimination},
        {"hypothesis discrimination", hypothesis_discrimination},
        {"almost Kahler / quasi Kahler agreement", dimension_four_equivalence},
        {"lemma equations and Bianchi identities", lemma_suite},
        {"exact vs finite-difference derivatives", derivative_engine},
        {"class inclusions", inclusions},
        {"report determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %zu (%s): %s  %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
