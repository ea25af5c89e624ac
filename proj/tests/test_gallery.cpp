#include <catch_amalgamated.hpp>

#include "qklab/gallery.hpp"

using namespace qklab;

TEST_CASE("every gallery expectation passes") {
    for (const auto& e : entries()) {
        const ChartRun run = run_chart(e.spec, Tolerances{});
        CHECK(run.violations.empty());
        CHECK(e.spec.sample_points.size() >= 5);
        for (const auto& x : e.expectations) {
            INFO(e.spec.name << ": " << x.name << " [" << x.provenance << "]");
            const ExpectationOutcome o = x.check(run);
            INFO("observed " << o.observed);
            CHECK(o.pass);
        }
    }
}

TEST_CASE("expectations follow a parameter override") {
    const GalleryEntry e = gallery_entry("s2xh2", {{"c", 3.0}});
    const ChartRun run = run_chart(e.spec, Tolerances{});
    for (const auto& x : e.expectations) {
        INFO(x.name);
        CHECK(x.check(run).pass);
    }
    CHECK(run.verdict.c == Catch::Approx(3.0).margin(1e-6));
}

TEST_CASE("expectations detect a mismatched chart") {
    // Expectations written for c = 1 must not pass on a c = 2 chart.
    const GalleryEntry want = gallery_entry("s2xh2");
    const ChartRun run = run_chart(gallery_entry("s2xh2", {{"c", 2.0}}).spec, Tolerances{});
    bool any_fail = false;
    for (const auto& x : want.expectations) any_fail = any_fail || !x.check(run).pass;
    CHECK(any_fail);
}

TEST_CASE("unknown entries and parameters are rejected") {
    CHECK_THROWS_AS(gallery_entry("nope"), ManifestError);
    CHECK_THROWS_AS(gallery_entry("h4_constJ", {{"c", 2.0}}), ManifestError);
    CHECK_THROWS_AS(gallery_entry("s2xh2", {{"k", 2.0}}), ManifestError);
}

TEST_CASE("gallery sample points avoid chart singularities") {
    for (const auto& e : entries())
        for (const auto& p : e.spec.sample_points) {
            const auto pivot = cholesky_min_pivot(metric_at(e.spec, p));
            REQUIRE(pivot);
            CHECK(*pivot >= 1e-3);
        }
}
