#include <catch_amalgamated.hpp>

#include <string>

#include "qklab/chart.hpp"
#include "qklab/gallery.hpp"

using namespace qklab;

namespace {

std::string manifest(const std::string& metric, const std::string& structure, const std::string& points,
                     const std::string& extra = "") {
    return R"({"name": "t", "m": 2, "coordinates": ["a", "b", "c", "d"], )" + extra + R"("metric": )" + metric +
           R"(, "complex_structure": )" + structure + R"(, "sample_points": )" + points + "}";
}

const std::string flat_metric = R"([["1","0","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","1"]])";
const std::string std_j = R"([["0","-1","0","0"],["1","0","0","0"],["0","0","0","-1"],["0","0","1","0"]])";

}  // namespace

TEST_CASE("well-formed manifest loads") {
    const ManifoldSpec s = load_manifest(manifest(flat_metric, std_j, "[[0,0,0,0],[1,2,3,4]]", R"("parameters": {"k": 2}, )"));
    CHECK(s.dim() == 4);
    CHECK(s.sample_points.size() == 2);
    CHECK(s.parameters.size() == 1);
    CHECK(validate(s).empty());
}

TEST_CASE("manifest structural errors are rejected") {
    CHECK_THROWS_AS(load_manifest("{"), ManifestError);
    CHECK_THROWS_AS(load_manifest("[]"), ManifestError);
    CHECK_THROWS_AS(load_manifest(manifest(flat_metric, std_j, "[[0,0,0,0]]", R"("colour": 1, )")), ManifestError);
    CHECK_THROWS_AS(load_manifest(manifest(flat_metric, std_j, "[[0,0,0]]")), ManifestError);
    CHECK_THROWS_AS(load_manifest(manifest(R"([["1","0"],["0","1"]])", std_j, "[[0,0,0,0]]")), ManifestError);
    CHECK_THROWS_AS(load_manifest(manifest(flat_metric, std_j, "[[0,0,0,0]]", R"("parameters": {"a": 1}, )")),
                    ManifestError);
    // Undeclared symbol.
    CHECK_THROWS_AS(load_manifest(manifest(R"([["q","0","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","1"]])",
                                           std_j, "[[0,0,0,0]]")),
                    ManifestError);
    // Unparseable entry.
    CHECK_THROWS_AS(load_manifest(manifest(R"([["1+","0","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","1"]])",
                                           std_j, "[[0,0,0,0]]")),
                    ManifestError);
    // Asymmetric metric.
    CHECK_THROWS_AS(load_manifest(manifest(R"([["1","a","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","1"]])",
                                           std_j, "[[1,0,0,0]]")),
                    ManifestError);
}

TEST_CASE("pointwise violations are reported per point") {
    const std::string indefinite = R"([["1","0","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","a-1"]])";
    const auto v = validate(load_manifest(manifest(indefinite, std_j, "[[2,0,0,0],[0.5,0,0,0]]")));
    bool saw_pd = false;
    for (const auto& x : v) {
        CHECK(x.point_index == 1);
        saw_pd = saw_pd || x.condition == "metric not positive definite";
    }
    CHECK(saw_pd);

    const std::string not_complex = R"([["0","-2","0","0"],["1","0","0","0"],["0","0","0","-1"],["0","0","1","0"]])";
    const auto v2 = validate(load_manifest(manifest(flat_metric, not_complex, "[[0,0,0,0]]")));
    REQUIRE(!v2.empty());
    CHECK(v2.front().condition == "J^2 + I != 0");

    const std::string stretched = R"([["2","0","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","1"]])";
    const auto v3 = validate(load_manifest(manifest(stretched, std_j, "[[0,0,0,0]]")));
    REQUIRE(v3.size() == 1);
    CHECK(v3.front().condition == "J^T g J != g");

    const std::string singular = R"([["1/a","0","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","1"]])";
    const auto v4 = validate(load_manifest(manifest(singular, std_j, "[[0,0,0,0]]")));
    REQUIRE(v4.size() == 1);
    CHECK(v4.front().condition.rfind("evaluation error", 0) == 0);
    CHECK(!v4.front().residual);
}

TEST_CASE("emitted manifests load back to the same chart") {
    for (const auto& e : entries()) {
        INFO(e.spec.name);
        const ManifoldSpec back = load_manifest(emit_manifest(e.spec));
        CHECK(emit_manifest(back) == emit_manifest(e.spec));
        for (const auto& p : e.spec.sample_points) CHECK(max_abs_diff(metric_at(back, p), metric_at(e.spec, p)) == 0.0);
    }
}

TEST_CASE("parameters can be overridden") {
    const ManifoldSpec s = with_parameter(gallery_entry("s2xs2").spec, "c", 4.0);
    const Point p = s.sample_points.front();
    CHECK(metric_at(s, p)(0, 0) == Catch::Approx(0.25));
    CHECK_THROWS_AS(with_parameter(s, "nope", 1.0), ManifestError);
}

TEST_CASE("orthonormal frame is g-orthonormal") {
    for (const auto& e : entries())
        for (const auto& p : e.spec.sample_points) {
            const Matrix g = metric_at(e.spec, p);
            const Matrix gram = gram_matrix(g, gram_schmidt(g));
            CHECK(max_abs_diff(gram, identity_matrix(4)) <= 1e-12);
        }
}

TEST_CASE("Cholesky pivot detects indefiniteness") {
    Matrix a(2);
    a(0, 0) = 1;
    a(1, 1) = -1;
    CHECK(!cholesky_min_pivot(a));
    a(1, 1) = 3;
    REQUIRE(cholesky_min_pivot(a));
    CHECK(*cholesky_min_pivot(a) == Catch::Approx(1.0));
}
