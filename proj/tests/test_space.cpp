#include <catch2/catch_amalgamated.hpp>

#include "specmult/space.hpp"

using namespace specmult;

namespace {

SpaceSpec spec_of(const std::string& family, int n) {
    SpaceSpec s;
    s.family = family;
    s.n = n;
    return s;
}

// independent shortest-path oracle: Floyd-Warshall over the adjacency
Eigen::MatrixXd floyd_warshall(const Eigen::MatrixXi& adj) {
    const int n = static_cast<int>(adj.rows());
    const double inf = 1e18;
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, inf);
    for (int i = 0; i < n; ++i) d(i, i) = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (adj(i, j)) d(i, j) = 1.0;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
    return d;
}

}  // namespace

TEST_CASE("build_space basic families") {
    SECTION("single point path") {
        const MetricMeasureSpace sp = build_space(spec_of("path", 1));
        REQUIRE(sp.size() == 1);
        REQUIRE(sp.dist(0, 0) == 0.0);
        REQUIRE(sp.weight(0) == 1.0);
        REQUIRE(sp.diameter() == 0.0);
    }
    SECTION("path(5) shortest-path metric") {
        const MetricMeasureSpace sp = build_space(spec_of("path", 5));
        REQUIRE(sp.dist(0, 4) == 4.0);
        const Eigen::MatrixXd oracle = floyd_warshall(sp.adjacency());
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) REQUIRE(sp.dist(i, j) == oracle(i, j));
    }
    SECTION("grid2d(4x4) l1 metric") {
        SpaceSpec s;
        s.family = "grid2d";
        s.nx = 4;
        s.ny = 4;
        const MetricMeasureSpace sp = build_space(s);
        REQUIRE(sp.size() == 16);
        // corner (0,0) has id 0, corner (3,3) has id 15
        REQUIRE(sp.dist(0, 15) == 6.0);
        const Eigen::MatrixXd oracle = floyd_warshall(sp.adjacency());
        REQUIRE((sp.dist_matrix() - oracle).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("cycle wraps") {
        const MetricMeasureSpace sp = build_space(spec_of("cycle", 8));
        REQUIRE(sp.dist(0, 7) == 1.0);
        REQUIRE(sp.dist(0, 4) == 4.0);
    }
    SECTION("binary tree leaf to leaf") {
        const MetricMeasureSpace sp = build_space(spec_of("binary_tree", 3));
        REQUIRE(sp.size() == 15);
        REQUIRE(sp.dist(7, 14) == 6.0);  // leftmost leaf to rightmost leaf through the root
    }
    SECTION("sierpinski level sizes") {
        const MetricMeasureSpace s1 = build_space(spec_of("sierpinski", 1));
        REQUIRE(s1.size() == 6);
        const MetricMeasureSpace s3 = build_space(spec_of("sierpinski", 3));
        REQUIRE(s3.size() == 42);  // 3(3^k+1)/2
    }
    SECTION("bad sizes throw") {
        REQUIRE_THROWS_AS(build_space(spec_of("path", 0)), std::invalid_argument);
        SpaceSpec s = spec_of("path", 3);
        s.weight_scheme = "custom";
        s.custom_weights = {1.0, -1.0, 1.0};
        REQUIRE_THROWS_AS(build_space(s), std::invalid_argument);
    }
}

TEST_CASE("metric axioms hold on every built family") {
    for (const auto& fam : {std::pair<std::string, int>{"path", 17},
                            {"cycle", 24},
                            {"binary_tree", 4},
                            {"sierpinski", 2}}) {
        const MetricMeasureSpace sp = build_space(spec_of(fam.first, fam.second));
        INFO(fam.first);
        REQUIRE(check_metric_axioms(sp));
    }
    SpaceSpec g;
    g.family = "grid2d";
    g.nx = 5;
    g.ny = 7;
    REQUIRE(check_metric_axioms(build_space(g)));
}

TEST_CASE("ball semantics") {
    const MetricMeasureSpace sp = build_space(spec_of("path", 5));
    SECTION("r=0 is empty (strict inequality)") { REQUIRE(ball(sp, 2, 0.0).empty()); }
    SECTION("r beyond diameter catches everything") {
        REQUIRE(ball(sp, 0, sp.diameter() + 1.0).size() == 5);
    }
    SECTION("path(5) center 2 radius 1.5") {
        REQUIRE(ball(sp, 2, 1.5) == PointSet{1, 2, 3});
    }
    SECTION("monotone in the radius") {
        const MetricMeasureSpace cy = build_space(spec_of("cycle", 32));
        for (double r1 : {0.5, 1.5, 3.5, 7.5})
            for (double r2 : {1.5, 3.5, 7.5, 16.5}) {
                if (r1 > r2) continue;
                const PointSet b1 = ball(cy, 5, r1), b2 = ball(cy, 5, r2);
                REQUIRE(std::includes(b2.begin(), b2.end(), b1.begin(), b1.end()));
            }
    }
}

TEST_CASE("annulus semantics") {
    const MetricMeasureSpace sp = build_space(spec_of("path", 9));
    SECTION("k=0 equals the ball") { REQUIRE(annulus(sp, 4, 1.5, 0) == ball(sp, 4, 1.5)); }
    SECTION("large k is empty") { REQUIRE(annulus(sp, 4, 3.0, 10).empty()); }
    SECTION("path(9) x=4 r=1.5 k=1") { REQUIRE(annulus(sp, 4, 1.5, 1) == PointSet{2, 6}); }
}

TEST_CASE("dyadic annuli") {
    const MetricMeasureSpace sp = build_space(spec_of("path", 17));
    const Ball B{8, 1.5};
    SECTION("j=0 is the ball") { REQUIRE(dyadic_annulus(sp, B, 0) == ball(sp, 8, 1.5)); }
    SECTION("vanishes once the half dilate covers everything") {
        REQUIRE(dyadic_annulus(sp, B, 6).empty());
    }
    SECTION("j=2 shell by enumeration") {
        // distances in [3,6) from the center 8
        PointSet expected;
        for (int i = 0; i < 17; ++i) {
            const double d = std::abs(i - 8);
            if (d >= 3.0 && d < 6.0) expected.push_back(i);
        }
        REQUIRE(dyadic_annulus(sp, B, 2) == expected);
        REQUIRE(expected == PointSet{3, 4, 5, 11, 12, 13});
    }
    SECTION("shells partition the largest dilate") {
        const MetricMeasureSpace cy = build_space(spec_of("cycle", 48));
        const Ball b{7, 1.5};
        const int jmax = 6;
        std::vector<int> seen(static_cast<std::size_t>(cy.size()), 0);
        for (int j = 0; j <= jmax; ++j)
            for (PointId x : dyadic_annulus(cy, b, j)) seen[static_cast<std::size_t>(x)] += 1;
        const PointSet big = ball(cy, 7, std::ldexp(1.5, jmax));
        for (PointId x = 0; x < cy.size(); ++x) {
            const bool inside = std::binary_search(big.begin(), big.end(), x);
            REQUIRE(seen[static_cast<std::size_t>(x)] == (inside ? 1 : 0));
        }
    }
}

TEST_CASE("lp_norm") {
    SECTION("zero function") {
        const MetricMeasureSpace sp = build_space(spec_of("path", 7));
        REQUIRE(lp_norm(sp, GridFunction::Zero(7), 1.0) == 0.0);
        REQUIRE(lp_norm(sp, GridFunction::Zero(7), std::numeric_limits<double>::infinity()) == 0.0);
    }
    SECTION("single point is the absolute value") {
        const MetricMeasureSpace sp = build_space(spec_of("path", 1));
        GridFunction f(1);
        f(0) = cplx{3.0, 4.0};
        for (double p : {1.0, 1.5, 2.0, 7.0}) REQUIRE(lp_norm(sp, f, p) == Catch::Approx(5.0));
    }
    SECTION("two weighted points") {
        SpaceSpec s = spec_of("path", 2);
        s.weight_scheme = "custom";
        s.custom_weights = {1.0, 3.0};
        const MetricMeasureSpace sp = build_space(s);
        GridFunction f(2);
        f << 1.0, 1.0;
        REQUIRE(lp_norm(sp, f, 2.0) == Catch::Approx(2.0));
    }
    SECTION("p below 1 rejected") {
        const MetricMeasureSpace sp = build_space(spec_of("path", 2));
        REQUIRE_THROWS_AS(lp_norm(sp, GridFunction::Zero(2), 0.5), std::invalid_argument);
    }
}

TEST_CASE("fit_dimension") {
    SECTION("single point degenerates to zero") {
        const MetricMeasureSpace sp = build_space(spec_of("path", 1));
        const FitReport rep = fit_dimension(sp, {0.5, 1.5}, {0});
        REQUIRE(rep.exponent == 0.0);
        REQUIRE(rep.degenerate);
    }
    SECTION("path grows linearly") {
        const MetricMeasureSpace sp = build_space(spec_of("path", 256));
        std::vector<PointId> centers;
        for (int c = 16; c < 240; c += 16) centers.push_back(c);
        const FitReport rep = fit_dimension(sp, {2.5, 4.5, 8.5, 16.5, 32.5}, centers);
        REQUIRE(rep.exponent > 0.9);
        REQUIRE(rep.exponent < 1.2);
        REQUIRE_FALSE(rep.degenerate);
    }
    SECTION("grid grows quadratically") {
        SpaceSpec s;
        s.family = "grid2d";
        s.nx = 16;
        s.ny = 16;
        const MetricMeasureSpace sp = build_space(s);
        std::vector<PointId> centers;
        for (int c = 0; c < sp.size(); c += 37) centers.push_back(c);
        const FitReport rep = fit_dimension(sp, {2.5, 4.5, 8.5}, centers);
        REQUIRE(rep.exponent > 1.8);
        REQUIRE(rep.exponent < 2.4);
    }
    SECTION("product dimension is close to the sum of factors") {
        const MetricMeasureSpace a = build_space(spec_of("path", 64));
        const MetricMeasureSpace b = build_space(spec_of("cycle", 64));
        std::vector<PointId> ca, cp;
        for (int c = 8; c < 56; c += 8) ca.push_back(c);
        const std::vector<double> radii{2.5, 4.5, 8.5};
        const FitReport da = fit_dimension(a, radii, ca);
        const FitReport db = fit_dimension(b, radii, ca);
        const MetricMeasureSpace prod = product(a, b);
        for (int c = 0; c < prod.size(); c += 500) cp.push_back(c);
        const FitReport dp = fit_dimension(prod, radii, cp);
        REQUIRE(std::abs(dp.exponent - (da.exponent + db.exponent)) < 0.3);
    }
}

TEST_CASE("covering_net") {
    const MetricMeasureSpace sp = build_space(spec_of("path", 64));
    SECTION("one ball suffices when s > 2r") {
        const PointSet net = covering_net(sp, 32, 2.0, 5.0);
        REQUIRE(net.size() == 1);
    }
    SECTION("r < s rejected") {
        REQUIRE_THROWS_AS(covering_net(sp, 32, 1.0, 2.0), std::invalid_argument);
    }
    SECTION("properties (i) and (ii) hold exactly") {
        for (const auto& [r, s] : std::vector<std::pair<double, double>>{{8.0, 2.0}, {8.0, 8.0}, {12.5, 3.0}}) {
            const PointSet net = covering_net(sp, 32, r, s);
            // (i) pairwise separation
            for (std::size_t i = 0; i < net.size(); ++i)
                for (std::size_t j = i + 1; j < net.size(); ++j)
                    REQUIRE(sp.dist(net[i], net[j]) > s / 2.0);
            // (ii) the s-balls cover B(y,r)
            for (PointId x : ball(sp, 32, r)) {
                bool covered = false;
                for (PointId c : net) covered = covered || sp.dist(c, x) < s;
                REQUIRE(covered);
            }
        }
    }
    SECTION("size bound on path(64), y=32, r=8, s=2") {
        const PointSet net = covering_net(sp, 32, 8.0, 2.0);
        REQUIRE(net.size() <= 16);
        REQUIRE(covering_multiplicity(sp, 32, 8.0, 2.0, net) >= 1);
    }
}

TEST_CASE("volume comparability") {
    SECTION("single point integral is exactly one") {
        const MetricMeasureSpace sp = build_space(spec_of("path", 1));
        const VolumeComparabilityReport rep = check_volume_comparability(sp, 1.0, 2.0);
        REQUIRE(rep.min_integral == Catch::Approx(1.0));
        REQUIRE(rep.max_integral == Catch::Approx(1.0));
        REQUIRE(rep.within);
    }
    SECTION("path(32) r=3 stays within [1/4, 4]") {
        const MetricMeasureSpace sp = build_space(spec_of("path", 32));
        const VolumeComparabilityReport rep = check_volume_comparability(sp, 3.0, 4.0);
        REQUIRE(rep.within);
    }
    SECTION("cycle is vertex-transitive: all integrals equal") {
        const MetricMeasureSpace sp = build_space(spec_of("cycle", 64));
        const VolumeComparabilityReport rep = check_volume_comparability(sp, 5.0, 4.0);
        REQUIRE(rep.min_integral == Catch::Approx(rep.max_integral));
    }
}

TEST_CASE("space json round trip") {
    SpaceSpec s = spec_of("cycle", 12);
    s.weight_scheme = "degree";
    const MetricMeasureSpace sp = build_space(s);
    const MetricMeasureSpace back = MetricMeasureSpace::from_json(sp.to_json());
    REQUIRE(back.size() == sp.size());
    REQUIRE((back.dist_matrix() - sp.dist_matrix()).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((back.weights() - sp.weights()).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(back.hash() == sp.hash());
}
