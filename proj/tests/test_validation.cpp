#include <cmath>

#include <doctest.h>

#include "generators.hpp"
#include "nafhn/continuation.hpp"
#include "nafhn/validation.hpp"

using namespace nafhn;
using nafhn::testing::Gen;

namespace {

SystemParams fig_params() {
    SystemParams p;
    p.a = 0.0;
    p.b = 0.5;
    p.eps = 0.1;
    return p;
}

const Branch &short_branch() {
    static const Branch b = [] {
        const BranchPoint seed = seed_branch_point(fig_params(), 0.4, 80, true);
        ContinuationOptions o;
        o.step_max = 0.01;
        return continue_branch(seed, fig_params(), 1, 0.0, 0.415, o);
    }();
    return b;
}

BranchPoint project(const BranchPoint &x, int K) {
    BranchPoint y = x;
    for (auto &c : y.c) c = c.project(K);
    return y;
}

Eigen::VectorXcd project_tangent(const Eigen::VectorXcd &t, int from, int to) {
    const Layout a(from), b(to);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(b.N());
    out(Layout::omega) = t(Layout::omega);
    out(Layout::delta) = t(Layout::delta);
    for (int i = 0; i < 4; ++i)
        for (int k = -std::min(from, to); k <= std::min(from, to); ++k) out(b.index(i, k)) = t(a.index(i, k));
    return out;
}

}  // namespace

TEST_CASE("radii interval: linear case") {
    const RadiiInterval r = radii_interval({0.01, 0.25, 0.25, 0.0});
    CHECK(r.r_min == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(r.r_star >= 0.02);
    CHECK(r.r_star == doctest::Approx(0.02).epsilon(1e-10));
    CHECK(radii_polynomial_upper({0.01, 0.25, 0.25, 0.0}, r.r_star) < 0.0);
}

TEST_CASE("radii interval: quadratic case") {
    const RadiiBounds b{0.01, 0.25, 0.25, 1.0};
    const RadiiInterval r = radii_interval(b);
    const double sq = std::sqrt(0.25 - 0.04);
    CHECK(r.r_min == doctest::Approx((0.5 - sq) / 2.0).epsilon(1e-13));
    CHECK(r.r_max == doctest::Approx((0.5 + sq) / 2.0).epsilon(1e-13));
    CHECK(r.r_min == doctest::Approx(0.0209).epsilon(1e-2));
    CHECK(r.r_max == doctest::Approx(0.479).epsilon(1e-2));
    CHECK(radii_polynomial_upper(b, r.r_star) < 0.0);
}

TEST_CASE("radii interval: infeasible bounds") {
    CHECK_THROWS_AS(radii_interval({0.01, 0.6, 0.4, 0.0}), ValidationFailure);
    CHECK_THROWS_AS(radii_interval({0.1, 0.2, 0.2, 10.0}), ValidationFailure);
    CHECK_THROWS_AS(radii_interval({1e-3, 0.1, 0.1, 1.0}, 1e-4), ValidationFailure);
}

TEST_CASE("radii interval monotonicity") {
    Gen g(17);
    int compared = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const RadiiBounds b{g.uniform(0, 0.05), g.uniform(0, 0.4), g.uniform(0, 0.4), g.uniform(0, 5)};
        RadiiBounds c = b;
        const int which = g.integer(0, 3);
        const double bump = g.uniform(0, 0.05);
        (which == 0 ? c.Y : which == 1 ? c.Z0 : which == 2 ? c.Z1 : c.Z2) += bump;
        RadiiInterval rb, rc;
        try {
            rb = radii_interval(b);
        } catch (const ValidationFailure &) {
            CHECK_THROWS_AS(radii_interval(c), ValidationFailure);
            continue;
        }
        try {
            rc = radii_interval(c);
        } catch (const ValidationFailure &) {
            continue;
        }
        ++compared;
        CHECK(rc.r_min >= rb.r_min);
        CHECK(rc.r_max <= rb.r_max);
    }
    CHECK(compared > 100);
}

TEST_CASE("toy problem x^2 - 4: hand-computed bounds") {
    const double xh = 2.0001, A = 1.0 / (2.0 * xh);
    const RadiiBounds b = quadratic_bounds(xh, A);
    CHECK(b.Y == doctest::Approx(A * (xh * xh - 4.0)).epsilon(1e-12));
    CHECK(b.Y >= A * (xh * xh - 4.0) * (1 - 1e-15));
    CHECK(b.Z0 < 1e-15);
    CHECK(b.Z1 == 0.0);
    CHECK(b.Z2 == doctest::Approx(2.0 * A).epsilon(1e-15));
    CHECK(b.Z2 >= 2.0 * A);
}

TEST_CASE("toy problem: certified balls contain the root") {
    Gen g(4);
    int certified = 0;
    for (int trial = 0; trial < 5000; ++trial) {
        const double xh = g.uniform(1.0, 3.0);
        const double A = g.uniform(0.8, 1.2) / (2.0 * xh);
        try {
            const RadiiInterval r = radii_interval(quadratic_bounds(xh, A));
            ++certified;
            CHECK(std::fabs(xh - 2.0) <= r.r_star);
        } catch (const ValidationFailure &) {
        }
    }
    CHECK(certified > 500);
}

TEST_CASE("degenerate zero segment has rounding-level Y") {
    BranchPoint z;
    z.omega = 1.0;
    z.delta = 0.5;
    for (auto &c : z.c) c = FourierCoefficients(10);
    const Layout L(10);
    Eigen::VectorXcd t = Eigen::VectorXcd::Zero(L.N());
    t(Layout::delta) = 1.0;
    const GaugeData g = make_gauge(z, t, z);
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(L.N(), L.N());
    const RadiiBounds b = compute_bounds(z, z, g, g, fig_params(), NormWeight(1.05), {}, SegmentInverses{I, I});
    CHECK(b.Y < 1e-12);
}

TEST_CASE("plain evaluation never exceeds the interval bounds") {
    Gen g(123);
    const SystemParams p = fig_params();
    const NormWeight w(1.05);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int K = 5;
        const BranchPoint x0 = g.point(K, 0.3);
        Eigen::VectorXcd d = pack(g.point(K, 0.3));
        symmetrize(d, K);
        d /= sup_norm(d, K, w);
        const BranchPoint x1 = unpack(pack(x0) + 1e-3 * d, K);
        const GaugeData g0 = make_gauge(x0, d, x0), g1 = make_gauge(x0, d, x1);
        BoundOptions plain;
        plain.plain = true;
        RadiiBounds a, b;
        try {
            a = compute_bounds(x0, x1, g0, g1, p, w);
            b = compute_bounds(x0, x1, g0, g1, p, w, plain);
        } catch (const ValidationFailure &) {
            continue;
        }
        ++checked;
        CHECK(b.Y <= a.Y);
        CHECK(b.Z0 <= a.Z0);
        CHECK(b.Z1 <= a.Z1);
        CHECK(b.Z2 <= a.Z2);
    }
    CHECK(checked >= 90);
}

TEST_CASE("tail contribution to Z1 decreases when K doubles") {
    const Branch &br = short_branch();
    REQUIRE(br.points.size() >= 2);
    const SystemParams p = fig_params();
    const NormWeight w(1.05);
    auto z1 = [&](int K) {
        const BranchPoint a = project(br.points[0], K), b = project(br.points[1], K);
        const Eigen::VectorXcd t = project_tangent(br.tangents[0], 80, K);
        return compute_bounds(a, b, make_gauge(a, t, a), make_gauge(a, t, b), p, w).Z1;
    };
    const double coarse = z1(40), fine = z1(80);
    CHECK(fine < coarse);
}

TEST_CASE("single-point branch validates trivially") {
    Branch b;
    b.points.push_back(short_branch().points.front());
    b.tangents.push_back(short_branch().tangents.front());
    const BranchValidation v = validate_branch(b, fig_params(), NormWeight(1.05));
    CHECK(v.certificates.empty());
    CHECK(!v.failure_index);
}

TEST_CASE("branch certificates are gap-free and below the error target") {
    const Branch &b = short_branch();
    const BranchValidation v = validate_branch(b, fig_params(), NormWeight(1.05));
    REQUIRE(!v.failure_index);
    REQUIRE(v.certificates.size() >= b.points.size() - 1);
    for (std::size_t i = 0; i + 1 < v.certificates.size(); ++i) CHECK(v.certificates[i].hi == v.certificates[i + 1].lo);
    CHECK(v.certificates.front().lo == b.points.front());
    CHECK(v.certificates.back().hi == b.points.back());
    for (const auto &c : v.certificates) {
        CHECK(c.r_star <= 1e-3);
        CHECK(c.r_star <= c.r_max);
        CHECK(radii_polynomial_upper({c.Y, c.Z0, c.Z1, c.Z2}, c.r_star) < 0.0);
    }
}

TEST_CASE("corrupted branch point fails at its segment") {
    Branch b = short_branch();
    REQUIRE(b.points.size() >= 3);
    const std::size_t m = 2;
    b.points[m].c[2].set(1, b.points[m].c[2][1] + 1e-2);
    const BranchValidation v = validate_branch(b, fig_params(), NormWeight(1.05));
    REQUIRE(v.failure_index);
    CHECK(*v.failure_index == static_cast<int>(m) - 1);
}
