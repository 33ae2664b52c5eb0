#include <cmath>
#include <numbers>

#include <doctest.h>

#include "generators.hpp"
#include "nafhn/problem.hpp"

using namespace nafhn;
using nafhn::testing::Gen;

namespace {

SystemParams params(double a, double b, double eps, double delta) {
    SystemParams p;
    p.a = a;
    p.b = b;
    p.eps = eps;
    p.delta = delta;
    return p;
}

BranchPoint zero_point(int K, double omega, double delta) {
    BranchPoint x;
    x.omega = omega;
    x.delta = delta;
    for (auto &c : x.c) c = FourierCoefficients(K);
    return x;
}

double max_abs(const Eigen::VectorXcd &v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("parameter invariants") {
    CHECK_THROWS_AS(params(0, 0.5, 0.0, 0.5).validate(), std::invalid_argument);
    CHECK_THROWS_AS(params(0, -0.1, 0.1, 0.5).validate(), std::invalid_argument);
    CHECK_THROWS_AS(params(0, 0.5, 0.1, 1.5).validate(), std::invalid_argument);
    CHECK_NOTHROW(params(0, 0.5, 0.1, 1.0).validate());
}

TEST_CASE("vector field examples") {
    const ForcingSignal zero = ForcingSignal::constant(0.0);
    const auto f0 = vector_field({0.0, 0.0}, 0.0, params(0, 0.7, 0.1, 0), zero, Variant::AutonomousFhn);
    CHECK(f0[0] == 0.0);
    CHECK(f0[1] == 0.0);

    const auto f1 = vector_field({1.0, 2.0}, 0.0, params(0, 0, 1, 0.5), zero, Variant::PlanarNonautonomous);
    CHECK(f1[0] == doctest::Approx(5.0 / 3.0));
    CHECK(f1[1] == doctest::Approx(-1.0));

    // delta = 1: the x-equation sees v and not y.
    const SystemParams p1 = params(0.1, 0.5, 0.1, 1.0);
    const auto a = vector_field({0.3, -0.4, 0.8, 5.0}, 0.0, p1, zero, Variant::Coupled4d);
    const auto b = vector_field({0.3, -0.4, 0.8, -7.0}, 0.0, p1, zero, Variant::Coupled4d);
    CHECK(a[2] == doctest::Approx(-0.4 - 0.8 * 0.8 * 0.8 / 3.0 + 0.8));
    CHECK(a[2] == b[2]);

    CHECK_THROWS_AS(vector_field({0.0, 0.0, 0.0}, 0.0, p1, zero, Variant::PlanarNonautonomous), std::invalid_argument);
    CHECK_THROWS_AS(variant_from_string("five-dimensional"), std::invalid_argument);
}

TEST_CASE("the twin block of the coupled system ignores delta and forcing") {
    Gen g(3);
    const ForcingSignal v = ForcingSignal::periodic_cosine(1.0, 30.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> s{g.uniform(-2, 2), g.uniform(-2, 2), g.uniform(-2, 2), g.uniform(-2, 2)};
        const auto f = vector_field(s, g.uniform(0, 30), params(0, 0.5, 0.1, g.uniform(0, 1)), v, Variant::Coupled4d);
        const auto h = vector_field({s[0], s[1]}, 0.0, params(0, 0.5, 0.1, 0), v, Variant::AutonomousFhn);
        CHECK(f[0] == h[0]);
        CHECK(f[1] == h[1]);
    }
}

TEST_CASE("F vanishes at the origin when a = 0") {
    const auto F = F_map(zero_point(5, 1.3, 0.4), params(0, 0.5, 0.1, 0));
    for (const auto &b : F)
        for (int k = -b.order(); k <= b.order(); ++k) CHECK(b[k] == cplx(0.0, 0.0));
}

TEST_CASE("F agrees with the time-domain residual at 64 samples") {
    Gen g(41);
    const ForcingSignal none;
    for (int trial = 0; trial < 5; ++trial) {
        const BranchPoint x = g.point(4);
        const SystemParams p = params(g.uniform(-0.2, 0.2), 0.5, 0.1, x.delta);
        const auto F = F_map(x, p);
        for (int j = 0; j < 64; ++j) {
            const double t = (2.0 * std::numbers::pi / x.omega) * j / 64.0;
            std::vector<double> s(4), ds(4);
            for (int i = 0; i < 4; ++i) {
                s[i] = evaluate(x.c[i], x.omega, t);
                ds[i] = evaluate_derivative(x.c[i], x.omega, t);
            }
            const auto f = vector_field(s, t, p, none, Variant::Coupled4d);
            for (int i = 0; i < 4; ++i) CHECK(evaluate(F[i], x.omega, t) == doctest::Approx(f[i] - ds[i]).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("F preserves realness") {
    Gen g(12);
    for (int trial = 0; trial < 20; ++trial) {
        const BranchPoint x = g.point(g.integer(1, 6));
        for (const auto &b : F_map(x, params(0.1, 0.5, 0.1, 0))) CHECK(b.realness_defect() < 1e-14);
    }
}

TEST_CASE("jacobian matches central finite differences") {
    Gen g(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int K = g.integer(2, 6);
        const BranchPoint x = g.point(K);
        const BranchPoint d = g.point(K);
        const SystemParams p = params(0.05, 0.5, 0.1, 0);
        const Eigen::VectorXcd dir = pack(d);
        const double h = 1e-7;
        const BranchPoint xp = unpack(pack(x) + h * dir, K);
        const BranchPoint xm = unpack(pack(x) - h * dir, K);
        const Eigen::VectorXcd fd = (F_vector(xp, p) - F_vector(xm, p)) / (2.0 * h);
        const Eigen::VectorXcd jd = jacobian_F(x, p).matrix * dir;
        CHECK(max_abs(fd - jd) <= 1e-6 * max_abs(jd));
    }
}

TEST_CASE("jacobian structure at the origin and the delta column") {
    const int K = 3;
    const double omega = 0.7;
    const JacobianF J = jacobian_F(zero_point(K, omega, 0.3), params(0, 0.5, 0.1, 0));
    const Layout L(K);
    for (int k = -K; k <= K; ++k) {
        const int row = k + K;
        const cplx diag = J.matrix(row, L.index(0, k));
        CHECK(std::abs(diag - cplx(1.0, -omega * k)) < 1e-15);
    }
    Gen g(1);
    BranchPoint x = g.point(K);
    x.c[3] = x.c[1];
    const JacobianF Jx = jacobian_F(x, params(0, 0.5, 0.1, 0));
    CHECK(Jx.matrix.col(Layout::delta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gauge conditions") {
    Gen g(9);
    const int K = 4;
    const BranchPoint ref = g.point(K);
    Eigen::VectorXcd t = pack(g.point(K));
    symmetrize(t, K);
    t /= t.cwiseAbs().maxCoeff();
    const GaugeData gauge = make_gauge(ref, t, ref);
    const GaugeValues at_ref = gauge_conditions(ref, gauge);
    CHECK(std::fabs(at_ref.g) < 1e-13);
    CHECK(std::fabs(at_ref.h) < 1e-15);
    for (double s : {0.01, -0.3, 2.0}) {
        const BranchPoint moved = unpack(pack(ref) + s * t, K);
        CHECK(gauge_conditions(moved, gauge).h == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("singular orbit seed") {
    const SingularOrbit s = singular_orbit_seed(params(0, 0.7, 0.1, 0));
    CHECK(s.folds[0][0] == 1.0);
    CHECK(s.folds[0][1] == -2.0 / 3.0);
    CHECK(s.folds[1][0] == -1.0);
    CHECK(s.folds[1][1] == 2.0 / 3.0);
    CHECK(s.slow_period > 0.0);
    CHECK(s.period == doctest::Approx(s.slow_period / 0.1));
    const double x = -2.0, b = 0.7;
    CHECK(-x - b * (x * x * x / 3.0 - x) == doctest::Approx(2.4666666666666666));
    CHECK_THROWS_AS(singular_orbit_seed(params(0.9, 0.7, 0.1, 0)), ConditionViolated);
}

TEST_CASE("forcing signals") {
    const ForcingSignal c = ForcingSignal::periodic_cosine(1.0, 30.0);
    CHECK(c(0.0) == doctest::Approx(1.0));
    CHECK(c(15.0) == doctest::Approx(-1.0));
    const ForcingSignal q = ForcingSignal::quasi_periodic(1.0, 30.0);
    const double t = 4.2;
    CHECK(q(t) == doctest::Approx(std::cos(2 * std::numbers::pi * t / 30) +
                                  std::sin(2 * std::numbers::pi * t / (30 * std::sqrt(5.0)))));
    CHECK(q.base_period() == 0.0);
    CHECK(c.bound() >= 1.0);
    CHECK_THROWS_AS(ForcingSignal::periodic_cosine(1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(forcing_kind_from_string("square-wave"), std::invalid_argument);
}
