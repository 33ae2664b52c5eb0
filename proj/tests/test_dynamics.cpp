#include <algorithm>
#include <cmath>
#include <numbers>

#include <doctest.h>

#include "generators.hpp"
#include "nafhn/dynamics.hpp"

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

double linear_error(double tol) {
    const OdeRhs rhs = [](double, const double *x, double *dx) { dx[0] = -x[0]; };
    const Trajectory tr = integrate_system(rhs, {1.0}, 0.0, 1.0, tol);
    return std::fabs(tr.back()[0] - std::exp(-1.0));
}

void check_increasing(const Trajectory &tr) {
    for (std::size_t i = 1; i < tr.size(); ++i) REQUIRE(tr.times[i] > tr.times[i - 1]);
}

// Upward zero crossings of component 0, linearly interpolated.
std::vector<double> upward_crossings(const Trajectory &tr, double after) {
    std::vector<double> out;
    for (std::size_t i = 1; i < tr.size(); ++i) {
        const double a = tr.states[i - 1][0], b = tr.states[i][0];
        if (tr.times[i] > after && a < 0.0 && b >= 0.0)
            out.push_back(tr.times[i - 1] + (tr.times[i] - tr.times[i - 1]) * (-a) / (b - a));
    }
    return out;
}

// Stable root of y - x^3/3 + x = 0 on the branch selected by the sign of y.
double layered_root(double y) {
    double x = y > 0 ? 3.0 : -3.0;
    for (int i = 0; i < 100; ++i) x -= (y - x * x * x / 3.0 + x) / (1.0 - x * x);
    return x;
}

}  // namespace

TEST_CASE("linear decay reaches exp(-1)") {
    for (double tol : {1e-6, 1e-8, 1e-10}) CHECK(linear_error(tol) <= 10.0 * tol);
}

TEST_CASE("integrator error shrinks with the tolerance") {
    double prev = linear_error(1e-5);
    for (double tol : {1e-7, 1e-9, 1e-11}) {
        const double e = linear_error(tol);
        CHECK(e < prev);
        prev = e;
    }
}

TEST_CASE("forward then backward integration returns to the start") {
    Gen g(9);
    const SystemParams p = params(0.0, 0.7, 0.1, 0.0);
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<double> x0{g.uniform(-2, 2), g.uniform(-1, 1)};
        const double tol = 1e-10;
        IntegratorOptions io;
        io.record = false;
        const Trajectory fwd = integrate(Variant::AutonomousFhn, p, ForcingSignal{}, x0, 0.0, 1.0, tol, io);
        const Trajectory bwd = integrate(Variant::AutonomousFhn, p, ForcingSignal{}, fwd.back(), 1.0, 0.0, tol, io);
        REQUIRE(!bwd.blew_up);
        // Backward trajectories are stored in increasing time, so the end state comes first.
        CHECK(std::fabs(bwd.front()[0] - x0[0]) < 100 * tol);
        CHECK(std::fabs(bwd.front()[1] - x0[1]) < 100 * tol);
    }
}

TEST_CASE("sampled trajectories sit on the absolute grid with increasing times") {
    IntegratorOptions io;
    io.sample_dt = 0.25;
    const Trajectory tr = integrate(Variant::AutonomousFhn, params(0, 0.7, 0.1, 0), ForcingSignal{}, {2.0, 0.0}, 0.1,
                                    3.0, 1e-10, io);
    check_increasing(tr);
    CHECK(tr.times.front() == 0.1);
    CHECK(tr.times.back() == 3.0);
    CHECK(tr.times[1] == doctest::Approx(0.25));
}

TEST_CASE("autonomous FHN settles on a closed orbit") {
    IntegratorOptions io;
    io.sample_dt = 1e-3;
    const Trajectory tr = integrate(Variant::AutonomousFhn, params(0, 0.7, 0.1, 0), ForcingSignal{}, {2.0, 0.0}, 0.0,
                                    300.0, 1e-11, io);
    REQUIRE(!tr.blew_up);
    const std::vector<double> c = upward_crossings(tr, 100.0);
    REQUIRE(c.size() >= 3);
    const double T1 = c[c.size() - 2] - c[c.size() - 3], T2 = c.back() - c[c.size() - 2];
    CHECK(std::fabs(T1 - T2) < 1e-4);
}

TEST_CASE("backward blow-up from the circle at delta = 0.72") {
    const CircleBlowup c =
        circle_backward_blowup(params(0, 0.4, 0.1, 0.72), ForcingSignal::periodic_cosine(1, 30), 66.7, 0.3, 12, 300.0);
    CHECK(c.total == 12);
    CHECK(c.blown_up == 12);
    IntegratorOptions io;
    const Trajectory tr = integrate(Variant::PlanarNonautonomous, params(0, 0.4, 0.1, 0.72),
                                    ForcingSignal::periodic_cosine(1, 30), {0.3, 0.0}, 66.7, -300.0, 1e-9, io);
    CHECK(tr.blew_up);
    CHECK(tr.blowup_time < 66.7);
    CHECK(tr.blowup_time > -300.0);
}

TEST_CASE("pullback ensemble collapses at delta = 1") {
    EnsembleOptions o;
    o.t_end = 100.0;
    o.sample_dt = 0.5;
    const EnsembleResult e = pullback_ensemble(Variant::PlanarNonautonomous, params(0, 0.7, 0.1, 1.0),
                                               ForcingSignal::quasi_periodic(1, 30), -200.0, -100.0, 20,
                                               {{0.0, 0.0}, {2.0, 2.0}}, 50.0, o);
    REQUIRE(e.trajectories.size() == 20);
    for (const auto &tr : e.trajectories) {
        CHECK(!tr.blew_up);
        check_increasing(tr);
        CHECK(tr.times.front() >= e.transient_cutoff);
    }
    CHECK(max_pairwise_distance(e) < 1e-3);
}

TEST_CASE("pullback ensemble keeps a band at delta = 0.1") {
    EnsembleOptions o;
    o.t_end = 150.0;
    o.sample_dt = 0.5;
    const EnsembleResult e = pullback_ensemble(Variant::PlanarNonautonomous, params(0, 0.4, 0.1, 0.1),
                                               ForcingSignal::periodic_cosine(1, 30), -200.0, 50.0, 30,
                                               {{0.0, 0.0}, {2.0, 2.0}}, 50.0, o);
    for (const auto &tr : e.trajectories)
        if (!tr.times.empty()) CHECK(tr.times.front() >= 50.0);
    CHECK(max_pairwise_distance(e) > 0.1);
}

TEST_CASE("single-member ensemble equals a truncated integration") {
    const SystemParams p = params(0, 0.4, 0.1, 0.3);
    const ForcingSignal v = ForcingSignal::periodic_cosine(1, 30);
    EnsembleOptions o;
    o.t_end = 40.0;
    o.sample_dt = 0.5;
    const EnsembleResult e =
        pullback_ensemble(Variant::PlanarNonautonomous, p, v, -10.0, 0.0, 1, {{0.5, -0.2}, {0.0, 0.0}}, 5.0, o);
    IntegratorOptions io;
    io.sample_dt = 0.5;
    const Trajectory tr = integrate(Variant::PlanarNonautonomous, p, v, {0.5, -0.2}, -10.0, 40.0, o.tol, io);
    REQUIRE(e.trajectories.size() == 1);
    const Trajectory &m = e.trajectories[0];
    std::size_t j = 0;
    while (tr.times[j] < 5.0) ++j;
    REQUIRE(m.size() == tr.size() - j);
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(m.times[i] == tr.times[i + j]);
        CHECK(m.states[i] == tr.states[i + j]);
    }
}

TEST_CASE("ensemble argument checks") {
    EnsembleOptions o;
    o.t_end = 10.0;
    const InitBox box{{0.0, 0.0}, {1.0, 1.0}};
    const SystemParams p = params(0, 0.4, 0.1, 0.3);
    CHECK_THROWS_AS(pullback_ensemble(Variant::PlanarNonautonomous, p, ForcingSignal{}, 0.0, -1.0, 3, box, 0.0, o),
                    std::invalid_argument);
    CHECK_THROWS_AS(pullback_ensemble(Variant::PlanarNonautonomous, p, ForcingSignal{}, -1.0, 0.0, 0, box, 0.0, o),
                    std::invalid_argument);
}

TEST_CASE("repelling solution: found, absent, equilibrium") {
    RepellingOptions o;
    o.duration = 2000.0;
    SUBCASE("delta = 0.1 has a repelling solution") {
        const RepellingResult r = repelling_solution(Variant::PlanarNonautonomous, params(0, 0.4, 0.1, 0.1),
                                                     ForcingSignal::periodic_cosine(1, 30), 2100.0, 6, o);
        CHECK(r.outcome == RepellingOutcome::Found);
        CHECK(r.blown_up < r.total);
        CHECK(r.solution.size() > 2);
    }
    SUBCASE("delta = 0.72 has none") {
        const RepellingResult r = repelling_solution(Variant::PlanarNonautonomous, params(0, 0.4, 0.1, 0.72),
                                                     ForcingSignal::periodic_cosine(1, 30), 2100.0, 6, o);
        CHECK(r.outcome == RepellingOutcome::Absent);
        CHECK(r.blown_up == r.total);
    }
    SUBCASE("autonomous system converges to the origin backward") {
        o.duration = 500.0;
        const RepellingResult r =
            repelling_solution(Variant::AutonomousFhn, params(0, 0.4, 0.1, 0.0), ForcingSignal{}, 0.0, 4, o);
        REQUIRE(r.outcome == RepellingOutcome::Found);
        for (const auto &s : r.solution.states) {
            CHECK(std::fabs(s[0]) < 1e-6);
            CHECK(std::fabs(s[1]) < 1e-6);
        }
    }
    CHECK_THROWS_AS(repelling_solution(Variant::AutonomousFhn, params(0, 0.4, 0.1, 0.0), ForcingSignal{}, 0.0, 1, o),
                    std::invalid_argument);
}

TEST_CASE("skewed solution with zero forcing sits at the cubic root") {
    SkewedOptions o;
    o.t_end = 50.0;
    const SystemParams p = params(0, 0.7, 0.1, 1.0);
    const SkewedSolution s = skewed_hyperbolic_solution(p, ForcingSignal::constant(0.0), 400.0, o);
    for (const auto &st : s.phi.states) {
        CHECK(st[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-9));
        CHECK(st[1] == doctest::Approx(-std::sqrt(3.0) / 0.7).epsilon(1e-7));
    }
    CHECK(s.alpha == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("skewed solution is periodic under periodic forcing") {
    const double tau = 30.0;
    SkewedOptions o;
    o.t_end = 4 * tau;
    o.sample_dt = 0.05;
    const SkewedSolution s = skewed_hyperbolic_solution(params(0, 0.7, 0.1, 1.0), ForcingSignal::periodic_cosine(1, tau),
                                                        400.0, o);
    const std::size_t shift = static_cast<std::size_t>(std::lround(tau / o.sample_dt));
    double worst = 0.0;
    for (std::size_t i = 0; i + shift < s.phi.size(); ++i) {
        REQUIRE(s.phi.times[i + shift] == doctest::Approx(s.phi.times[i] + tau));
        worst = std::max(worst, std::fabs(s.phi.states[i + shift][1] - s.phi.states[i][1]));
    }
    CHECK(worst < 1e-8);
    CHECK(s.alpha > 0.0);
    CHECK(s.psi_bound >= 1.0);
    CHECK_THROWS_AS(skewed_hyperbolic_solution(params(0, 0.7, 0.1, 1.0), ForcingSignal::periodic_cosine(1, tau), 5.0, o),
                    HorizonTooShort);
    CHECK_THROWS_AS(skewed_hyperbolic_solution(params(0, 0.0, 0.1, 1.0), ForcingSignal::constant(0.0), 100.0, o),
                    std::invalid_argument);
}

TEST_CASE("trapping radius holds on random samples") {
    Gen g(31);
    for (const SystemParams &p : {params(0, 0.7, 0.1, 0), params(0.3, 0.4, 0.1, 0), params(-0.5, 1.5, 0.01, 0)}) {
        const double V = 1.0;
        const double r = trapping_radius(p, V);
        int violations = 0;
        for (int i = 0; i < 10000; ++i) {
            const double rr = r * (1.0 + std::pow(g.uniform(0, 1), 3) * 10.0);
            if (radial_derivative(p, rr, g.uniform(0, 2 * std::numbers::pi), g.uniform(0, 1), g.uniform(-V, V)) >= 0.0)
                ++violations;
        }
        CHECK(violations == 0);
    }
}

TEST_CASE("trapping radius is monotone in the forcing bound") {
    const SystemParams p = params(0, 0.7, 0.1, 0);
    double prev = 0.0;
    for (double V : {0.0, 0.5, 1.0, 2.0, 5.0}) {
        const double r = trapping_radius(p, V);
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("ensemble members enter and stay in the trapping ball") {
    const SystemParams p = params(0, 0.7, 0.1, 0.5);
    const ForcingSignal v = ForcingSignal::periodic_cosine(1, 30);
    const double r = trapping_radius(p, v.bound());
    EnsembleOptions o;
    o.t_end = 100.0;
    o.sample_dt = 0.1;
    const EnsembleResult e = pullback_ensemble(Variant::PlanarNonautonomous, p, v, -100.0, -50.0, 10,
                                               {{0.0, 0.0}, {4.0, 4.0}}, -100.0, o);
    for (const auto &tr : e.trajectories) {
        bool inside = false;
        for (const auto &s : tr.states) {
            const bool in = std::hypot(s[0], s[1]) <= r;
            if (inside) CHECK(in);
            inside = inside || in;
        }
        CHECK(inside);
    }
}

TEST_CASE("layered mean with constant forcing matches the cubic root") {
    const SystemParams p = params(0, 0.7, 0.1, 0.0);
    for (double y : {-2.5, -1.0, 0.9, 1.7, 3.0}) CHECK(std::fabs(layered_mean(p, ForcingSignal::constant(0.0), y) - layered_root(y)) < 1e-6);
    CHECK_THROWS_AS(layered_mean(p, ForcingSignal::constant(0.0), 0.0), NonUniqueAttractor);
}

TEST_CASE("averaged flow with constant forcing follows the root oracle") {
    const SystemParams p = params(0.1, 0.7, 1e-3, 0.0);
    AveragingOptions o;
    o.grid_points = 41;
    const AveragedFlow f = averaged_slow_flow(p, ForcingSignal::constant(0.0), 1.0, 3.0, 2.8, 0.3, o);
    const OdeRhs oracle = [&](double, const double *y, double *dy) { dy[0] = p.a - p.b * y[0] - layered_root(y[0]); };
    IntegratorOptions io;
    io.sample_dt = o.sample_dtau;
    const Trajectory ref = integrate_system(oracle, {2.8}, 0.0, 0.3, 1e-12, io);
    REQUIRE(ref.size() == f.slow.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::fabs(ref.states[i][0] - f.slow.states[i][0]) < 1e-6);
}

TEST_CASE("layered mean is odd in y under odd forcing") {
    const SystemParams p = params(0, 0.0, 0.1, 0.9);
    const ForcingSignal v = ForcingSignal::periodic_cosine(1, 30);
    for (double y : {0.3, 0.8, 1.2}) CHECK(std::fabs(layered_mean(p, v, y) + layered_mean(p, v, -y)) < 1e-4);
}

TEST_CASE("cubic spline interpolates and reproduces lines") {
    std::vector<double> x, y;
    for (int i = 0; i <= 10; ++i) {
        x.push_back(0.1 * i);
        y.push_back(2.0 * x.back() - 1.0);
    }
    const CubicSpline s(x, y);
    for (double t : {0.0, 0.05, 0.37, 0.999}) CHECK(s(t) == doctest::Approx(2.0 * t - 1.0).epsilon(1e-13));
}
