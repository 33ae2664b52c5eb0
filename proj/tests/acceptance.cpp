// Acceptance criteria; prints one PASS/FAIL line per criterion and exits nonzero on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "generators.hpp"
#include "nafhn/dynamics.hpp"
#include "nafhn/interval.hpp"
#include "nafhn/lyapunov.hpp"
#include "nafhn/pipeline.hpp"

using namespace nafhn;
using nafhn::testing::Gen;
using quad = __float128;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

SystemParams params(double a, double b, double eps, double delta) {
    SystemParams p;
    p.a = a;
    p.b = b;
    p.eps = eps;
    p.delta = delta;
    return p;
}

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Branches {
    BranchRun stable, unstable;
};

const Branches &figure5() {
    static const Branches b = [] {
        const SystemParams p = params(0.0, 0.5, 0.1, 0.0);
        Branches out;
        out.stable = continue_and_validate(p, 0.9, true, 0.0);
        out.unstable = continue_and_validate(p, 0.1, false, 1.0);
        return out;
    }();
    return b;
}

std::string describe(const BranchRun &r) {
    return fmt("end %.4f (%s, %zu points, %zu certificates)", r.termination_delta, r.termination_reason.c_str(),
               r.branch.points.size(), r.validation.certificates.size());
}

Outcome criterion1() {
    const Branches &b = figure5();
    const bool s = std::fabs(b.stable.termination_delta - 0.2563) <= 0.05;
    const bool u = std::fabs(b.unstable.termination_delta - 0.6101) <= 0.05;
    return {s && u, "stable " + describe(b.stable) + " target 0.2563; unstable " + describe(b.unstable) +
                        " target 0.6101; tolerance 0.05"};
}

Outcome criterion2() {
    const Branches &b = figure5();
    double worst = 0.0;
    std::size_t n = 0;
    for (const BranchRun *r : {&b.stable, &b.unstable})
        for (const auto &c : r->validation.certificates) {
            worst = std::max(worst, c.r_star);
            ++n;
        }
    return {n > 0 && worst <= 1e-3, fmt("%zu certificates, max r* = %.3e, limit 1e-3", n, worst)};
}

Outcome criterion3() {
    const Branches &b = figure5();
    const auto &s = b.stable.validation, &u = b.unstable.validation;
    if (s.certificates.empty() || u.certificates.empty()) return {false, "a branch carries no certificates"};
    const double s_lo = std::min(s.delta_begin, s.delta_end), s_hi = std::max(s.delta_begin, s.delta_end);
    const double u_lo = std::min(u.delta_begin, u.delta_end), u_hi = std::max(u.delta_begin, u.delta_end);
    const double lo = std::max(s_lo, u_lo), hi = std::min(s_hi, u_hi);
    const double len = std::max(0.0, hi - lo);
    return {len >= 0.3, fmt("stable [%.4f, %.4f], unstable [%.4f, %.4f], overlap %.4f, required 0.3", s_lo, s_hi, u_lo,
                            u_hi, len)};
}

Outcome criterion4() {
    const Branches &b = figure5();
    const SystemParams p = params(0.0, 0.5, 0.1, 0.0);
    std::ostringstream detail;
    bool pass = true;
    for (const BranchRun *r : {&b.stable, &b.unstable}) {
        const bool stable = r == &b.stable;
        const auto &v = r->validation;
        if (v.certificates.empty()) return {false, "a branch carries no certificates"};
        const double lo = std::min(v.delta_begin, v.delta_end), hi = std::max(v.delta_begin, v.delta_end);
        const int stride = std::max<int>(1, static_cast<int>(r->branch.points.size()) / 12);
        const auto samples = branch_spectra(r->branch, p, stride, lo, hi);
        const int expected = stable ? 0 : 1;
        int bad = 0;
        double first_bad = 0.0;
        double max_top = -1e300, max_second = -1e300;
        for (const auto &s : samples) {
            max_top = std::max(max_top, s.spectrum.exponents[0]);
            max_second = std::max(max_second, s.spectrum.exponents[1]);
            if (count_above(s.spectrum, 1e-2) != expected) {
                if (!bad) first_bad = s.delta;
                ++bad;
            }
        }
        pass = pass && !samples.empty() && bad == 0;
        detail << (stable ? "stable" : "unstable") << ": " << samples.size() << " spectra on [" << lo << ", " << hi
               << "], max le1 " << max_top << ", max le2 " << max_second << ", " << bad << " with count != "
               << expected;
        if (bad) detail << " (first at delta " << first_bad << ")";
        detail << (stable ? "; " : "");
    }
    return {pass, detail.str()};
}

Outcome criterion5() {
    const SystemParams base = params(0.0, 0.4, 0.1, 0.0);
    const ForcingSignal v = ForcingSignal::periodic_cosine(1.0, 30.0);
    std::ostringstream detail;
    bool pass = true;
    for (double d : {0.1, 0.6, 0.72}) {
        SystemParams p = base;
        p.delta = d;
        const CircleBlowup c = circle_backward_blowup(p, v, 66.7, 0.3, 50, 300.0);
        std::string rep;
        bool found = false, absent = false;
        try {
            const RepellingResult r = repelling_solution(Variant::PlanarNonautonomous, p, v, 20100.0, 20);
            found = r.outcome == RepellingOutcome::Found;
            absent = r.outcome == RepellingOutcome::Absent;
            rep = found ? "found" : "absent";
        } catch (const InconclusiveResult &e) {
            rep = "inconclusive";
        }
        const double f = c.fraction();
        bool ok = false;
        if (d == 0.1) ok = found && f == 0.0;
        if (d == 0.6) ok = found && f > 0.0 && f < 1.0;
        if (d == 0.72) ok = absent && f == 1.0;
        pass = pass && ok;
        detail << "delta " << d << ": blow-up " << c.blown_up << "/" << c.total << ", repelling " << rep
               << (d == 0.72 ? "" : "; ");
    }
    return {pass, detail.str()};
}

Outcome criterion6() {
    const SystemParams p = params(0.0, 0.7, 0.1, 1.0);
    const double tau = 30.0;
    SkewedOptions o;
    o.t_end = 300.0;
    const SkewedSolution phi = skewed_hyperbolic_solution(p, ForcingSignal::periodic_cosine(1.0, tau), 400.0, o);
    double ratio = 0.0;
    std::string cert;
    try {
        const HyperbolicityCertificate c = hyperbolicity_certificate(phi, p);
        ratio = c.decay / c.b_eps;
        cert = fmt("decay %.6f = (1 %+.1e) b*eps, K %.3f, alpha %.3f", c.decay, ratio - 1.0, c.K, c.alpha);
    } catch (const std::exception &e) {
        cert = std::string("certificate failed: ") + e.what();
    }
    const double dt = phi.phi.times[1] - phi.phi.times[0];
    const auto shift = static_cast<std::size_t>(std::llround(tau / dt));
    double drift = 0.0;
    for (std::size_t i = 0; i + shift < phi.phi.size(); ++i)
        drift = std::max(drift, std::fabs(phi.phi.states[i + shift][1] - phi.phi.states[i][1]));
    // The decay of the dominant entry is exactly b*eps; the upper end allows for rounding in the log-slope fit.
    const bool pass = ratio >= 0.9 && ratio <= 1.0 + 1e-12 && drift < 1e-8;
    return {pass, cert + fmt("; phi_2 period drift %.2e", drift)};
}

FourierCoefficients brute_convolve(const FourierCoefficients &c, const FourierCoefficients &d) {
    const int K = c.order() + d.order();
    std::vector<cplx> out(2 * K + 1);
    for (int i = -c.order(); i <= c.order(); ++i)
        for (int j = -d.order(); j <= d.order(); ++j) out[i + j + K] += c[i] * d[j];
    return FourierCoefficients::from_entries(out);
}

bool encloses(const Interval &r, quad exact) { return quad(r.lo()) <= exact && exact <= quad(r.hi()); }

Outcome criterion7() {
    std::ostringstream detail;
    bool pass = true;
    auto record = [&](const std::string &name, bool ok, const std::string &info) {
        pass = pass && ok;
        detail << name << (ok ? " ok" : " FAILED") << " (" << info << "); ";
    };

    Gen g(2024);
    int mismatches = 0;
    for (int t = 0; t < 200; ++t) {
        const FourierCoefficients c = g.sequence(g.integer(0, 8)), d = g.sequence(g.integer(0, 8));
        if (!(convolve(c, d) == brute_convolve(c, d))) ++mismatches;
    }
    record("convolution", mismatches == 0, fmt("%d/200 mismatches", mismatches));

    double worst_rel = 0.0;
    for (int t = 0; t < 20; ++t) {
        const int K = g.integer(2, 6);
        const BranchPoint x = g.point(K);
        const Eigen::VectorXcd dir = pack(g.point(K));
        const SystemParams p = params(0.05, 0.5, 0.1, 0.0);
        const double h = 1e-7;
        const Eigen::VectorXcd fd =
            (F_vector(unpack(pack(x) + h * dir, K), p) - F_vector(unpack(pack(x) - h * dir, K), p)) / (2.0 * h);
        const Eigen::VectorXcd jd = jacobian_F(x, p).matrix * dir;
        worst_rel = std::max(worst_rel, (fd - jd).cwiseAbs().maxCoeff() / jd.cwiseAbs().maxCoeff());
    }
    record("jacobian", worst_rel <= 1e-6, fmt("max rel error %.2e", worst_rel));

    int escapes = 0;
    for (int t = 0; t < 100000; ++t) {
        const Interval a = Interval::hull(g.uniform(-1e3, 1e3), g.uniform(-1e3, 1e3));
        const Interval b = Interval::hull(g.uniform(-1e3, 1e3), g.uniform(-1e3, 1e3));
        const Interval c = Interval::hull(g.uniform(0.1, 10.0), g.uniform(0.1, 10.0));
        const double x = std::clamp(a.lo() + g.uniform(0, 1) * (a.hi() - a.lo()), a.lo(), a.hi());
        const double y = std::clamp(b.lo() + g.uniform(0, 1) * (b.hi() - b.lo()), b.lo(), b.hi());
        const double z = std::clamp(c.lo() + g.uniform(0, 1) * (c.hi() - c.lo()), c.lo(), c.hi());
        escapes += !encloses(a + b, quad(x) + quad(y));
        escapes += !encloses(a - b, quad(x) - quad(y));
        escapes += !encloses(a * b, quad(x) * quad(y));
        escapes += !encloses(a / c, quad(x) / quad(z));
    }
    record("interval", escapes == 0, fmt("%d escapes in 4x1e5 samples", escapes));

    const Eigen::Matrix2d L = Eigen::Vector2d(-1.0, -2.0).asDiagonal();
    const SpectrumEstimate qr = qr_spectrum([&](double, Eigen::MatrixXd &J) { J = L; }, 2, 0.0, 50.0, 0.5);
    const double qr_err = std::max(std::fabs(qr.exponents[0] + 1.0), std::fabs(qr.exponents[1] + 2.0));
    record("qr", qr_err <= 1e-6, fmt("error %.2e", qr_err));

    const SystemParams fhn = params(0.0, 0.7, 0.1, 0.0);
    const FloquetResult f =
        floquet_multipliers(Variant::AutonomousFhn, fhn, cycle_as_branch_point(fhn_cycle(fhn, 80)));
    const double mu_err = std::abs(f.multipliers[0] - 1.0);
    record("floquet", mu_err <= 1e-4, fmt("|mu - 1| = %.2e", mu_err));

    const double r = trapping_radius(fhn, 1.0);
    int violations = 0;
    for (int t = 0; t < 10000; ++t)
        violations += radial_derivative(fhn, r * (1.0 + 4.0 * g.uniform(0, 1)), g.uniform(0, 2 * std::numbers::pi),
                                        g.uniform(0, 1), g.uniform(-1, 1)) >= 0.0;
    record("trapping", violations == 0, fmt("radius %.3f, %d/10000 violations", r, violations));
    std::string s = detail.str();
    return {pass, s.substr(0, s.size() - 2)};
}

Outcome criterion8() {
    const SystemParams p = params(0.0, 0.7, 1e-3, 0.9);
    const ForcingSignal v = ForcingSignal::periodic_cosine(1.0, 30.0);
    const double tau_end = 2.0, y0 = 0.8;
    const AveragedFlow f = averaged_slow_flow(p, v, -1.2, 1.2, y0, tau_end);
    std::vector<double> ys;
    for (const auto &s : f.slow.states) ys.push_back(s[0]);
    const CubicSpline slow(f.slow.times, ys);
    IntegratorOptions io;
    io.sample_dt = 1.0;
    const Trajectory full =
        integrate(Variant::PlanarNonautonomous, p, v, {0.0, y0}, 0.0, tau_end / p.eps, 1e-10, io);
    if (full.blew_up) return {false, "full system blew up"};
    double worst = 0.0;
    for (std::size_t i = 0; i < full.size(); ++i) {
        const double tau = full.times[i] * p.eps;
        if (tau >= 0.1) worst = std::max(worst, std::fabs(full.states[i][1] - slow(tau)));
    }
    return {worst <= 0.05, fmt("sup |y - y_avg| on [0.1, 2] = %.4f, limit 0.05", worst)};
}

}  // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                            criterion5, criterion6, criterion7, criterion8};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception &e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %zu: %s  %s  [%.0f s]\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
