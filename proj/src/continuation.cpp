#include "nafhn/continuation.hpp"

#include <cmath>
#include <numbers>

#include "nafhn/dynamics.hpp"

namespace nafhn {

namespace {

Eigen::MatrixXcd system_matrix(const BranchPoint &x, const GaugeData &gauge, const SystemParams &p, NewtonMode mode) {
    const Layout L(x.order());
    const JacobianF J = jacobian_F(x, p);
    Eigen::MatrixXcd A(L.N(), L.N());
    A.topRows(4 * L.M()) = J.matrix;
    A.row(4 * L.M()) = gauge_g_row(gauge);
    if (mode == NewtonMode::Arclength) {
        A.row(4 * L.M() + 1) = gauge_h_row(gauge);
    } else {
        A.row(4 * L.M() + 1).setZero();
        A(4 * L.M() + 1, Layout::delta) = 1.0;
    }
    return A;
}

Eigen::VectorXcd system_residual(const BranchPoint &x, const GaugeData &gauge, const SystemParams &p,
                                 NewtonMode mode) {
    const Layout L(x.order());
    Eigen::VectorXcd r(L.N());
    r.head(4 * L.M()) = F_vector(x, p);
    const GaugeValues gv = gauge_conditions(x, gauge);
    r(4 * L.M()) = gv.g;
    r(4 * L.M() + 1) = mode == NewtonMode::Arclength ? gv.h : x.delta - gauge.anchor.delta;
    return r;
}

double residual_norm(const Eigen::VectorXcd &r, int K, const NormWeight &w) {
    const Layout L(K);
    double n = std::max(std::abs(r(4 * L.M())), std::abs(r(4 * L.M() + 1)));
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int k = -K; k <= K; ++k) s += std::abs(r(i * L.M() + k + K)) * w.weight(k);
        n = std::max(n, s);
    }
    return n;
}

}  // namespace

double active_residual(const BranchPoint &x, const GaugeData &gauge, const SystemParams &p, NewtonMode mode,
                       double delta0, const NormWeight &w) {
    GaugeData g = gauge;
    g.anchor.delta = delta0;
    if (mode == NewtonMode::Arclength) g.anchor = gauge.anchor;
    return residual_norm(system_residual(x, g, p, mode), x.order(), w);
}

NewtonResult newton_refine(const BranchPoint &x0, const GaugeData &gauge, const SystemParams &p, NewtonMode mode,
                           const NewtonOptions &opts) {
    x0.validate();
    const int K = x0.order();
    const NormWeight w(opts.nu);
    NewtonResult res;
    res.point = x0;
    Eigen::VectorXcd r = system_residual(res.point, gauge, p, mode);
    double rn = residual_norm(r, K, w);
    res.residuals.push_back(rn);
    int growth = 0;
    while (rn >= opts.tol) {
        if (res.iterations >= opts.max_iter)
            throw NewtonFailure(NewtonFailure::Kind::MaxIterations,
                                "Newton did not converge in " + std::to_string(opts.max_iter) + " iterations (residual " +
                                    std::to_string(rn) + ")");
        const Eigen::MatrixXcd A = system_matrix(res.point, gauge, p, mode);
        const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
        if (!(lu.rcond() > 1e-14))
            throw NewtonFailure(NewtonFailure::Kind::Singular, "Newton system is numerically singular");
        Eigen::VectorXcd v = pack(res.point) - lu.solve(r);
        symmetrize(v, K);
        res.point = unpack(v, K);
        if (!(res.point.omega > 0.0))
            throw NewtonFailure(NewtonFailure::Kind::Diverged, "Newton iterate has nonpositive frequency");
        ++res.iterations;
        r = system_residual(res.point, gauge, p, mode);
        const double next = residual_norm(r, K, w);
        if (!std::isfinite(next)) throw NewtonFailure(NewtonFailure::Kind::Diverged, "Newton residual is not finite");
        growth = next > rn ? growth + 1 : 0;
        rn = next;
        res.residuals.push_back(rn);
        if (growth >= 3) throw NewtonFailure(NewtonFailure::Kind::Diverged, "Newton residual grew three times in a row");
    }
    return res;
}

Eigen::VectorXcd tangent_vector(const BranchPoint &x, const GaugeData &gauge, const SystemParams &p,
                                const std::optional<Eigen::VectorXcd> &previous, const NormWeight &w,
                                double rank_tol) {
    const int K = x.order();
    const Layout L(K);
    Eigen::VectorXcd prev;
    if (previous) {
        prev = *previous;
    } else {
        prev = Eigen::VectorXcd::Zero(L.N());
        prev(Layout::delta) = 1.0;
    }
    Eigen::MatrixXcd A(L.N(), L.N());
    A.topRows(4 * L.M()) = jacobian_F(x, p).matrix;
    A.row(4 * L.M()) = gauge_g_row(gauge);
    A.row(4 * L.M() + 1) = prev.adjoint() / prev.squaredNorm();
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    // A one-dimensional kernel of D(F, g) is equivalent to the bordered matrix being regular.
    if (!(lu.rcond() > rank_tol))
        throw FoldSuspected("kernel of D(F, g) is not one-dimensional (bordered rcond " + std::to_string(lu.rcond()) +
                            ")");
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(L.N());
    rhs(L.N() - 1) = 1.0;
    Eigen::VectorXcd t = lu.solve(rhs);
    symmetrize(t, K);
    t /= sup_norm(t, K, w);
    if (prev.dot(t).real() < 0.0) t = -t;
    return t;
}

std::string to_string(Termination t) {
    switch (t) {
    case Termination::ReachedBound: return "reached-bound";
    case Termination::NewtonFailure: return "newton-failure";
    case Termination::StepUnderflow: return "step-underflow";
    case Termination::FoldDetected: return "fold-detected";
    }
    return "";
}

Termination termination_from_string(const std::string &s) {
    if (s == "reached-bound") return Termination::ReachedBound;
    if (s == "newton-failure") return Termination::NewtonFailure;
    if (s == "step-underflow") return Termination::StepUnderflow;
    if (s == "fold-detected") return Termination::FoldDetected;
    throw std::invalid_argument("unknown termination '" + s + "'");
}

namespace {

BranchPoint advance(const BranchPoint &x, const Eigen::VectorXcd &t, double step) {
    Eigen::VectorXcd v = pack(x) + step * t;
    symmetrize(v, x.order());
    return unpack(v, x.order());
}

}  // namespace

GaugeData segment_gauge(const Branch &branch, std::size_t i) {
    if (i + 1 >= branch.points.size()) throw std::out_of_range("segment index past the last branch point");
    const double step = branch.step_history.at(i + 1);
    return make_gauge(branch.points[i], branch.tangents[i], advance(branch.points[i], branch.tangents[i], step));
}

Branch continue_branch(const BranchPoint &start, const SystemParams &p, int direction, double delta_lo,
                       double delta_hi, const ContinuationOptions &opts) {
    if (direction != 1 && direction != -1) throw std::invalid_argument("direction must be +1 or -1");
    if (!(delta_lo <= delta_hi)) throw std::invalid_argument("delta bounds are reversed");
    const NormWeight w(opts.newton.nu);
    const int K = start.order();

    NewtonResult first;
    try {
        first = newton_refine(start, make_gauge(start), p, NewtonMode::FixedDelta, opts.newton);
    } catch (const NewtonFailure &e) {
        throw NewtonFailure(e.kind, std::string("start point does not refine: ") + e.what());
    }

    Branch br;
    BranchPoint x = first.point;
    Eigen::VectorXcd dir0 = Eigen::VectorXcd::Zero(Layout(K).N());
    dir0(Layout::delta) = direction;
    Eigen::VectorXcd t = tangent_vector(x, make_gauge(x), p, dir0, w);
    br.points.push_back(x);
    br.tangents.push_back(t);
    br.step_history.push_back(0.0);
    br.residuals.push_back(first.residuals.back());

    const double bound = direction > 0 ? delta_hi : delta_lo;
    auto at_bound = [&](double d) { return direction > 0 ? d >= bound - 1e-12 : d <= bound + 1e-12; };
    if (at_bound(x.delta)) {
        br.termination = Termination::ReachedBound;
        return br;
    }

    double step = opts.step;
    NewtonFailure::Kind last_failure = NewtonFailure::Kind::MaxIterations;
    while (static_cast<int>(br.points.size()) < opts.max_points) {
        double trial = step;
        bool clipped = false;
        const double td = t(Layout::delta).real();
        if (std::fabs(td) > 1e-12 && at_bound(x.delta + trial * td)) {
            trial = (bound - x.delta) / td;
            clipped = true;
        }
        const BranchPoint predicted = advance(x, t, trial);
        const GaugeData gauge = make_gauge(x, t, predicted);
        NewtonResult corr;
        try {
            corr = newton_refine(predicted, gauge, p, NewtonMode::Arclength, opts.newton);
        } catch (const NewtonFailure &e) {
            last_failure = e.kind;
            step = 0.5 * trial;
            if (step < opts.step_min) {
                br.termination = last_failure == NewtonFailure::Kind::Singular ? Termination::NewtonFailure
                                                                               : Termination::StepUnderflow;
                br.detail = e.what();
                return br;
            }
            continue;
        }

        Eigen::VectorXcd t_new;
        try {
            t_new = tangent_vector(corr.point, make_gauge(corr.point), p, t, w);
        } catch (const FoldSuspected &e) {
            br.termination = Termination::NewtonFailure;
            br.detail = e.what();
            return br;
        }

        x = corr.point;
        br.points.push_back(x);
        br.tangents.push_back(t_new);
        br.step_history.push_back(trial);
        br.residuals.push_back(corr.residuals.back());

        if (t_new(Layout::delta).real() * direction <= 0.0) {
            br.termination = Termination::FoldDetected;
            br.detail = "delta component of the tangent changed sign";
            return br;
        }
        t = t_new;
        if (clipped || at_bound(x.delta)) {
            br.termination = Termination::ReachedBound;
            return br;
        }
        if (corr.iterations <= opts.fast_iterations) step = std::min(trial * opts.growth, opts.step_max);
        else step = trial;
    }
    br.termination = Termination::ReachedBound;
    br.detail = "maximum number of points reached";
    return br;
}

FhnCycle fhn_cycle(const SystemParams &p, int K) {
    const ForcingSignal none;
    IntegratorOptions quiet;
    quiet.record = false;
    constexpr double tol = 1e-12;
    const Trajectory pre = integrate(Variant::AutonomousFhn, p, none, {2.0, 0.0}, 0.0, 1500.0, tol, quiet);
    if (pre.blew_up) throw IntegrationError("FHN transient blew up");

    IntegratorOptions sampled;
    sampled.sample_dt = 0.01;
    const Trajectory probe = integrate(Variant::AutonomousFhn, p, none, pre.back(), 0.0, 400.0, tol, sampled);
    double umin = 1e300, umax = -1e300;
    for (const auto &s : probe.states) {
        umin = std::min(umin, s[0]);
        umax = std::max(umax, s[0]);
    }
    if (umax - umin < 1e-3) throw IntegrationError("autonomous FHN has no oscillation to project");
    const double section = 0.5 * (umin + umax);

    // Refine the first two upward crossings by bisection on short integrations.
    std::vector<double> crossings;
    std::vector<std::vector<double>> states;
    for (std::size_t s = 1; s < probe.size() && crossings.size() < 2; ++s) {
        if (probe.states[s - 1][0] < section && probe.states[s][0] >= section) {
            double lo = 0.0, hi = probe.times[s] - probe.times[s - 1];
            std::vector<double> at = probe.states[s];
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const Trajectory leg = integrate(Variant::AutonomousFhn, p, none, probe.states[s - 1], 0.0, mid, tol, quiet);
                if (leg.back()[0] < section)
                    lo = mid;
                else {
                    hi = mid;
                    at = leg.back();
                }
            }
            crossings.push_back(probe.times[s - 1] + hi);
            states.push_back(at);
        }
    }
    if (crossings.size() < 2) throw IntegrationError("could not detect a period of the FHN cycle");
    const double T = crossings[1] - crossings[0];

    const int n = std::max(2048, 16 * K);
    IntegratorOptions grid;
    grid.sample_dt = T / n;
    const Trajectory period = integrate(Variant::AutonomousFhn, p, none, states[0], 0.0, T, tol, grid);
    std::vector<double> us(n), vs(n);
    for (int j = 0; j < n; ++j) {
        us[j] = period.states.at(j)[0];
        vs[j] = period.states.at(j)[1];
    }
    FhnCycle c;
    c.omega = 2.0 * std::numbers::pi / T;
    c.u = project_samples(us, K);
    c.v = project_samples(vs, K);
    return c;
}

BranchPoint shift_phase(const BranchPoint &x, double theta) {
    BranchPoint y = x;
    for (int i = 0; i < 4; ++i)
        for (int k = 1; k <= x.order(); ++k) {
            const double ph = k * x.omega * theta;
            y.c[i].set(k, x.c[i][k] * cplx(std::cos(ph), std::sin(ph)));
        }
    return y;
}

BranchPoint align_phase(const BranchPoint &x) {
    // dg/dtheta along the time-shift orbit is -sum k^2 c_k^2 e^{2ik phi}.
    constexpr int grid = 4096;
    double best = -1.0, best_phi = 0.0;
    for (int j = 0; j < grid; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / grid;
        double s = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int k = 1; k <= x.order(); ++k) {
                const cplx ck = x.c[i][k];
                s += 2.0 * k * k * (ck * ck * cplx(std::cos(2.0 * k * phi), std::sin(2.0 * k * phi))).real();
            }
        if (std::fabs(s) > best) {
            best = std::fabs(s);
            best_phi = phi;
        }
    }
    return shift_phase(x, best_phi / x.omega);
}

BranchPoint seed_branch_point(const SystemParams &p, double delta, int K, bool attracting, const NewtonOptions &opts) {
    const FhnCycle cyc = fhn_cycle(p, K);
    const ForcingSignal v = ForcingSignal::twin_orbit(cyc.v, cyc.omega);
    const double T = 2.0 * std::numbers::pi / cyc.omega;
    SystemParams q = p;
    q.delta = delta;
    IntegratorOptions quiet;
    quiet.record = false;
    constexpr double tol = 1e-12;
    constexpr int periods = 60;
    const int n = std::max(2048, 16 * K);
    IntegratorOptions grid;
    grid.sample_dt = T / n;

    std::vector<double> xs(n), ys(n);
    if (attracting) {
        const Trajectory pre = integrate(Variant::PlanarNonautonomous, q, v, {2.0, 0.0}, 0.0, periods * T, tol, quiet);
        if (pre.blew_up) throw IntegrationError("forced transient blew up");
        const Trajectory one = integrate(Variant::PlanarNonautonomous, q, v, pre.back(), 0.0, T, tol, grid);
        for (int j = 0; j < n; ++j) {
            xs[j] = one.states.at(j)[0];
            ys[j] = one.states.at(j)[1];
        }
    } else {
        const Trajectory pre = integrate(Variant::PlanarNonautonomous, q, v, {0.1, 0.0}, 0.0, -periods * T, tol, quiet);
        if (pre.blew_up) throw IntegrationError("backward transient blew up: no repelling orbit at this delta");
        const Trajectory one = integrate(Variant::PlanarNonautonomous, q, v, pre.front(), 0.0, -T, tol, grid);
        // one.times runs from -T to 0; sample j sits at -T + j T / n, i.e. phase j T / n.
        for (int j = 0; j < n; ++j) {
            xs[j] = one.states.at(j)[0];
            ys[j] = one.states.at(j)[1];
        }
    }
    BranchPoint x;
    x.omega = cyc.omega;
    x.delta = delta;
    x.c = {cyc.u, cyc.v, project_samples(xs, K), project_samples(ys, K)};
    x = align_phase(x);
    return newton_refine(x, make_gauge(x), q, NewtonMode::FixedDelta, opts).point;
}

}  // namespace nafhn
