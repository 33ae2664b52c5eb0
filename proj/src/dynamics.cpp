#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "nafhn/dynamics.hpp"
#include "nafhn/interval.hpp"

namespace nafhn {

EnsembleResult pullback_ensemble(Variant variant, const SystemParams &p, const ForcingSignal &v, double t_a,
                                 double t_b, int n, const InitBox &box, double transient,
                                 const EnsembleOptions &opts) {
    if (!(t_a < t_b) && n > 1) throw std::invalid_argument("pullback window needs t_a < t_b");
    if (n < 1) throw std::invalid_argument("ensemble needs n >= 1");
    const int dim = state_dimension(variant);
    if (static_cast<int>(box.center.size()) != dim || static_cast<int>(box.half_width.size()) != dim)
        throw std::invalid_argument("initial box dimension does not match variant");
    if (opts.t_end < t_b) throw std::invalid_argument("ensemble end time precedes the start window");

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    EnsembleResult out;
    out.transient_cutoff = transient;
    IntegratorOptions io;
    io.sample_dt = opts.sample_dt;
    for (int j = 0; j < n; ++j) {
        const double t0 = n == 1 ? t_a : t_a + (t_b - t_a) * j / (n - 1);
        std::vector<double> x0(dim);
        for (int i = 0; i < dim; ++i) x0[i] = box.center[i] + box.half_width[i] * unit(rng);
        out.start_times.push_back(t0);
        Trajectory kept;
        std::string failure;
        try {
            Trajectory tr = integrate(variant, p, v, x0, t0, opts.t_end, opts.tol, io);
            kept.blew_up = tr.blew_up;
            kept.blowup_time = tr.blowup_time;
            for (std::size_t s = 0; s < tr.size(); ++s) {
                if (tr.times[s] >= transient) {
                    kept.times.push_back(tr.times[s]);
                    kept.states.push_back(tr.states[s]);
                }
            }
        } catch (const IntegrationError &e) {
            failure = e.what();
        }
        out.trajectories.push_back(std::move(kept));
        out.failures.push_back(failure);
    }
    return out;
}

double max_pairwise_distance(const EnsembleResult &e) {
    // Group samples by time (exact grid times are shared between members).
    std::map<double, std::vector<const std::vector<double> *>> by_time;
    for (const auto &tr : e.trajectories) {
        if (tr.blew_up) continue;
        for (std::size_t s = 0; s < tr.size(); ++s) by_time[tr.times[s]].push_back(&tr.states[s]);
    }
    double worst = 0.0;
    for (const auto &[t, pts] : by_time) {
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                double d = 0.0;
                for (std::size_t k = 0; k < pts[i]->size(); ++k) d = std::max(d, std::fabs((*pts[i])[k] - (*pts[j])[k]));
                worst = std::max(worst, d);
            }
    }
    return worst;
}

RepellingResult repelling_solution(Variant variant, const SystemParams &p, const ForcingSignal &v, double t_future,
                                   int n, const RepellingOptions &opts) {
    if (n < 2) throw std::invalid_argument("repelling_solution needs n >= 2");
    const int dim = state_dimension(variant);
    if (dim != 2) throw std::invalid_argument("repelling_solution expects a planar variant");
    if (!(opts.window > 0.0 && opts.duration > opts.window))
        throw std::invalid_argument("repelling window must be positive and shorter than the duration");

    const double t_end = t_future - opts.duration;
    const double t_window = t_end + opts.window;
    IntegratorOptions fast;
    fast.record = false;
    IntegratorOptions sampled;
    sampled.sample_dt = opts.sample_dt;

    RepellingResult res;
    res.total = n;
    std::vector<Trajectory> survivors;
    for (int j = 0; j < n; ++j) {
        const double th = 2.0 * std::numbers::pi * j / n;
        const std::vector<double> x0{opts.radius * std::cos(th), opts.radius * std::sin(th)};
        Trajectory leg = integrate(variant, p, v, x0, t_future, t_window, opts.tol, fast);
        if (leg.blew_up) {
            ++res.blown_up;
            continue;
        }
        Trajectory tail = integrate(variant, p, v, leg.front(), t_window, t_end, opts.tol, sampled);
        if (tail.blew_up) {
            ++res.blown_up;
            continue;
        }
        survivors.push_back(std::move(tail));
    }
    if (survivors.empty()) {
        res.outcome = RepellingOutcome::Absent;
        return res;
    }
    double spread = 0.0;
    for (std::size_t j = 1; j < survivors.size(); ++j) {
        if (survivors[j].size() != survivors[0].size())
            throw InconclusiveResult("backward trajectories were sampled inconsistently");
        for (std::size_t s = 0; s < survivors[0].size(); ++s)
            for (int k = 0; k < dim; ++k)
                spread = std::max(spread, std::fabs(survivors[j].states[s][k] - survivors[0].states[s][k]));
    }
    if (spread >= opts.agreement)
        throw InconclusiveResult("bounded backward trajectories disagree by " + std::to_string(spread) +
                                 " over the final window");
    res.outcome = RepellingOutcome::Found;
    res.solution = std::move(survivors.front());
    return res;
}

CircleBlowup circle_backward_blowup(const SystemParams &p, const ForcingSignal &v, double t_start, double radius,
                                    int n, double duration, double tol) {
    CircleBlowup out;
    out.total = n;
    IntegratorOptions io;
    io.record = false;
    for (int j = 0; j < n; ++j) {
        const double th = 2.0 * std::numbers::pi * j / n;
        const std::vector<double> x0{radius * std::cos(th), radius * std::sin(th)};
        const Trajectory tr = integrate(Variant::PlanarNonautonomous, p, v, x0, t_start, t_start - duration, tol, io);
        if (tr.blew_up) ++out.blown_up;
    }
    return out;
}

namespace {

Trajectory skewed_run(const SystemParams &p, const ForcingSignal &v, double horizon, const SkewedOptions &opts) {
    IntegratorOptions lead;
    lead.record = false;
    const std::vector<double> x0{opts.x0, p.a / p.b};
    const Trajectory pre = integrate(Variant::Skewed, p, v, x0, -horizon, opts.t_start, opts.tol, lead);
    if (pre.blew_up) throw IntegrationError("skewed pullback run blew up");
    IntegratorOptions io;
    io.sample_dt = opts.sample_dt;
    Trajectory tr = integrate(Variant::Skewed, p, v, pre.back(), opts.t_start, opts.t_end, opts.tol, io);
    if (tr.blew_up) throw IntegrationError("skewed solution blew up");
    return tr;
}

}  // namespace

SkewedSolution skewed_hyperbolic_solution(const SystemParams &p, const ForcingSignal &v, double horizon,
                                          const SkewedOptions &opts) {
    if (!(p.b > 0.0)) throw std::invalid_argument("skewed hyperbolic solution requires b > 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(opts.t_end > opts.t_start)) throw std::invalid_argument("skewed window must have t_end > t_start");

    SkewedSolution out;
    out.horizon = horizon;
    out.phi = skewed_run(p, v, horizon, opts);
    const Trajectory check = skewed_run(p, v, 2.0 * horizon, opts);
    double diff = 0.0;
    for (std::size_t s = 0; s < out.phi.size(); ++s)
        for (int k = 0; k < 2; ++k) diff = std::max(diff, std::fabs(out.phi.states[s][k] - check.states[s][k]));
    if (diff > opts.insensitivity)
        throw HorizonTooShort("pullback horizon " + std::to_string(horizon) + " too short: doubling it moves the output by " +
                              std::to_string(diff));

    // log psi(t, t0) = I(t) - I(t0) with I the running integral of 1 - phi_1^2.
    const auto &ts = out.phi.times;
    std::vector<double> I(ts.size(), 0.0);
    for (std::size_t s = 1; s < ts.size(); ++s) {
        const double f0 = 1.0 - std::pow(out.phi.states[s - 1][0], 2);
        const double f1 = 1.0 - std::pow(out.phi.states[s][0], 2);
        I[s] = I[s - 1] + 0.5 * (ts[s] - ts[s - 1]) * (f0 + f1);
    }
    const double span = ts.back() - ts.front();
    out.alpha = -(I.back() - I.front()) / span;
    double worst = 0.0, running_min = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < ts.size(); ++s) {
        const double J = I[s] + out.alpha * ts[s];
        running_min = std::min(running_min, J);
        worst = std::max(worst, J - running_min);
    }
    out.psi_bound = std::exp(worst);
    return out;
}

double radial_derivative(const SystemParams &p, double r, double theta, double delta, double v) {
    const double x = r * std::cos(theta), y = r * std::sin(theta);
    const double dx = (1.0 - delta) * y + delta * v - x * x * x / 3.0 + x;
    const double dy = p.eps * (p.a - x - p.b * y);
    return (x * dx + y * dy) / r;
}

namespace {

// Range of cos and sin over [t0, t1] (t1 - t0 < pi/2).
Interval cos_range(double t0, double t1) {
    double lo = std::min(std::cos(t0), std::cos(t1)), hi = std::max(std::cos(t0), std::cos(t1));
    for (int k = static_cast<int>(std::ceil(t0 / std::numbers::pi)); k * std::numbers::pi <= t1; ++k) {
        if (k % 2 == 0)
            hi = 1.0;
        else
            lo = -1.0;
    }
    return Interval::raw(rounding::down(lo) - 1e-15, rounding::up(hi) + 1e-15);
}

Interval sin_range(double t0, double t1) {
    return cos_range(t0 - std::numbers::pi / 2, t1 - std::numbers::pi / 2);
}

// Largest u = 1/r on a theta cell for which u^2 (Q + P u) < c4/3 holds on (0, u].
double cell_inverse_radius(const SystemParams &p, double V, double t0, double t1) {
    const Interval c = cos_range(t0, t1), s = sin_range(t0, t1);
    const Interval kappa = Interval::raw(-p.eps, 1.0 - p.eps);  // 1 - delta - eps over delta in [0,1]
    const double P = V * c.mag() + std::fabs(p.a) * p.eps * s.mag();
    const double Q = (sqr(c) - p.eps * p.b * sqr(s) + kappa * (s * c)).hi();
    const double c4 = std::pow(c.mig(), 4) / 3.0;
    if (c4 <= 0.0) {
        if (Q >= 0.0) return 0.0;  // no admissible radius on this cell at this resolution
        return P > 0.0 ? -Q / P : std::numeric_limits<double>::infinity();
    }
    auto g = [&](double u) { return u * u * (Q + P * u) - c4; };
    double hi = 1.0;
    while (g(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e12) return std::numeric_limits<double>::infinity();
    }
    // g < 0 at small u; the first crossing is the unique positive root.
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

double cell_radius(const SystemParams &p, double V, double t0, double t1, int depth) {
    const double u = cell_inverse_radius(p, V, t0, t1);
    if (u > 0.0) return 1.0 / u;
    if (depth > 40) throw std::domain_error("trapping radius refinement did not terminate");
    const double m = 0.5 * (t0 + t1);
    return std::max(cell_radius(p, V, t0, m, depth + 1), cell_radius(p, V, m, t1, depth + 1));
}

}  // namespace

double trapping_radius(const SystemParams &p, double forcing_bound) {
    p.validate();
    if (!(forcing_bound >= 0.0)) throw std::invalid_argument("forcing bound must be nonnegative");
    if (!(p.b > 0.0))
        throw std::domain_error("no trapping radius: with b = 0 the radial derivative does not become negative on the y-axis");
    constexpr int cells = 4096;
    double rbar = 0.0;
    for (int j = 0; j < cells; ++j) {
        const double t0 = 2.0 * std::numbers::pi * j / cells;
        const double t1 = 2.0 * std::numbers::pi * (j + 1) / cells;
        rbar = std::max(rbar, cell_radius(p, forcing_bound, t0, t1, 0));
    }
    return rbar * (1.0 + 1e-9);
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)), m_(x_.size(), 0.0) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("spline needs at least two matching nodes");
    if (n == 2) return;
    // Natural spline second derivatives via the tridiagonal (Thomas) solve.
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
        a[i] = h0 / 6.0;
        b[i] = (h0 + h1) / 3.0;
        c[i] = h1 / 6.0;
        d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
}

double CubicSpline::operator()(double t) const {
    const std::size_t n = x_.size();
    std::size_t i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin());
    i = std::clamp<std::size_t>(i, 1, n - 1);
    const double h = x_[i] - x_[i - 1];
    const double A = (x_[i] - t) / h, B = (t - x_[i - 1]) / h;
    return A * y_[i - 1] + B * y_[i] + ((A * A * A - A) * m_[i - 1] + (B * B * B - B) * m_[i]) * h * h / 6.0;
}

double layered_mean(const SystemParams &p, const ForcingSignal &v, double y, const AveragingOptions &opts) {
    IntegratorOptions io;
    io.record = false;
    const double start = 6.0 + std::fabs(y);
    const Trajectory up = integrate(Variant::ScalarLayered, p, v, {start}, -opts.pullback_horizon, 0.0, opts.tol, io, y);
    const Trajectory dn = integrate(Variant::ScalarLayered, p, v, {-start}, -opts.pullback_horizon, 0.0, opts.tol, io, y);
    if (up.blew_up || dn.blew_up) throw IntegrationError("layered equation blew up");
    const double gap = std::fabs(up.back()[0] - dn.back()[0]);
    if (gap > opts.uniqueness_tol)
        throw NonUniqueAttractor("layered equation at y = " + std::to_string(y) +
                                     " has distinct attractors (pullback runs differ by " + std::to_string(gap) + ")",
                                 y);

    const double period = v.base_period();
    const double window = period > 0.0 ? opts.window_periods * period : opts.window_quasi;
    // Augmented state (x, running integral of x).
    OdeRhs rhs = [&](double t, const double *s, double *ds) {
        vector_field_into(s, t, p, v, Variant::ScalarLayered, y, ds);
        ds[1] = s[0];
    };
    IntegratorOptions aug;
    aug.record = false;
    aug.escape_components = 1;
    const Trajectory avg = integrate_system(rhs, {up.back()[0], 0.0}, 0.0, window, opts.tol, aug);
    return avg.back()[1] / window;
}

AveragedFlow averaged_slow_flow(const SystemParams &p, const ForcingSignal &v, double y_lo, double y_hi, double y0,
                                double tau_end, const AveragingOptions &opts) {
    p.validate();
    if (!(y_lo < y_hi)) throw std::invalid_argument("y range must be nonempty");
    if (opts.grid_points < 2) throw std::invalid_argument("averaging grid needs at least two points");
    if (!(y0 >= y_lo && y0 <= y_hi)) throw std::invalid_argument("y0 lies outside the tabulated range");
    AveragedFlow out;
    for (int j = 0; j < opts.grid_points; ++j) {
        const double y = y_lo + (y_hi - y_lo) * j / (opts.grid_points - 1);
        out.y_grid.push_back(y);
        out.mean_x.push_back(layered_mean(p, v, y, opts));
    }
    const CubicSpline m(out.y_grid, out.mean_x);
    OdeRhs rhs = [&](double, const double *s, double *ds) {
        if (s[0] < y_lo - 1e-9 || s[0] > y_hi + 1e-9)
            throw std::domain_error("averaged trajectory left the tabulated y range");
        ds[0] = p.a - p.b * s[0] - m(s[0]);
    };
    IntegratorOptions io;
    io.sample_dt = opts.sample_dtau;
    out.slow = integrate_system(rhs, {y0}, 0.0, tau_end, opts.tol, io);
    return out;
}

}  // namespace nafhn
