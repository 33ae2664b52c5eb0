#include <algorithm>
#include <cmath>

#include "nafhn/dynamics.hpp"

namespace nafhn {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct Stepper {
    const OdeRhs &f;
    int n;
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, tmp, y1, err;
    std::vector<double> r1, r2, r3, r4, r5;

    Stepper(const OdeRhs &rhs, int dim)
        : f(rhs), n(dim), k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), tmp(dim), y1(dim),
          err(dim), r1(dim), r2(dim), r3(dim), r4(dim), r5(dim) {}

    // One trial step from (t, y) with k1 = f(t, y) already set; returns the scaled error norm.
    double attempt(double t, const std::vector<double> &y, double h, double tol) {
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        f(t + c2 * h, tmp.data(), k2.data());
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * h, tmp.data(), k3.data());
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * h, tmp.data(), k4.data());
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * h, tmp.data(), k5.data());
        for (int i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f(t + h, tmp.data(), k6.data());
        for (int i = 0; i < n; ++i)
            y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        f(t + h, y1.data(), k7.data());
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = tol + tol * std::max(std::fabs(y[i]), std::fabs(y1[i]));
            sum += (e / sc) * (e / sc);
        }
        return std::sqrt(sum / n);
    }

    void prepare_dense(const std::vector<double> &y, double h) {
        for (int i = 0; i < n; ++i) {
            r1[i] = y[i];
            r2[i] = y1[i] - y[i];
            r3[i] = h * k1[i] - r2[i];
            r4[i] = r2[i] - h * k7[i] - r3[i];
            r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
    }

    void dense(double theta, std::vector<double> &out) const {
        const double s = 1.0 - theta;
        for (int i = 0; i < n; ++i) out[i] = r1[i] + theta * (r2[i] + s * (r3[i] + theta * (r4[i] + s * r5[i])));
    }
};

double escape_norm(const std::vector<double> &y, int m) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += y[i] * y[i];
    return std::sqrt(s);
}

bool all_finite(const std::vector<double> &y) {
    return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

Trajectory integrate_system(const OdeRhs &rhs, const std::vector<double> &initial, double t0, double t1, double tol,
                            const IntegratorOptions &opts) {
    if (!(tol > 0.0)) throw std::invalid_argument("integration tolerance must be positive");
    const int n = static_cast<int>(initial.size());
    if (n == 0) throw std::invalid_argument("empty initial state");
    const int m = opts.escape_components > 0 ? std::min(opts.escape_components, n) : n;
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    const double span = std::fabs(t1 - t0);

    // Reversed time: tau = dir * (t - t0), dz/dtau = dir * f(t0 + dir tau, z).
    OdeRhs g = [&](double tau, const double *z, double *dz) {
        rhs(t0 + dir * tau, z, dz);
        if (dir < 0.0)
            for (int i = 0; i < n; ++i) dz[i] = -dz[i];
    };

    Trajectory traj;
    std::vector<double> ts;
    std::vector<std::vector<double>> ys;
    auto push = [&](double tau, const std::vector<double> &y) {
        ts.push_back(t0 + dir * tau);
        ys.push_back(y);
    };

    std::vector<double> y = initial;
    push(0.0, y);
    if (escape_norm(y, m) > opts.escape_radius) {
        traj.blew_up = true;
        traj.blowup_time = t0;
    }

    Stepper st(g, n);
    double tau = 0.0;
    std::vector<double> dense_buf(n);

    // Absolute output grid: next multiple of sample_dt strictly after t0 in the direction of travel.
    double next_sample = 0.0;
    long long sample_index = 0;
    if (opts.sample_dt > 0.0) {
        sample_index = static_cast<long long>(std::floor(dir * t0 / opts.sample_dt)) + 1;
        next_sample = sample_index * opts.sample_dt - dir * t0;  // in tau units
        if (next_sample <= 0.0) {
            ++sample_index;
            next_sample = sample_index * opts.sample_dt - dir * t0;
        }
    }

    if (span > 0.0 && !traj.blew_up) {
        g(0.0, y.data(), st.k1.data());
        double fn = 0.0, yn = 0.0;
        for (int i = 0; i < n; ++i) {
            fn = std::max(fn, std::fabs(st.k1[i]));
            yn = std::max(yn, std::fabs(y[i]));
        }
        double h = std::min({span, opts.max_step, 0.01 * std::max(yn, 1e-3) / std::max(fn, 1e-10)});
        h = std::max(h, 1e-10 * std::max(1.0, span));
        h = std::min(h, span);
        while (tau < span) {
            const double remaining = span - tau;
            bool last = false;
            if (h >= remaining) {
                h = remaining;
                last = true;
            }
            const double err = st.attempt(tau, y, h, tol);
            if (!(err <= 1.0) || !all_finite(st.y1)) {
                double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
                h *= std::min(fac, 0.9);
                if (h < 1e-14 * std::max(1.0, std::fabs(t0 + dir * tau))) {
                    if (escape_norm(y, m) > 0.5 * opts.escape_radius || !all_finite(st.y1)) {
                        traj.blew_up = true;
                        traj.blowup_time = t0 + dir * tau;
                        break;
                    }
                    throw IntegrationError("step-size underflow at t = " + std::to_string(t0 + dir * tau));
                }
                continue;
            }
            const double tau_new = last ? span : tau + h;
            const bool escaped = escape_norm(st.y1, m) > opts.escape_radius;
            const bool need_dense = opts.sample_dt > 0.0 || escaped;
            if (need_dense) st.prepare_dense(y, h);

            double crossing = tau_new;
            if (escaped) {
                // Bisection on the dense output for the escape time.
                double lo = 0.0, hi = 1.0;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    st.dense(mid, dense_buf);
                    if (escape_norm(dense_buf, m) > opts.escape_radius)
                        hi = mid;
                    else
                        lo = mid;
                }
                crossing = tau + hi * h;
            }

            if (opts.record && opts.sample_dt > 0.0) {
                while (next_sample < crossing && next_sample < span) {
                    st.dense((next_sample - tau) / h, dense_buf);
                    push(next_sample, dense_buf);
                    ++sample_index;
                    next_sample = sample_index * opts.sample_dt - dir * t0;
                }
            }

            if (escaped) {
                st.dense((crossing - tau) / h, dense_buf);
                push(crossing, dense_buf);
                traj.blew_up = true;
                traj.blowup_time = t0 + dir * crossing;
                y = dense_buf;
                tau = crossing;
                break;
            }

            y = st.y1;
            tau = tau_new;
            std::swap(st.k1, st.k7);  // FSAL
            if (opts.record && opts.sample_dt <= 0.0 && tau < span) push(tau, y);

            const double fac = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
            h = std::min(h * fac, opts.max_step);
            if (last) break;
        }
        if (!traj.blew_up) push(span, y);
    }

    if (!opts.record && ys.size() > 2) {
        ts = {ts.front(), ts.back()};
        ys = {ys.front(), ys.back()};
    }
    // Drop duplicated end samples that coincide with a grid point.
    for (std::size_t i = 1; i < ts.size();) {
        if (ts[i] == ts[i - 1]) {
            ts.erase(ts.begin() + static_cast<long>(i));
            ys.erase(ys.begin() + static_cast<long>(i));
        } else {
            ++i;
        }
    }
    if (dir < 0.0) {
        std::reverse(ts.begin(), ts.end());
        std::reverse(ys.begin(), ys.end());
    }
    traj.times = std::move(ts);
    traj.states = std::move(ys);
    return traj;
}

Trajectory integrate(Variant variant, const SystemParams &p, const ForcingSignal &v, const std::vector<double> &initial,
                     double t0, double t1, double tol, const IntegratorOptions &opts, double layered_y) {
    if (static_cast<int>(initial.size()) != state_dimension(variant))
        throw std::invalid_argument("initial state dimension does not match variant " + to_string(variant));
    OdeRhs rhs = [&](double t, const double *x, double *dx) {
        vector_field_into(x, t, p, v, variant, layered_y, dx);
    };
    return integrate_system(rhs, initial, t0, t1, tol, opts);
}

}  // namespace nafhn
