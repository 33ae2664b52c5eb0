#include "nafhn/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

namespace nafhn {

namespace {

// Real-valued evaluation of selected coefficient blocks at time t.
class OrbitEvaluator {
public:
    OrbitEvaluator(const BranchPoint &x, std::vector<int> blocks) : omega_(x.omega), blocks_(std::move(blocks)) {
        for (int b : blocks_) {
            const auto &c = x.c[b];
            std::vector<cplx> half(c.order() + 1);
            for (int k = 0; k <= c.order(); ++k) half[k] = c[k];
            coeffs_.push_back(std::move(half));
        }
    }
    int dim() const { return static_cast<int>(blocks_.size()); }
    double period() const { return 2.0 * std::numbers::pi / omega_; }
    void operator()(double t, double *out) const {
        const cplx z = std::polar(1.0, omega_ * t);
        for (std::size_t b = 0; b < coeffs_.size(); ++b) {
            const auto &c = coeffs_[b];
            double sum = c[0].real();
            cplx p(1.0, 0.0);
            for (std::size_t k = 1; k < c.size(); ++k) {
                p *= z;
                sum += 2.0 * (c[k] * p).real();
            }
            out[b] = sum;
        }
    }

private:
    double omega_;
    std::vector<int> blocks_;
    std::vector<std::vector<cplx>> coeffs_;
};

std::vector<int> blocks_for(Variant variant) {
    switch (variant) {
    case Variant::AutonomousFhn:
        return {0, 1};
    case Variant::PlanarNonautonomous:
    case Variant::Skewed:
        return {2, 3};
    case Variant::Coupled4d:
        return {0, 1, 2, 3};
    case Variant::ScalarLayered:
        break;
    }
    throw std::invalid_argument("variant " + to_string(variant) + " has no periodic-orbit representation");
}

// Carried state (m components) plus fundamental matrix and divergence integral.
using AugmentedFn = std::function<void(double t, const double *state, double *dstate, Eigen::MatrixXd &J)>;

// The first `discard` time units only align Q and are not averaged.
SpectrumEstimate qr_core(const AugmentedFn &f, int m, std::vector<double> state, int n, double t0, double horizon,
                         double renorm, double tol, double discard = 0.0) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (!(renorm > 0.0)) throw std::invalid_argument("renormalization interval must be positive");
    Eigen::MatrixXd Jm(n, n);
    const OdeRhs rhs = [&](double t, const double *y, double *dy) {
        f(t, y, dy, Jm);
        const Eigen::Map<const Eigen::MatrixXd> Y(y + m, n, n);
        Eigen::Map<Eigen::MatrixXd> D(dy + m, n, n);
        D.noalias() = Jm * Y;
        dy[m + n * n] = Jm.trace();
    };
    IntegratorOptions io;
    io.record = false;
    io.escape_radius = std::numeric_limits<double>::infinity();

    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
    std::vector<double> sums(n, 0.0);
    double divergence = 0.0;
    const long skip = discard > 0.0 ? static_cast<long>(std::ceil(discard / renorm - 1e-9)) : 0;
    t0 -= static_cast<double>(skip) * renorm;
    const double end = t0 + static_cast<double>(skip) * renorm + horizon;
    const long steps = skip + std::max(1L, static_cast<long>(std::ceil(horizon / renorm - 1e-9)));
    std::vector<double> y(m + n * n + 1);
    for (long i = 0; i < steps; ++i) {
        const double ta = t0 + static_cast<double>(i) * renorm;
        const double tb = i + 1 == steps ? end : t0 + static_cast<double>(i + 1) * renorm;
        std::copy(state.begin(), state.end(), y.begin());
        std::copy(Q.data(), Q.data() + n * n, y.begin() + m);
        y[m + n * n] = 0.0;
        const Trajectory tr = integrate_system(rhs, y, ta, tb, tol, io);
        const std::vector<double> &yb = tr.back();
        for (int j = 0; j < m; ++j) {
            if (!std::isfinite(yb[j])) throw LyapunovError("orbit blew up");
        }
        double norm = 0.0;
        for (int j = 0; j < m; ++j) norm += yb[j] * yb[j];
        if (std::sqrt(norm) > 1e3) throw LyapunovError("orbit blew up");
        std::copy(yb.begin(), yb.begin() + m, state.begin());
        if (i >= skip) divergence += yb[m + n * n];
        const Eigen::Map<const Eigen::MatrixXd> Y(yb.data() + m, n, n);
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
        const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int j = 0; j < n; ++j) {
            const double r = std::fabs(R(j, j));
            if (!(r > 0.0) || !std::isfinite(r)) throw LyapunovError("degenerate R diagonal in QR step");
            if (i >= skip) sums[j] += std::log(r);
        }
        Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    }
    SpectrumEstimate out;
    for (double s : sums) out.exponents.push_back(s / horizon);
    std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
    out.horizon = horizon;
    out.renorm_interval = renorm;
    out.mean_divergence = divergence / horizon;
    return out;
}

SystemParams at_delta(const SystemParams &p, double delta) {
    SystemParams q = p;
    q.delta = delta;
    return q;
}

}  // namespace

SpectrumEstimate qr_spectrum(const VariationalFn &J, int dim, double t0, double horizon, double renorm_interval,
                             double tol) {
    if (dim <= 0) throw std::invalid_argument("dimension must be positive");
    const AugmentedFn f = [&](double t, const double *, double *, Eigen::MatrixXd &Jm) { J(t, Jm); };
    SpectrumEstimate out = qr_core(f, 0, {}, dim, t0, horizon, renorm_interval, tol);
    out.reference = "linear system";
    return out;
}

SpectrumEstimate lyapunov_spectrum(Variant variant, const SystemParams &p, const BranchPoint &orbit,
                                   const LyapunovOptions &opts) {
    orbit.validate();
    if (opts.n_periods <= 0) throw std::invalid_argument("n_periods must be positive");
    if (opts.warmup_periods < 0) throw std::invalid_argument("warmup_periods must be non-negative");
    const SystemParams q = at_delta(p, orbit.delta);
    const OrbitEvaluator ev(orbit, blocks_for(variant));
    const int n = ev.dim();
    const double T = ev.period();
    const double horizon = opts.n_periods * T;
    const double renorm = opts.renorm_interval.value_or(T / 100.0);
    std::vector<double> s(n);
    const AugmentedFn f = [&](double t, const double *, double *, Eigen::MatrixXd &Jm) {
        ev(t, s.data());
        Jm = variational_matrix(s.data(), t, q, variant);
    };
    const double warmup = opts.warmup_periods * T;
    SpectrumEstimate out = qr_core(f, 0, {}, n, 0.0, horizon, renorm, opts.tol, warmup);
    std::ostringstream ref;
    ref << to_string(variant) << " periodic orbit, delta=" << orbit.delta << ", T=" << T << ", K=" << orbit.order();
    out.reference = ref.str();
    if (variant == Variant::Coupled4d) {
        const OrbitEvaluator xy(orbit, {2, 3});
        std::array<double, 2> st{};
        const AugmentedFn g = [&](double t, const double *, double *, Eigen::MatrixXd &Jm) {
            xy(t, st.data());
            Jm = variational_matrix(st.data(), t, q, Variant::PlanarNonautonomous);
        };
        out.block_exponents = qr_core(g, 0, {}, 2, 0.0, horizon, renorm, opts.tol, warmup).exponents;
    }
    return out;
}

SpectrumEstimate lyapunov_spectrum(Variant variant, const SystemParams &p, const ForcingSignal &v,
                                   const std::vector<double> &initial, double t0, double period,
                                   const LyapunovOptions &opts, double layered_y) {
    const int n = state_dimension(variant);
    if (static_cast<int>(initial.size()) != n) throw std::invalid_argument("initial state has wrong dimension");
    if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
    if (opts.n_periods <= 0) throw std::invalid_argument("n_periods must be positive");
    const double horizon = opts.n_periods * period;
    const double renorm = opts.renorm_interval.value_or(period / 100.0);
    const AugmentedFn f = [&](double t, const double *x, double *dx, Eigen::MatrixXd &Jm) {
        vector_field_into(x, t, p, v, variant, layered_y, dx);
        Jm = variational_matrix(x, t, p, variant);
    };
    SpectrumEstimate out = qr_core(f, n, initial, n, t0, horizon, renorm, opts.tol);
    out.reference = to_string(variant) + " trajectory";
    return out;
}

FloquetResult floquet_multipliers(const VariationalFn &J, int dim, double period, double tol) {
    if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
    Eigen::MatrixXd Jm(dim, dim);
    const OdeRhs rhs = [&](double t, const double *y, double *dy) {
        J(t, Jm);
        const Eigen::Map<const Eigen::MatrixXd> Y(y, dim, dim);
        Eigen::Map<Eigen::MatrixXd> D(dy, dim, dim);
        D.noalias() = Jm * Y;
    };
    IntegratorOptions io;
    io.record = false;
    io.escape_radius = std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
    const std::vector<double> y0(I.data(), I.data() + dim * dim);
    const Trajectory tr = integrate_system(rhs, y0, 0.0, period, tol, io);
    const Eigen::Map<const Eigen::MatrixXd> M(tr.back().data(), dim, dim);
    const Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    if (es.info() != Eigen::Success) throw LyapunovError("eigenvalue computation did not converge");
    FloquetResult out;
    out.period = period;
    for (int i = 0; i < dim; ++i) out.multipliers.push_back(es.eigenvalues()(i));
    std::sort(out.multipliers.begin(), out.multipliers.end(),
              [](const cplx &a, const cplx &b) { return std::abs(a) > std::abs(b); });
    for (const cplx &mu : out.multipliers) out.exponents.push_back(std::log(std::abs(mu)) / period);
    return out;
}

FloquetResult floquet_multipliers(Variant variant, const SystemParams &p, const BranchPoint &orbit, double max_defect,
                                  double tol) {
    orbit.validate();
    const SystemParams q = at_delta(p, orbit.delta);
    const double defect = collocation_defect(orbit, q);
    if (!(defect < max_defect)) {
        std::ostringstream msg;
        msg << "orbit defect " << defect << " exceeds " << max_defect;
        throw LyapunovError(msg.str());
    }
    if (variant == Variant::Coupled4d) {
        // Block lower-triangular: the twin block drives (x, y) but not conversely, so the
        // monodromy spectrum is the union of the two diagonal blocks. Splitting avoids
        // losing the contracting multipliers next to expanding ones of size e^{lambda T}.
        FloquetResult out = floquet_multipliers(Variant::AutonomousFhn, q, orbit, max_defect, tol);
        const FloquetResult xy = floquet_multipliers(Variant::PlanarNonautonomous, q, orbit, max_defect, tol);
        out.multipliers.insert(out.multipliers.end(), xy.multipliers.begin(), xy.multipliers.end());
        std::sort(out.multipliers.begin(), out.multipliers.end(),
                  [](const cplx &a, const cplx &b) { return std::abs(a) > std::abs(b); });
        out.exponents.clear();
        for (const cplx &mu : out.multipliers) out.exponents.push_back(std::log(std::abs(mu)) / out.period);
        out.divergence_exponent.reset();
        return out;
    }
    const OrbitEvaluator ev(orbit, blocks_for(variant));
    const int n = ev.dim();
    std::vector<double> s(n);
    const VariationalFn J = [&](double t, Eigen::MatrixXd &Jm) {
        ev(t, s.data());
        Jm = variational_matrix(s.data(), t, q, variant);
    };
    FloquetResult out = floquet_multipliers(J, n, ev.period(), tol);
    if (variant == Variant::AutonomousFhn) {
        const int samples = 4096;
        const double T = ev.period();
        Eigen::MatrixXd Jm(n, n);
        double sum = 0.0;
        for (int i = 0; i < samples; ++i) {
            J(T * i / samples, Jm);
            sum += Jm.trace();
        }
        out.divergence_exponent = sum / samples;
    }
    return out;
}

BranchPoint cycle_as_branch_point(const FhnCycle &cycle) {
    BranchPoint x;
    x.omega = cycle.omega;
    x.delta = 0.0;
    x.c = {cycle.u, cycle.v, cycle.u, cycle.v};
    return x;
}

DecayFit fit_triangular_decay(const Trajectory &phi, const SystemParams &p, double t0_stride) {
    const std::size_t n = phi.size();
    if (n < 8) throw std::invalid_argument("trajectory too short for a decay fit");
    const double h = (phi.times.back() - phi.times.front()) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        const double d = phi.times[i] - phi.times[i - 1];
        if (std::fabs(d - h) > 1e-6 * h) throw std::invalid_argument("decay fit needs uniformly sampled phi");
    }
    // I(t) = integral of (1 - phi_1^2)
    std::vector<double> I(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double a = phi.states[i - 1][0], b = phi.states[i][0];
        I[i] = I[i - 1] + 0.5 * h * ((1.0 - a * a) + (1.0 - b * b));
    }
    const double be = p.b * p.eps;
    const double decay_step = std::exp(-be * h);
    const std::size_t lag_max = (n - 1) / 2;
    const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t0_stride / h)));
    std::vector<double> env(lag_max + 1, 0.0);
    for (std::size_t i0 = 0; i0 + lag_max < n; i0 += stride) {
        double c = 0.0, eta = 1.0, psi_prev = 1.0;
        env[0] = std::max(env[0], 1.0);
        for (std::size_t lag = 1; lag <= lag_max; ++lag) {
            const double psi = std::exp(I[i0 + lag] - I[i0]);
            c = decay_step * c - p.eps * 0.5 * h * (decay_step * psi_prev + psi);
            eta *= decay_step;
            psi_prev = psi;
            env[lag] = std::max(env[lag], std::max(psi, std::fabs(c) + eta));
        }
    }
    const std::size_t l1 = lag_max / 2, l2 = lag_max;
    DecayFit fit;
    fit.decay = -(std::log(env[l2]) - std::log(env[l1])) / (static_cast<double>(l2 - l1) * h);
    fit.K = 0.0;
    for (std::size_t lag = 0; lag <= lag_max; ++lag)
        fit.K = std::max(fit.K, env[lag] * std::exp(fit.decay * static_cast<double>(lag) * h));
    return fit;
}

HyperbolicityCertificate hyperbolicity_certificate(const SkewedSolution &phi, const SystemParams &p) {
    if (!(p.b > 0.0)) throw std::invalid_argument("hyperbolicity certificate needs b > 0");
    HyperbolicityCertificate out;
    out.alpha = phi.alpha;
    out.b_eps = p.b * p.eps;
    if (!(out.b_eps < phi.alpha)) {
        std::ostringstream msg;
        msg << "smallness condition violated: b*eps = " << out.b_eps << " is not below alpha = " << phi.alpha;
        throw SmallnessViolated(msg.str());
    }
    const DecayFit fit = fit_triangular_decay(phi.phi, p);
    out.K = fit.K;
    out.decay = fit.decay;
    if (!(fit.decay > 0.0)) throw HyperbolicityFailure("fitted decay is not positive (not attracting)", fit.decay);
    if (fit.decay < out.b_eps * (1.0 - 1e-3)) {
        std::ostringstream msg;
        msg << "fitted decay " << fit.decay << " below b*eps = " << out.b_eps;
        throw HyperbolicityFailure(msg.str(), fit.decay);
    }
    return out;
}

}  // namespace nafhn
