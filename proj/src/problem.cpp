#include "nafhn/problem.hpp"

#include <cmath>
#include <numbers>

namespace nafhn {

void SystemParams::validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!(b >= 0.0)) throw std::invalid_argument("b must be nonnegative");
    if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in [0, 1]");
    if (!std::isfinite(a)) throw std::invalid_argument("a must be finite");
}

std::string to_string(ForcingKind kind) {
    switch (kind) {
    case ForcingKind::PeriodicCosine: return "periodic-cosine";
    case ForcingKind::QuasiPeriodicTwoTone: return "quasi-periodic-two-tone";
    case ForcingKind::TwinFhnOrbit: return "twin-fhn-orbit";
    case ForcingKind::Constant: return "constant";
    }
    return "constant";
}

ForcingKind forcing_kind_from_string(const std::string &name) {
    if (name == "periodic-cosine") return ForcingKind::PeriodicCosine;
    if (name == "quasi-periodic-two-tone") return ForcingKind::QuasiPeriodicTwoTone;
    if (name == "twin-fhn-orbit") return ForcingKind::TwinFhnOrbit;
    if (name == "constant") return ForcingKind::Constant;
    throw std::invalid_argument("unknown forcing kind '" + name + "'");
}

ForcingSignal ForcingSignal::constant(double value) {
    ForcingSignal f;
    f.kind = ForcingKind::Constant;
    f.amplitude = value;
    return f;
}

ForcingSignal ForcingSignal::periodic_cosine(double amplitude, double period) {
    ForcingSignal f;
    f.kind = ForcingKind::PeriodicCosine;
    f.amplitude = amplitude;
    f.period = period;
    f.validate();
    return f;
}

ForcingSignal ForcingSignal::quasi_periodic(double amplitude, double period) {
    ForcingSignal f;
    f.kind = ForcingKind::QuasiPeriodicTwoTone;
    f.amplitude = amplitude;
    f.period = period;
    f.validate();
    return f;
}

ForcingSignal ForcingSignal::twin_orbit(FourierCoefficients v, double omega) {
    ForcingSignal f;
    f.kind = ForcingKind::TwinFhnOrbit;
    f.orbit = std::move(v);
    f.omega = omega;
    f.period = 2.0 * std::numbers::pi / omega;
    f.validate();
    return f;
}

double ForcingSignal::operator()(double t) const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    switch (kind) {
    case ForcingKind::PeriodicCosine: return amplitude * std::cos(two_pi * t / period);
    case ForcingKind::QuasiPeriodicTwoTone:
        return amplitude * (std::cos(two_pi * t / period) + std::sin(two_pi * t / (period * std::sqrt(5.0))));
    case ForcingKind::TwinFhnOrbit: return evaluate_complex(orbit, omega, t).real();
    case ForcingKind::Constant: return amplitude;
    }
    return 0.0;
}

double ForcingSignal::bound() const {
    switch (kind) {
    case ForcingKind::PeriodicCosine: return std::fabs(amplitude);
    case ForcingKind::QuasiPeriodicTwoTone: return 2.0 * std::fabs(amplitude);
    case ForcingKind::TwinFhnOrbit: {
        double s = 0.0;
        for (const auto &z : orbit.entries()) s += std::abs(z);
        return s;
    }
    case ForcingKind::Constant: return std::fabs(amplitude);
    }
    return 0.0;
}

double ForcingSignal::base_period() const {
    switch (kind) {
    case ForcingKind::PeriodicCosine: return period;
    case ForcingKind::TwinFhnOrbit: return 2.0 * std::numbers::pi / omega;
    default: return 0.0;
    }
}

void ForcingSignal::validate() const {
    if ((kind == ForcingKind::PeriodicCosine || kind == ForcingKind::QuasiPeriodicTwoTone) && !(period > 0.0))
        throw std::invalid_argument("forcing period must be positive");
    if (kind == ForcingKind::TwinFhnOrbit) {
        if (!(omega > 0.0)) throw std::invalid_argument("twin-fhn-orbit forcing needs omega > 0");
        if (orbit.realness_defect() > 1e-12) throw std::invalid_argument("twin-fhn-orbit coefficients are not real");
    }
    if (!std::isfinite(amplitude)) throw std::invalid_argument("forcing amplitude must be finite");
}

std::string to_string(Variant v) {
    switch (v) {
    case Variant::PlanarNonautonomous: return "planar-nonautonomous";
    case Variant::AutonomousFhn: return "autonomous-fhn";
    case Variant::Skewed: return "skewed";
    case Variant::Coupled4d: return "coupled-4d";
    case Variant::ScalarLayered: return "scalar-layered";
    }
    return "";
}

Variant variant_from_string(const std::string &name) {
    if (name == "planar-nonautonomous") return Variant::PlanarNonautonomous;
    if (name == "autonomous-fhn") return Variant::AutonomousFhn;
    if (name == "skewed") return Variant::Skewed;
    if (name == "coupled-4d") return Variant::Coupled4d;
    if (name == "scalar-layered") return Variant::ScalarLayered;
    throw std::invalid_argument("unknown variant '" + name + "'");
}

int state_dimension(Variant v) {
    switch (v) {
    case Variant::Coupled4d: return 4;
    case Variant::ScalarLayered: return 1;
    default: return 2;
    }
}

namespace {
inline double cubic(double x) { return -x * x * x / 3.0 + x; }
}  // namespace

void vector_field_into(const double *s, double t, const SystemParams &p, const ForcingSignal &v, Variant variant,
                       double layered_y, double *out) {
    switch (variant) {
    case Variant::PlanarNonautonomous:
        out[0] = (1.0 - p.delta) * s[1] + p.delta * v(t) + cubic(s[0]);
        out[1] = p.eps * (p.a - s[0] - p.b * s[1]);
        return;
    case Variant::AutonomousFhn:
        out[0] = s[1] + cubic(s[0]);
        out[1] = p.eps * (p.a - s[0] - p.b * s[1]);
        return;
    case Variant::Skewed:
        out[0] = v(t) + cubic(s[0]);
        out[1] = p.eps * (p.a - s[0] - p.b * s[1]);
        return;
    case Variant::Coupled4d:
        out[0] = s[1] + cubic(s[0]);
        out[1] = p.eps * (p.a - s[0] - p.b * s[1]);
        out[2] = (1.0 - p.delta) * s[3] + p.delta * s[1] + cubic(s[2]);
        out[3] = p.eps * (p.a - s[2] - p.b * s[3]);
        return;
    case Variant::ScalarLayered:
        out[0] = (1.0 - p.delta) * layered_y + p.delta * v(t) + cubic(s[0]);
        return;
    }
    throw std::invalid_argument("unknown variant");
}

std::vector<double> vector_field(const std::vector<double> &state, double t, const SystemParams &p,
                                 const ForcingSignal &v, Variant variant, double layered_y) {
    const int n = state_dimension(variant);
    if (static_cast<int>(state.size()) != n)
        throw std::invalid_argument("state dimension " + std::to_string(state.size()) + " does not match variant " +
                                    to_string(variant));
    std::vector<double> out(n);
    vector_field_into(state.data(), t, p, v, variant, layered_y, out.data());
    return out;
}

Eigen::MatrixXd variational_matrix(const double *s, double /*t*/, const SystemParams &p, Variant variant) {
    const int n = state_dimension(variant);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    switch (variant) {
    case Variant::PlanarNonautonomous:
        J << 1.0 - s[0] * s[0], 1.0 - p.delta, -p.eps, -p.eps * p.b;
        break;
    case Variant::AutonomousFhn:
        J << 1.0 - s[0] * s[0], 1.0, -p.eps, -p.eps * p.b;
        break;
    case Variant::Skewed:
        J << 1.0 - s[0] * s[0], 0.0, -p.eps, -p.eps * p.b;
        break;
    case Variant::Coupled4d:
        J(0, 0) = 1.0 - s[0] * s[0];
        J(0, 1) = 1.0;
        J(1, 0) = -p.eps;
        J(1, 1) = -p.eps * p.b;
        J(2, 1) = p.delta;
        J(2, 2) = 1.0 - s[2] * s[2];
        J(2, 3) = 1.0 - p.delta;
        J(3, 2) = -p.eps;
        J(3, 3) = -p.eps * p.b;
        break;
    case Variant::ScalarLayered:
        J(0, 0) = 1.0 - s[0] * s[0];
        break;
    }
    return J;
}

void BranchPoint::validate() const {
    if (!(omega > 0.0)) throw std::invalid_argument("branch point needs omega > 0");
    const int K = c[0].order();
    for (const auto &ci : c) {
        if (ci.order() != K) throw std::invalid_argument("coefficient blocks must share one order");
        if (ci.realness_defect() > 1e-12) throw std::invalid_argument("coefficient block violates realness");
    }
}

Eigen::VectorXcd pack(const BranchPoint &x) {
    const Layout L(x.order());
    Eigen::VectorXcd v(L.N());
    v(Layout::omega) = x.omega;
    v(Layout::delta) = x.delta;
    for (int i = 0; i < 4; ++i) {
        if (x.c[i].order() != L.K) throw std::invalid_argument("coefficient blocks must share one order");
        for (int k = -L.K; k <= L.K; ++k) v(L.index(i, k)) = x.c[i][k];
    }
    return v;
}

void symmetrize(Eigen::VectorXcd &v, int K) {
    const Layout L(K);
    v(Layout::omega) = v(Layout::omega).real();
    v(Layout::delta) = v(Layout::delta).real();
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k <= K; ++k) {
            const cplx a = v(L.index(i, k)), b = v(L.index(i, -k));
            const cplx m = 0.5 * (a + std::conj(b));
            v(L.index(i, k)) = m;
            v(L.index(i, -k)) = std::conj(m);
        }
    }
}

BranchPoint unpack(const Eigen::VectorXcd &v, int K) {
    const Layout L(K);
    if (v.size() != L.N()) throw std::invalid_argument("unknown vector has the wrong length");
    BranchPoint x;
    x.omega = v(Layout::omega).real();
    x.delta = v(Layout::delta).real();
    for (int i = 0; i < 4; ++i) {
        std::vector<cplx> e(L.M());
        for (int k = -K; k <= K; ++k) e[k + K] = v(L.index(i, k));
        x.c[i] = FourierCoefficients::from_entries(std::move(e));
    }
    return x;
}

double sup_norm(const Eigen::VectorXcd &v, int K, const NormWeight &w) {
    const Layout L(K);
    double n = std::max(std::abs(v(Layout::omega)), std::abs(v(Layout::delta)));
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int k = -K; k <= K; ++k) s += std::abs(v(L.index(i, k))) * w.weight(k);
        n = std::max(n, s);
    }
    return n;
}

double sup_norm(const BranchPoint &x, const NormWeight &w) {
    double n = std::max(std::fabs(x.omega), std::fabs(x.delta));
    for (const auto &ci : x.c) n = std::max(n, ell1_norm(ci, w));
    return n;
}

namespace {

// -i omega K c
FourierCoefficients rotate(const FourierCoefficients &c, double omega) {
    FourierCoefficients out(c.order());
    for (int k = 1; k <= c.order(); ++k) out.set(k, cplx(0.0, -omega * k) * c[k]);
    return out;
}

FourierCoefficients constant_mode(int order, double value) {
    FourierCoefficients out(order);
    out.set(0, value);
    return out;
}

}  // namespace

std::array<FourierCoefficients, 4> F_map(const BranchPoint &x, const SystemParams &p) {
    const int K = x.order();
    const int K3 = 3 * K;
    const auto &[c1, c2, c3, c4] = x.c;
    const double d = x.delta;
    std::array<FourierCoefficients, 4> out;

    const FourierCoefficients u3 = convolve(convolve(c1, c1), c1);
    const FourierCoefficients x3 = convolve(convolve(c3, c3), c3);

    out[0] = (rotate(c1, x.omega) + c2 + c1).project(K3) - (1.0 / 3.0) * u3;
    out[1] = (rotate(c2, x.omega) + p.eps * (constant_mode(K, p.a) - c1 - p.b * c2)).project(K3);
    out[2] = (rotate(c3, x.omega) + (1.0 - d) * c4 + d * c2 + c3).project(K3) - (1.0 / 3.0) * x3;
    out[3] = (rotate(c4, x.omega) + p.eps * (constant_mode(K, p.a) - c3 - p.b * c4)).project(K3);
    return out;
}

Eigen::VectorXcd F_vector(const BranchPoint &x, const SystemParams &p) {
    const int K = x.order();
    const Layout L(K);
    const auto blocks = F_map(x, p);
    Eigen::VectorXcd r(4 * L.M());
    for (int i = 0; i < 4; ++i)
        for (int k = -K; k <= K; ++k) r(i * L.M() + k + K) = blocks[i][k];
    return r;
}

JacobianF jacobian_F(const BranchPoint &x, const SystemParams &p) {
    const int K = x.order();
    const Layout L(K);
    const int M = L.M();
    JacobianF J{Eigen::MatrixXcd::Zero(4 * M, L.N()), L, convolve(x.c[0], x.c[0]), convolve(x.c[2], x.c[2])};
    auto &A = J.matrix;
    const double d = x.delta;
    const cplx one(1.0);

    for (int i = 0; i < 4; ++i)
        for (int k = -K; k <= K; ++k) A(i * M + k + K, Layout::omega) = cplx(0.0, -k) * x.c[i][k];
    for (int k = -K; k <= K; ++k) A(2 * M + k + K, Layout::delta) = x.c[1][k] - x.c[3][k];

    for (int k = -K; k <= K; ++k) {
        const int r = k + K;
        const cplx rot(0.0, -x.omega * k);
        // block row 1
        A(r, L.index(0, k)) += rot + one;
        A(r, L.index(1, k)) += one;
        // block row 2
        A(M + r, L.index(0, k)) += -p.eps;
        A(M + r, L.index(1, k)) += rot - p.eps * p.b;
        // block row 3
        A(2 * M + r, L.index(1, k)) += d;
        A(2 * M + r, L.index(2, k)) += rot + one;
        A(2 * M + r, L.index(3, k)) += 1.0 - d;
        // block row 4
        A(3 * M + r, L.index(2, k)) += -p.eps;
        A(3 * M + r, L.index(3, k)) += rot - p.eps * p.b;
        for (int j = -K; j <= K; ++j) {
            A(r, L.index(0, j)) -= J.square_u[k - j];
            A(2 * M + r, L.index(2, j)) -= J.square_x[k - j];
        }
    }
    return J;
}

GaugeData make_gauge(const BranchPoint &reference) {
    GaugeData g;
    g.reference = reference;
    cplx beta = 0.0;
    for (int i = 0; i < 4; ++i) {
        g.reference_derivative[i] = derivative_modes(reference.c[i]);
        beta -= inner_product(reference.c[i], g.reference_derivative[i]);
    }
    g.beta = beta.real();
    g.anchor = reference;
    g.tangent = Eigen::VectorXcd::Zero(Layout(reference.order()).N());
    g.tangent(Layout::delta) = 1.0;
    return g;
}

GaugeData make_gauge(const BranchPoint &reference, const Eigen::VectorXcd &tangent, const BranchPoint &anchor) {
    GaugeData g = make_gauge(reference);
    g.tangent = tangent;
    g.anchor = anchor;
    return g;
}

Eigen::RowVectorXcd gauge_g_row(const GaugeData &gauge) {
    const Layout L(gauge.reference.order());
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(L.N());
    for (int i = 0; i < 4; ++i)
        for (int k = -L.K; k <= L.K; ++k) row(L.index(i, k)) = gauge.reference_derivative[i][k];
    return row;
}

Eigen::RowVectorXcd gauge_h_row(const GaugeData &gauge) {
    const double n2 = gauge.tangent.squaredNorm();
    if (!(n2 > 0.0)) throw std::invalid_argument("gauge tangent is zero");
    return gauge.tangent.adjoint() / n2;
}

GaugeValues gauge_conditions(const BranchPoint &x, const GaugeData &gauge) {
    cplx g = gauge.beta;
    for (int i = 0; i < 4; ++i) g += inner_product(x.c[i], gauge.reference_derivative[i]);
    const Eigen::VectorXcd diff = pack(x) - pack(gauge.anchor);
    const cplx h = gauge_h_row(gauge) * diff;
    return {g.real(), h.real()};
}

SingularOrbit singular_orbit_seed(const SystemParams &p) {
    p.validate();
    SingularOrbit s;
    const double edge = 1.0 - 2.0 * p.b / 3.0;
    if (!(std::fabs(p.a) < edge))
        throw ConditionViolated("genericity condition failed: |a| < 1 - 2b/3 does not hold");
    if (p.a - edge == 0.0 || p.a + edge == 0.0)
        throw ConditionViolated("genericity condition failed: a -/+ (1 - 2b/3) vanishes");
    s.report.push_back("genericity: a - 1 + 2b/3 = " + std::to_string(p.a - edge) +
                       ", a + 1 - 2b/3 = " + std::to_string(p.a + edge));

    auto numerator = [&](double x) { return p.a - x - p.b * (x * x * x / 3.0 - x); };
    for (int j = 1; j <= 400; ++j) {
        const double x = 1.0 + 0.01 * j;
        if (!(numerator(x) < 0.0))
            throw ConditionViolated("slow-flow sign condition failed at x = " + std::to_string(x));
        if (!(numerator(-x) > 0.0))
            throw ConditionViolated("slow-flow sign condition failed at x = " + std::to_string(-x));
    }
    s.report.push_back("slow-flow sign condition holds on |x| in (1, 5]");

    s.folds = {{{1.0, -2.0 / 3.0}, {-1.0, 2.0 / 3.0}}};
    s.jump_targets = {{{-2.0, -2.0 / 3.0}, {2.0, 2.0 / 3.0}}};

    auto on_manifold = [](double x) { return std::array<double, 2>{x, x * x * x / 3.0 - x}; };
    constexpr int n = 200;
    for (int j = 0; j <= n; ++j) {
        const double x = 2.0 - static_cast<double>(j) / n;
        s.right_arc.push_back(on_manifold(x));
        s.left_arc.push_back(on_manifold(-x));
    }

    // Slow time dtau = (x^2 - 1) / numerator dx along each arc (composite Simpson).
    auto arc_time = [&](double from, double to) {
        constexpr int m = 2000;
        const double h = (to - from) / m;
        auto f = [&](double x) { return (x * x - 1.0) / numerator(x); };
        double sum = f(from) + f(to);
        for (int j = 1; j < m; ++j) sum += (j % 2 ? 4.0 : 2.0) * f(from + j * h);
        return sum * h / 3.0;
    };
    s.slow_period = arc_time(2.0, 1.0) + arc_time(-2.0, -1.0);
    s.period = s.slow_period / p.eps;
    return s;
}

double collocation_defect(const BranchPoint &x, const SystemParams &p, int samples) {
    SystemParams q = p;
    q.delta = x.delta;
    const double T = 2.0 * std::numbers::pi / x.omega;
    std::array<FourierCoefficients, 4> dc;
    for (int i = 0; i < 4; ++i) dc[i] = derivative_modes(x.c[i]);
    const ForcingSignal none;
    double defect = 0.0;
    for (int j = 0; j < samples; ++j) {
        const double t = T * j / samples;
        double s[4], f[4];
        for (int i = 0; i < 4; ++i) s[i] = evaluate_complex(x.c[i], x.omega, t).real();
        vector_field_into(s, t, q, none, Variant::Coupled4d, 0.0, f);
        for (int i = 0; i < 4; ++i) {
            const double ds = x.omega * evaluate_complex(dc[i], x.omega, t).real();
            defect = std::max(defect, std::fabs(ds - f[i]));
        }
    }
    return defect;
}

}  // namespace nafhn
