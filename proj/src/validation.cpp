#include "nafhn/validation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

namespace nafhn {

namespace {

constexpr double unit_roundoff = 0x1p-53;

// ---------------------------------------------------------------------------
// Arithmetic policies. Interval mode encloses every quantity over s-subintervals;
// plain mode evaluates the same formulas in floating point at sample points of s.

struct IntervalMode {
    using R = Interval;
    using C = CInterval;
    static constexpr bool rigorous = true;
    static double add(double a, double b) { return add_up(a, b); }
    static double mul(double a, double b) { return mul_up(a, b); }
    static double div(double a, double b) { return div_up(a, b); }
    static double mag(const C &z) { return nafhn::mag(z); }
    static double mag(const R &x) { return x.mag(); }
    static double lower(const R &x) { return x.lo(); }
    static R exact(double x) { return R(x); }
    static R third() { return Interval(1.0) / Interval(3.0); }
    static int count(int pieces) { return pieces; }
    static R piece(int j, int pieces) {
        return Interval::raw(rounding::down(static_cast<double>(j) / pieces),
                             j + 1 == pieces ? 1.0 : rounding::up(static_cast<double>(j + 1) / pieces));
    }
    static R unit_s() { return Interval::raw(0.0, 1.0); }
};

struct PlainMode {
    using R = double;
    using C = std::complex<double>;
    static constexpr bool rigorous = false;
    static double add(double a, double b) { return a + b; }
    static double mul(double a, double b) { return a * b; }
    static double div(double a, double b) { return a / b; }
    static double mag(const C &z) { return std::abs(z); }
    static double mag(double x) { return std::fabs(x); }
    static double lower(double x) { return x; }
    static R exact(double x) { return x; }
    static R third() { return 1.0 / 3.0; }
    static int count(int pieces) { return pieces + 1; }
    static R piece(int j, int pieces) { return static_cast<double>(j) / pieces; }
    static R unit_s() { return 0.5; }
};

inline std::complex<double> to_c(const std::complex<double> &z, PlainMode) { return z; }
inline CInterval to_c(const std::complex<double> &z, IntervalMode) { return CInterval(z); }

template <class Mode>
using CVec = std::vector<typename Mode::C>;

// Polynomial in s with vector coefficients.
template <class Mode>
struct VecPoly {
    std::vector<CVec<Mode>> coef;

    template <class S>
    CVec<Mode> eval(const S &s) const {
        CVec<Mode> out = coef.back();
        for (std::size_t d = coef.size() - 1; d-- > 0;) {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * out[i] + coef[d][i];
        }
        return out;
    }
};

// Two-sided sequence polynomial in s: coef[d][k + order].
template <class Mode>
struct SeqPoly {
    int order = 0;
    std::vector<CVec<Mode>> coef;

    static SeqPoly zero(int order, int degree) {
        SeqPoly p;
        p.order = order;
        p.coef.assign(degree + 1, CVec<Mode>(2 * order + 1, typename Mode::C(0.0)));
        return p;
    }
    int degree() const { return static_cast<int>(coef.size()) - 1; }
    typename Mode::C at(int d, int k) const {
        if (d > degree() || k < -order || k > order) return typename Mode::C(0.0);
        return coef[d][k + order];
    }
};

template <class Mode>
SeqPoly<Mode> add(const SeqPoly<Mode> &a, const SeqPoly<Mode> &b, typename Mode::R scale_b) {
    const int order = std::max(a.order, b.order);
    const int deg = std::max(a.degree(), b.degree());
    auto out = SeqPoly<Mode>::zero(order, deg);
    for (int d = 0; d <= deg; ++d)
        for (int k = -order; k <= order; ++k) out.coef[d][k + order] = a.at(d, k) + scale_b * b.at(d, k);
    return out;
}

template <class Mode>
SeqPoly<Mode> scale(const SeqPoly<Mode> &a, typename Mode::R s) {
    SeqPoly<Mode> out = a;
    for (auto &c : out.coef)
        for (auto &z : c) z = s * z;
    return out;
}

template <class Mode>
SeqPoly<Mode> convolve(const SeqPoly<Mode> &a, const SeqPoly<Mode> &b) {
    const int order = a.order + b.order;
    auto out = SeqPoly<Mode>::zero(order, a.degree() + b.degree());
    for (int da = 0; da <= a.degree(); ++da)
        for (int db = 0; db <= b.degree(); ++db) {
            auto &dst = out.coef[da + db];
            for (int i = -a.order; i <= a.order; ++i) {
                const auto ai = a.coef[da][i + a.order];
                for (int j = -b.order; j <= b.order; ++j) dst[i + j + order] += ai * b.coef[db][j + b.order];
            }
        }
    return out;
}

// Midpoint-radius version for interval sequences.
SeqPoly<IntervalMode> convolve(const SeqPoly<IntervalMode> &a, const SeqPoly<IntervalMode> &b) {
    const int order = a.order + b.order;
    const int len = 2 * order + 1;
    auto out = SeqPoly<IntervalMode>::zero(order, a.degree() + b.degree());
    struct Disc {
        std::vector<double> re, im, abs, rad;
    };
    auto discs = [](const SeqPoly<IntervalMode> &p) {
        std::vector<Disc> out(p.coef.size());
        for (std::size_t d = 0; d < p.coef.size(); ++d) {
            for (const CInterval &z : p.coef[d]) {
                const double mr = z.re.mid(), mi = z.im.mid();
                out[d].re.push_back(mr);
                out[d].im.push_back(mi);
                out[d].abs.push_back(rounding::up(std::hypot(mr, mi)));
                out[d].rad.push_back(add_up(std::max(rounding::up(z.re.hi() - mr), rounding::up(mr - z.re.lo())),
                                            std::max(rounding::up(z.im.hi() - mi), rounding::up(mi - z.im.lo()))));
            }
        }
        return out;
    };
    const auto da = discs(a), db = discs(b);
    const double terms = static_cast<double>((a.degree() + 1) * (b.degree() + 1) * (2 * std::min(a.order, b.order) + 1));
    const double gamma = rounding::up((terms + 4.0) * 2.0 * unit_roundoff / (1.0 - (terms + 4.0) * 2.0 * unit_roundoff));
    const double inflate = 1.0 + (terms + 4.0) * 4.0 * unit_roundoff;
    for (int d = 0; d <= out.degree(); ++d) {
        std::vector<double> pr(len, 0.0), pi(len, 0.0), rad(len, 0.0);
        for (int ia = 0; ia <= a.degree(); ++ia) {
            const int ib = d - ia;
            if (ib < 0 || ib > b.degree()) continue;
            const Disc &x = da[ia], &y = db[ib];
            std::vector<double> ywgt(y.abs.size());
            for (std::size_t j = 0; j < ywgt.size(); ++j) ywgt[j] = add_up(y.rad[j], mul_up(gamma, y.abs[j]));
            for (int i = 0; i < 2 * a.order + 1; ++i) {
                const double xr = x.re[i], xi = x.im[i], xa = x.abs[i], xrad = x.rad[i];
                double *qr = pr.data() + i, *qi = pi.data() + i, *qd = rad.data() + i;
                for (int j = 0; j < 2 * b.order + 1; ++j) {
                    qr[j] += xr * y.re[j] - xi * y.im[j];
                    qi[j] += xr * y.im[j] + xi * y.re[j];
                    qd[j] += xa * ywgt[j] + xrad * (y.abs[j] + y.rad[j]);
                }
            }
        }
        for (int k = 0; k < len; ++k) {
            const double r = rounding::up(rounding::up(rad[k] * inflate) + 0x1p-1074);
            out.coef[d][k] = CInterval(Interval::raw(rounding::down(pr[k] - r), rounding::up(pr[k] + r)),
                                       Interval::raw(rounding::down(pi[k] - r), rounding::up(pi[k] + r)));
        }
    }
    return out;
}

// -i k (omega0 + s domega) c(s)
template <class Mode>
SeqPoly<Mode> rotation(const SeqPoly<Mode> &c, typename Mode::R omega0, typename Mode::R domega) {
    auto out = SeqPoly<Mode>::zero(c.order, c.degree() + 1);
    for (int d = 0; d <= c.degree(); ++d)
        for (int k = -c.order; k <= c.order; ++k) {
            const typename Mode::C z = c.at(d, k);
            const typename Mode::C mik(typename Mode::R(0.0), Mode::exact(-static_cast<double>(k)));
            out.coef[d][k + c.order] += omega0 * (mik * z);
            out.coef[d + 1][k + c.order] += domega * (mik * z);
        }
    return out;
}

template <class Mode, class S>
CVec<Mode> eval_seq(const SeqPoly<Mode> &p, const S &s) {
    CVec<Mode> out = p.coef.back();
    for (int d = p.degree() - 1; d >= 0; --d)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * out[i] + p.coef[d][i];
    return out;
}

// ---------------------------------------------------------------------------
// Weights nu^|k| (upper) and nu^-|k| (upper).

struct Weights {
    std::vector<double> up, inv_up;  // index |k|
    Weights(const NormWeight &w, int kmax, bool rigorous) : up(kmax + 1), inv_up(kmax + 1) {
        Interval p(1.0);
        const Interval nu(w.nu());
        for (int k = 0; k <= kmax; ++k) {
            if (rigorous) {
                up[k] = p.hi();
                inv_up[k] = (Interval(1.0) / p).hi();
                p = p * nu;
            } else {
                up[k] = std::pow(w.nu(), k);
                inv_up[k] = 1.0 / up[k];
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Column-sparse structured matrices and products with a dense point matrix.

template <class Mode>
struct SparseCols {
    // Dense square sub-block at (row0, col0), column-major.
    struct Block {
        int row0, col0, size;
        std::vector<typename Mode::C> values;
    };
    std::vector<std::vector<std::pair<int, typename Mode::C>>> cols;
    std::vector<Block> blocks;

    explicit SparseCols(int ncols) : cols(ncols) {}
    void add(int row, int col, const typename Mode::C &v) { cols[col].emplace_back(row, v); }
    // Upper bound on the number of products in one entry of A * B.
    int terms() const {
        std::size_t t = 0;
        for (const auto &c : cols) t = std::max(t, c.size());
        for (const auto &b : blocks) t += static_cast<std::size_t>(b.size);
        return static_cast<int>(t);
    }
};

template <class Mode>
using Dense = std::vector<typename Mode::C>;  // column-major

// Dense point matrix; abs holds upper bounds of |a|.
struct PointMatrix {
    Eigen::MatrixXcd c;
    Eigen::MatrixXd abs;
    explicit PointMatrix(const Eigen::MatrixXcd &A) : c(A), abs(A.rows(), A.cols()) {
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            for (Eigen::Index i = 0; i < A.rows(); ++i) abs(i, j) = rounding::up(std::abs(A(i, j)));
    }
    int rows() const { return static_cast<int>(c.rows()); }
};

// Midpoint and a radius of a disc containing the box.
inline std::complex<double> disc(const CInterval &b, double &rad) {
    const double mr = b.re.mid(), mi = b.im.mid();
    rad = add_up(std::max(rounding::up(b.re.hi() - mr), rounding::up(mr - b.re.lo())),
                 std::max(rounding::up(b.im.hi() - mi), rounding::up(mi - b.im.lo())));
    return {mr, mi};
}

// P = A * B.
Dense<PlainMode> multiply(const PointMatrix &A, const SparseCols<PlainMode> &B) {
    const int n = A.rows();
    const int ncols = static_cast<int>(B.cols.size());
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(n, ncols);
    for (int c = 0; c < ncols; ++c)
        for (const auto &[r, b] : B.cols[c]) P.col(c) += A.c.col(r) * b;
    for (const auto &blk : B.blocks) {
        const Eigen::Map<const Eigen::MatrixXcd> V(blk.values.data(), blk.size, blk.size);
        P.middleCols(blk.col0, blk.size).noalias() += A.c.middleCols(blk.row0, blk.size) * V;
    }
    return Dense<PlainMode>(P.data(), P.data() + P.size());
}

// Interval mode: midpoint-radius products with an a-priori bound on the rounding error of
// the floating midpoint product, converted to outward-rounded boxes.
Dense<IntervalMode> multiply(const PointMatrix &A, const SparseCols<IntervalMode> &B) {
    const int n = A.rows();
    const int ncols = static_cast<int>(B.cols.size());
    const double terms = static_cast<double>(B.terms());
    // |fl(sum a m) - sum a m| <= gamma sum |a||m| for complex dot products of this length.
    const double gamma =
        rounding::up((terms + 4.0) * 2.0 * unit_roundoff / (1.0 - (terms + 4.0) * 2.0 * unit_roundoff));
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(n, ncols);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, ncols);
    for (int c = 0; c < ncols; ++c)
        for (const auto &[r, b] : B.cols[c]) {
            double rb;
            const std::complex<double> m = disc(b, rb);
            P.col(c) += A.c.col(r) * m;
            R.col(c) += A.abs.col(r) * add_up(mul_up(gamma, rounding::up(std::abs(m))), rb);
        }
    for (const auto &blk : B.blocks) {
        Eigen::MatrixXcd V(blk.size, blk.size);
        Eigen::MatrixXd Wt(blk.size, blk.size);
        for (int j = 0; j < blk.size; ++j)
            for (int i = 0; i < blk.size; ++i) {
                double rb;
                V(i, j) = disc(blk.values[static_cast<std::size_t>(j) * blk.size + i], rb);
                Wt(i, j) = add_up(mul_up(gamma, rounding::up(std::abs(V(i, j)))), rb);
            }
        P.middleCols(blk.col0, blk.size).noalias() += A.c.middleCols(blk.row0, blk.size) * V;
        R.middleCols(blk.col0, blk.size).noalias() += A.abs.middleCols(blk.row0, blk.size) * Wt;
    }
    // A floating sum of nonnegative terms is at most (1 + gamma) below its exact value.
    const double inflate = 1.0 + (terms + 4.0) * 4.0 * unit_roundoff;
    Dense<IntervalMode> out(static_cast<std::size_t>(n) * ncols);
    for (int c = 0; c < ncols; ++c)
        for (int i = 0; i < n; ++i) {
            const double r = rounding::up(rounding::up(R(i, c) * inflate) + 0x1p-1074);
            const std::complex<double> m = P(i, c);
            out[static_cast<std::size_t>(c) * n + i] =
                CInterval(Interval::raw(rounding::down(m.real() - r), rounding::up(m.real() + r)),
                          Interval::raw(rounding::down(m.imag() - r), rounding::up(m.imag() + r)));
        }
    return out;
}

// y = A x for a dense point matrix and a vector of the mode's complex type.
template <class Mode>
CVec<Mode> apply(const PointMatrix &A, const CVec<Mode> &x) {
    SparseCols<Mode> col(1);
    for (int r = 0; r < static_cast<int>(x.size()); ++r) col.add(r, 0, x[r]);
    return multiply(A, col);
}

// ---------------------------------------------------------------------------

template <class Mode>
struct Segment {
    using R = typename Mode::R;
    using C = typename Mode::C;

    const Layout L;
    const SystemParams &p;
    const Weights &W;
    int K, M, N;

    SeqPoly<Mode> c[4];  // c_i(s), degree 1
    R omega0, domega, delta0, ddelta;
    CVec<Mode> g0, dg, h0, dh;  // gauge rows
    R beta0, dbeta;
    CVec<Mode> anchor0, danchor;
    CVec<Mode> x0, dx;

    Segment(const BranchPoint &a, const BranchPoint &b, const GaugeData &ga, const GaugeData &gb,
            const SystemParams &params, const Weights &w)
        : L(a.order()), p(params), W(w), K(a.order()), M(L.M()), N(L.N()) {
        const Eigen::VectorXcd va = pack(a), vb = pack(b);
        x0.resize(N);
        dx.resize(N);
        for (int i = 0; i < N; ++i) {
            x0[i] = to_c(va(i), Mode{});
            dx[i] = to_c(vb(i), Mode{}) - to_c(va(i), Mode{});
        }
        omega0 = Mode::exact(a.omega);
        domega = Mode::exact(b.omega) - Mode::exact(a.omega);
        delta0 = Mode::exact(a.delta);
        ddelta = Mode::exact(b.delta) - Mode::exact(a.delta);
        for (int i = 0; i < 4; ++i) {
            c[i] = SeqPoly<Mode>::zero(K, 1);
            for (int k = -K; k <= K; ++k) {
                c[i].coef[0][k + K] = x0[L.index(i, k)];
                c[i].coef[1][k + K] = dx[L.index(i, k)];
            }
        }
        const Eigen::RowVectorXcd ga_g = gauge_g_row(ga), gb_g = gauge_g_row(gb);
        const Eigen::RowVectorXcd ga_h = gauge_h_row(ga), gb_h = gauge_h_row(gb);
        const Eigen::VectorXcd an_a = pack(ga.anchor), an_b = pack(gb.anchor);
        g0.resize(N);
        dg.resize(N);
        h0.resize(N);
        dh.resize(N);
        anchor0.resize(N);
        danchor.resize(N);
        for (int i = 0; i < N; ++i) {
            g0[i] = to_c(ga_g(i), Mode{});
            dg[i] = to_c(gb_g(i), Mode{}) - g0[i];
            h0[i] = to_c(ga_h(i), Mode{});
            dh[i] = to_c(gb_h(i), Mode{}) - h0[i];
            anchor0[i] = to_c(an_a(i), Mode{});
            danchor[i] = to_c(an_b(i), Mode{}) - anchor0[i];
        }
        beta0 = Mode::exact(ga.beta);
        dbeta = Mode::exact(gb.beta) - Mode::exact(ga.beta);
    }

    // Residual blocks F_i(xhat_s) as polynomials of degree 3, order 3K.
    std::array<SeqPoly<Mode>, 4> residual(const SeqPoly<Mode> &sq_u, const SeqPoly<Mode> &sq_x) const {
        const R one = Mode::exact(1.0);
        const R third = Mode::third();
        const R eps = Mode::exact(p.eps);
        const R eps_b = Mode::exact(p.eps) * Mode::exact(p.b);
        auto a_mode = SeqPoly<Mode>::zero(0, 0);
        a_mode.coef[0][0] = C(eps * Mode::exact(p.a));
        const auto u3 = convolve(sq_u, c[0]);
        const auto x3 = convolve(sq_x, c[2]);
        std::array<SeqPoly<Mode>, 4> F;
        F[0] = add(add(add(rotation(c[0], omega0, domega), c[1], one), c[0], one), u3, -third);
        F[1] = add(add(add(rotation(c[1], omega0, domega), c[0], -eps), c[1], -eps_b), a_mode, one);
        // (1 - delta_s) c4 + delta_s c2 with delta_s = delta0 + s ddelta
        auto lin = [&](const SeqPoly<Mode> &v, R a0, R a1) {
            auto out = SeqPoly<Mode>::zero(v.order, v.degree() + 1);
            for (int d = 0; d <= v.degree(); ++d)
                for (int k = -v.order; k <= v.order; ++k) {
                    out.coef[d][k + v.order] += a0 * v.at(d, k);
                    out.coef[d + 1][k + v.order] += a1 * v.at(d, k);
                }
            return out;
        };
        auto mix = add(lin(c[3], one - delta0, -ddelta), lin(c[1], delta0, ddelta), one);
        F[2] = add(add(add(rotation(c[2], omega0, domega), mix, one), c[2], one), x3, -third);
        F[3] = add(add(add(rotation(c[3], omega0, domega), c[2], -eps), c[3], -eps_b), a_mode, one);
        return F;
    }

    // Finite part of G_s(xhat_s) as a vector polynomial of degree 3.
    VecPoly<Mode> finite_residual(const std::array<SeqPoly<Mode>, 4> &F) const {
        VecPoly<Mode> G;
        G.coef.assign(4, CVec<Mode>(N, C(0.0)));
        // g_s = (g0 + s dg) . (x0 + s dx) + beta0 + s dbeta
        C q0(0.0), q1(0.0), q2(0.0);
        C r0(0.0), r1(0.0), r2(0.0);
        for (int i = 0; i < N; ++i) {
            q0 += g0[i] * x0[i];
            q1 += g0[i] * dx[i] + dg[i] * x0[i];
            q2 += dg[i] * dx[i];
            const C e0 = x0[i] - anchor0[i];
            const C e1 = dx[i] - danchor[i];
            r0 += h0[i] * e0;
            r1 += h0[i] * e1 + dh[i] * e0;
            r2 += dh[i] * e1;
        }
        G.coef[0][0] = q0 + C(beta0);
        G.coef[1][0] = q1 + C(dbeta);
        G.coef[2][0] = q2;
        G.coef[0][1] = r0;
        G.coef[1][1] = r1;
        G.coef[2][1] = r2;
        for (int i = 0; i < 4; ++i)
            for (int d = 0; d <= 3 && d <= F[i].degree(); ++d)
                for (int k = -K; k <= K; ++k) G.coef[d][L.index(i, k)] = F[i].at(d, k);
        return G;
    }

    // Lower bound of omega over the segment.
    double omega_lo() const {
        if constexpr (Mode::rigorous) {
            const Interval w = omega0 + Interval::raw(0.0, 1.0) * domega;
            return w.lo();
        } else {
            return std::min(omega0, omega0 + domega);
        }
    }

    // Structured derivative DG_s(xhat_s) = B0 + s B1 + s^2 B2.
    std::array<SparseCols<Mode>, 3> derivative(const SeqPoly<Mode> &sq_u, const SeqPoly<Mode> &sq_x) const {
        std::array<SparseCols<Mode>, 3> B{SparseCols<Mode>(N), SparseCols<Mode>(N), SparseCols<Mode>(N)};
        const R one = Mode::exact(1.0);
        const R eps = Mode::exact(p.eps);
        const R eps_b = Mode::exact(p.eps) * Mode::exact(p.b);
        const C zero(0.0);
        // gauge rows
        for (int col = 0; col < N; ++col) {
            B[0].add(0, col, g0[col]);
            B[1].add(0, col, dg[col]);
            B[0].add(1, col, h0[col]);
            B[1].add(1, col, dh[col]);
        }
        auto row = [&](int i, int k) { return 2 + i * M + k + K; };
        for (int i = 0; i < 4; ++i)
            for (int k = -K; k <= K; ++k) {
                const C mik(R(0.0), Mode::exact(-static_cast<double>(k)));
                B[0].add(row(i, k), Layout::omega, mik * c[i].at(0, k));
                B[1].add(row(i, k), Layout::omega, mik * c[i].at(1, k));
            }
        for (int k = -K; k <= K; ++k) {
            B[0].add(row(2, k), Layout::delta, c[1].at(0, k) - c[3].at(0, k));
            B[1].add(row(2, k), Layout::delta, c[1].at(1, k) - c[3].at(1, k));
        }
        for (int k = -K; k <= K; ++k) {
            const C mik(R(0.0), Mode::exact(-static_cast<double>(k)));
            const C rot0 = omega0 * mik, rot1 = domega * mik;
            // diagonal blocks (conv part added below for blocks 1 and 3)
            B[0].add(row(0, k), L.index(0, k), rot0 + C(one));
            B[1].add(row(0, k), L.index(0, k), rot1);
            B[0].add(row(0, k), L.index(1, k), C(one));
            B[0].add(row(1, k), L.index(0, k), C(-eps));
            B[0].add(row(1, k), L.index(1, k), rot0 - C(eps_b));
            B[1].add(row(1, k), L.index(1, k), rot1);
            B[0].add(row(2, k), L.index(1, k), C(delta0));
            B[1].add(row(2, k), L.index(1, k), C(ddelta));
            B[0].add(row(2, k), L.index(2, k), rot0 + C(one));
            B[1].add(row(2, k), L.index(2, k), rot1);
            B[0].add(row(2, k), L.index(3, k), C(one - delta0));
            B[1].add(row(2, k), L.index(3, k), C(-ddelta));
            B[0].add(row(3, k), L.index(2, k), C(-eps));
            B[0].add(row(3, k), L.index(3, k), rot0 - C(eps_b));
            B[1].add(row(3, k), L.index(3, k), rot1);
        }
        // -(c_s * c_s) convolution blocks
        for (int d = 0; d <= 2; ++d)
            for (int i : {0, 2}) {
                const SeqPoly<Mode> &sq = i == 0 ? sq_u : sq_x;
                typename SparseCols<Mode>::Block blk{L.index(i, -K), L.index(i, -K), M, {}};
                blk.values.reserve(static_cast<std::size_t>(M) * M);
                for (int j = -K; j <= K; ++j)
                    for (int k = -K; k <= K; ++k) blk.values.push_back(zero - sq.at(d, k - j));
                B[d].blocks.push_back(std::move(blk));
            }
        return B;
    }
};

// Norm helpers on the product space. comp(i): 0 omega, 1 delta, 2..5 blocks.
struct Components {
    const Layout &L;
    int comp_of(int idx) const { return idx < 2 ? idx : 2 + (idx - 2) / L.M(); }
    int mode_of(int idx) const { return idx < 2 ? 0 : (idx - 2) % L.M() - L.K; }
    int begin(int comp) const { return comp < 2 ? comp : L.block(comp - 2); }
    int end(int comp) const { return comp < 2 ? comp + 1 : L.block(comp - 2) + L.M(); }
};

template <class Mode>
std::array<double, 6> vector_norms(const CVec<Mode> &v, const Components &cp, const Weights &W) {
    std::array<double, 6> out{};
    for (int comp = 0; comp < 6; ++comp) {
        double s = 0.0;
        for (int i = cp.begin(comp); i < cp.end(comp); ++i)
            s = Mode::add(s, Mode::mul(Mode::mag(v[i]), W.up[std::abs(cp.mode_of(i))]));
        out[comp] = s;
    }
    return out;
}

// Operator norm rows: for each output component p, sum over input components q of ||C_pq||.
template <class Mode, class Entry>
std::array<double, 6> operator_norms(int N, const Components &cp, const Weights &W, const Entry &mag_entry) {
    std::array<double, 6> out{};
    for (int pc = 0; pc < 6; ++pc) {
        double total = 0.0;
        for (int qc = 0; qc < 6; ++qc) {
            double worst = 0.0;
            for (int col = cp.begin(qc); col < cp.end(qc); ++col) {
                double s = 0.0;
                for (int row = cp.begin(pc); row < cp.end(pc); ++row)
                    s = Mode::add(s, Mode::mul(mag_entry(row, col), W.up[std::abs(cp.mode_of(row))]));
                worst = std::max(worst, Mode::mul(s, W.inv_up[std::abs(cp.mode_of(col))]));
            }
            total = Mode::add(total, worst);
        }
        out[pc] = total;
    }
    (void)N;
    return out;
}

template <class Mode>
RadiiBounds bounds_impl(const BranchPoint &xa, const BranchPoint &xb, const GaugeData &ga, const GaugeData &gb,
                        const SystemParams &p, const NormWeight &w, const BoundOptions &opts,
                        const Eigen::MatrixXcd &A0, const Eigen::MatrixXcd &A1) {
    using C = typename Mode::C;
    using R = typename Mode::R;
    const int K = xa.order();
    const Layout L(K);
    const int N = L.N();
    const Weights W(w, 3 * K, Mode::rigorous);
    const Segment<Mode> seg(xa, xb, ga, gb, p, W);
    const Components cp{L};

    const double wlo = seg.omega_lo();
    if (!(wlo > 0.0)) throw ValidationFailure("frequency enclosure is not positive");

    // A_s = A0 + s D with D the floating difference (any choice of A_s is admissible).
    const Eigen::MatrixXcd D = A1 - A0;
    const PointMatrix PA0(A0), PD(D);
    Eigen::MatrixXd absAmax(N, N);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i)
            // |A0 + s D| <= max(|A0|, |A0 + D|) by convexity in s.
            absAmax(i, j) = std::max(PA0.abs(i, j), mag(CInterval(A0(i, j)) + CInterval(D(i, j))));

    const int pieces = Mode::count(opts.pieces);

    // ---------------- Y
    const SeqPoly<Mode> sq_u = convolve(seg.c[0], seg.c[0]);
    const SeqPoly<Mode> sq_x = convolve(seg.c[2], seg.c[2]);
    const auto F = seg.residual(sq_u, sq_x);
    const VecPoly<Mode> G = seg.finite_residual(F);
    VecPoly<Mode> AG;
    AG.coef.assign(5, CVec<Mode>(N, C(0.0)));
    for (int d = 0; d <= 3; ++d) {
        const CVec<Mode> a0g = apply<Mode>(PA0, G.coef[d]);
        const CVec<Mode> dg = apply<Mode>(PD, G.coef[d]);
        for (int i = 0; i < N; ++i) {
            AG.coef[d][i] += a0g[i];
            AG.coef[d + 1][i] += dg[i];
        }
    }
    std::array<double, 6> Yp{};
    for (int j = 0; j < pieces; ++j) {
        const R s = Mode::piece(j, opts.pieces);
        const auto norms = vector_norms<Mode>(AG.eval(s), cp, W);
        std::array<double, 6> tail{};
        for (int b = 0; b < 4; ++b) {
            const CVec<Mode> Fs = eval_seq(F[b], s);
            const int order = F[b].order;
            double acc = 0.0;
            for (int k = K + 1; k <= order; ++k) {
                const double m = Mode::add(Mode::mag(Fs[k + order]), Mode::mag(Fs[-k + order]));
                acc = Mode::add(acc, Mode::div(Mode::mul(m, W.up[k]), Mode::mul(wlo, static_cast<double>(k))));
            }
            tail[2 + b] = acc;
        }
        for (int c = 0; c < 6; ++c) Yp[c] = std::max(Yp[c], Mode::add(norms[c], tail[c]));
    }

    // ---------------- Z0
    const auto B = seg.derivative(sq_u, sq_x);
    // C(s) = I - (A0 + sD)(B0 + s B1 + s^2 B2)
    std::array<Dense<Mode>, 4> Cm;
    {
        const auto A0B0 = multiply(PA0, B[0]);
        const auto DB0 = multiply(PD, B[0]);
        const auto A0B1 = multiply(PA0, B[1]);
        const auto DB1 = multiply(PD, B[1]);
        const auto A0B2 = multiply(PA0, B[2]);
        const auto DB2 = multiply(PD, B[2]);
        const std::size_t NN = static_cast<std::size_t>(N) * N;
        for (auto &m : Cm) m.assign(NN, C(0.0));
        const C zero(0.0);
        for (std::size_t e = 0; e < NN; ++e) {
            Cm[0][e] = zero - A0B0[e];
            Cm[1][e] = zero - (DB0[e] + A0B1[e]);
            Cm[2][e] = zero - (DB1[e] + A0B2[e]);
            Cm[3][e] = zero - DB2[e];
        }
        for (int i = 0; i < N; ++i) Cm[0][static_cast<std::size_t>(i) * N + i] += C(1.0);
    }
    std::array<double, 6> Z0p{};
    {
        Dense<Mode> Cs(Cm[0].size());
        const int z0_pieces = Mode::count(opts.z0_pieces);
        for (int j = 0; j < z0_pieces; ++j) {
            const R s = Mode::piece(j, opts.z0_pieces);
            for (std::size_t e = 0; e < Cs.size(); ++e) Cs[e] = Cm[0][e] + s * (Cm[1][e] + s * (Cm[2][e] + s * Cm[3][e]));
            const auto norms = operator_norms<Mode>(N, cp, W, [&](int row, int col) {
                return Mode::mag(Cs[static_cast<std::size_t>(col) * N + row]);
            });
            for (int c = 0; c < 6; ++c) Z0p[c] = std::max(Z0p[c], norms[c]);
        }
    }

    // ---------------- Z1
    // Enclosures of c_s * c_s, c_s, delta_s over the whole segment.
    const R s_all = Mode::unit_s();
    auto seq_sup = [&](const SeqPoly<Mode> &sq) {
        if constexpr (Mode::rigorous) {
            return eval_seq(sq, s_all);
        } else {
            // Plain mode: entrywise maximum of magnitudes over the sample points.
            CVec<Mode> best = eval_seq(sq, 0.0);
            for (int j = 1; j < pieces; ++j) {
                const CVec<Mode> v = eval_seq(sq, Mode::piece(j, opts.pieces));
                for (std::size_t i = 0; i < v.size(); ++i)
                    if (std::abs(v[i]) > std::abs(best[i])) best[i] = v[i];
            }
            return best;
        }
    };
    auto ell1 = [&](const CVec<Mode> &v, int order) {
        double s = 0.0;
        for (int k = -order; k <= order; ++k) s = Mode::add(s, Mode::mul(Mode::mag(v[k + order]), W.up[std::abs(k)]));
        return s;
    };
    const CVec<Mode> su = seq_sup(sq_u), sx = seq_sup(sq_x);
    // Tail of the linear part: w_k + (e0 - c*c) * w, bounded through ||e0 - c*c||.
    auto shifted = [&](CVec<Mode> v, int order) {
        v[order] = C(Mode::exact(1.0)) - v[order];
        return ell1(v, order);
    };
    const double norm_id_u = shifted(su, sq_u.order), norm_id_x = shifted(sx, sq_x.order);
    const double norm_c1 = ell1(seq_sup(seg.c[0]), K), norm_c3 = ell1(seq_sup(seg.c[2]), K);
    double delta_mag = 0.0, one_minus_delta_mag = 0.0;
    for (int j = 0; j < pieces; ++j) {
        const R s = Mode::piece(j, opts.pieces);
        const R d = seg.delta0 + s * seg.ddelta;
        delta_mag = std::max(delta_mag, Mode::mag(d));
        one_minus_delta_mag = std::max(one_minus_delta_mag, Mode::mag(Mode::exact(1.0) - d));
    }

    // psi_k = max_{|j| > K} |sigma_{k-j}| nu^-|j| for |k| <= K
    auto psi = [&](const CVec<Mode> &sig, int order) {
        std::vector<double> out(2 * K + 1, 0.0);
        for (int k = -K; k <= K; ++k) {
            double best = 0.0;
            for (int j = k - order; j <= k + order; ++j) {
                if (std::abs(j) <= K) continue;
                best = std::max(best, Mode::mul(Mode::mag(sig[k - j + order]), W.inv_up[std::abs(j)]));
            }
            out[k + K] = best;
        }
        return out;
    };
    const std::vector<double> psi_u = psi(su, sq_u.order), psi_x = psi(sx, sq_x.order);
    std::array<double, 6> Z1p{};
    {
        // v = |A| psi placed in the columns of blocks 1 and 3
        std::vector<double> v(N, 0.0);
        for (int row = 0; row < N; ++row) {
            double acc = 0.0;
            for (int k = -K; k <= K; ++k) {
                acc = Mode::add(acc, Mode::mul(absAmax(row, L.index(0, k)), psi_u[k + K]));
                acc = Mode::add(acc, Mode::mul(absAmax(row, L.index(2, k)), psi_x[k + K]));
            }
            v[row] = acc;
        }
        for (int comp = 0; comp < 6; ++comp) {
            double s = 0.0;
            for (int i = cp.begin(comp); i < cp.end(comp); ++i)
                s = Mode::add(s, Mode::mul(v[i], W.up[std::abs(cp.mode_of(i))]));
            Z1p[comp] = s;
        }
        const double denom = Mode::mul(wlo, static_cast<double>(K + 1));
        const double epsb = Mode::mul(p.eps, Mode::add(1.0, p.b));
        Z1p[2] = Mode::add(Z1p[2], Mode::div(Mode::add(1.0, norm_id_u), denom));
        Z1p[3] = Mode::add(Z1p[3], Mode::div(epsb, denom));
        Z1p[4] = Mode::add(Z1p[4], Mode::div(Mode::add(Mode::add(one_minus_delta_mag, delta_mag), norm_id_x), denom));
        Z1p[5] = Mode::add(Z1p[5], Mode::div(epsb, denom));
    }

    // ---------------- Z2
    std::array<double, 6> Z2p{};
    {
        const double tail_alpha = Mode::div(1.0, Mode::mul(wlo, static_cast<double>(K + 1)));
        const double tail_kappa = Mode::div(1.0, wlo);
        for (int pc = 0; pc < 6; ++pc) {
            std::array<double, 4> alpha{}, kappa{};
            for (int j = 0; j < 4; ++j) {
                const int qc = 2 + j;
                double wa = 0.0, wk = 0.0;
                for (int col = cp.begin(qc); col < cp.end(qc); ++col) {
                    double s = 0.0;
                    for (int row = cp.begin(pc); row < cp.end(pc); ++row)
                        s = Mode::add(s, Mode::mul(absAmax(row, col), W.up[std::abs(cp.mode_of(row))]));
                    const int k = std::abs(cp.mode_of(col));
                    const double sc = Mode::mul(s, W.inv_up[k]);
                    wa = std::max(wa, sc);
                    wk = std::max(wk, Mode::mul(sc, static_cast<double>(k)));
                }
                alpha[j] = pc == qc ? std::max(wa, tail_alpha) : wa;
                kappa[j] = pc == qc ? std::max(wk, tail_kappa) : wk;
            }
            double z = 0.0;
            for (int j = 0; j < 4; ++j) z = Mode::add(z, Mode::mul(2.0, kappa[j]));
            z = Mode::add(z, Mode::mul(alpha[0], Mode::add(Mode::mul(2.0, norm_c1), opts.r_bar)));
            z = Mode::add(z, Mode::mul(alpha[2], Mode::add(Mode::add(4.0, Mode::mul(2.0, norm_c3)), opts.r_bar)));
            Z2p[pc] = z;
        }
    }

    RadiiBounds out;
    for (int c = 0; c < 6; ++c) {
        out.Y = std::max(out.Y, Yp[c]);
        out.Z0 = std::max(out.Z0, Z0p[c]);
        out.Z1 = std::max(out.Z1, Z1p[c]);
        out.Z2 = std::max(out.Z2, Z2p[c]);
    }
    if (!std::isfinite(out.Y) || !std::isfinite(out.Z0) || !std::isfinite(out.Z1) || !std::isfinite(out.Z2))
        throw ValidationFailure("bound overflow", out);
    return out;
}

Eigen::MatrixXcd invert(const Eigen::MatrixXcd &Df) {
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Df);
    if (!(lu.rcond() > 1e-14)) throw ValidationFailure("finite-block inversion failed (near-singular derivative)");
    Eigen::MatrixXcd A = lu.inverse();
    if (!A.allFinite()) throw ValidationFailure("finite-block inversion produced non-finite entries");
    return A;
}

}  // namespace

double radii_polynomial_upper(const RadiiBounds &b, double r) {
    const Interval R(r);
    const Interval val = Interval(b.Z2) * R * R - (Interval(1.0) - Interval(b.Z0) - Interval(b.Z1)) * R + Interval(b.Y);
    return val.hi();
}

RadiiInterval radii_interval(const RadiiBounds &b, double r_bar) {
    if (b.Y < 0.0 || b.Z0 < 0.0 || b.Z1 < 0.0 || b.Z2 < 0.0) throw std::invalid_argument("bounds must be nonnegative");
    const double lin = 1.0 - b.Z0 - b.Z1;
    if (!(lin > 0.0)) throw ValidationFailure("radii polynomial infeasible: Z0 + Z1 >= 1", b);
    RadiiInterval out;
    if (b.Z2 == 0.0) {
        out.r_min = b.Y / lin;
        out.r_max = r_bar;
    } else {
        const double disc = lin * lin - 4.0 * b.Z2 * b.Y;
        if (!(disc > 0.0)) throw ValidationFailure("radii polynomial infeasible: no positive radius with p(r) < 0", b);
        const double sq = std::sqrt(disc);
        out.r_min = 2.0 * b.Y / (lin + sq);
        out.r_max = std::min((lin + sq) / (2.0 * b.Z2), r_bar);
    }
    double r = std::max(rounding::up(out.r_min), 0x1p-1074);
    for (int it = 0; it < 200 && !(radii_polynomial_upper(b, r) < 0.0); ++it) r = rounding::up(r * (1.0 + 0x1p-40)) + 0x1p-1074;
    if (!(radii_polynomial_upper(b, r) < 0.0) || !(r <= out.r_max))
        throw ValidationFailure("radii polynomial infeasible under outward rounding", b);
    out.r_star = r;
    return out;
}

RadiiBounds quadratic_bounds(double xhat, double A) {
    const Interval x(xhat), a(A);
    RadiiBounds b;
    b.Y = abs(a * (x * x - Interval(4.0))).hi();
    b.Z0 = abs(Interval(1.0) - a * Interval(2.0) * x).hi();
    b.Z1 = 0.0;
    b.Z2 = abs(Interval(2.0) * a).hi();
    return b;
}

Eigen::MatrixXcd finite_derivative(const BranchPoint &x, const GaugeData &gauge, const SystemParams &p) {
    const Layout L(x.order());
    SystemParams q = p;
    q.delta = x.delta;
    Eigen::MatrixXcd Df(L.N(), L.N());
    Df.row(0) = gauge_g_row(gauge);
    Df.row(1) = gauge_h_row(gauge);
    Df.bottomRows(4 * L.M()) = jacobian_F(x, q).matrix;
    return Df;
}

RadiiBounds compute_bounds(const BranchPoint &x0, const BranchPoint &x1, const GaugeData &g0, const GaugeData &g1,
                           const SystemParams &p, const NormWeight &w, const BoundOptions &opts,
                           const std::optional<SegmentInverses> &inverses) {
    x0.validate();
    x1.validate();
    if (x0.order() != x1.order()) throw std::invalid_argument("segment endpoints have different orders");
    Eigen::MatrixXcd A0, A1;
    if (inverses) {
        A0 = inverses->A0;
        A1 = inverses->A1;
    } else {
        A0 = invert(finite_derivative(x0, g0, p));
        A1 = invert(finite_derivative(x1, g1, p));
    }
    if (opts.plain) return bounds_impl<PlainMode>(x0, x1, g0, g1, p, w, opts, A0, A1);
    try {
        return bounds_impl<IntervalMode>(x0, x1, g0, g1, p, w, opts, A0, A1);
    } catch (const IntervalError &e) {
        throw ValidationFailure(std::string("interval evaluation failed: ") + e.what());
    }
}

ValidationCertificate validate_segment(const BranchPoint &x0, const BranchPoint &x1, const GaugeData &g0,
                                       const GaugeData &g1, const SystemParams &p, const NormWeight &w,
                                       const BoundOptions &opts) {
    const RadiiBounds b = compute_bounds(x0, x1, g0, g1, p, w, opts);
    const RadiiInterval ri = radii_interval(b, opts.r_bar);
    ValidationCertificate c;
    c.lo = x0;
    c.hi = x1;
    c.Y = b.Y;
    c.Z0 = b.Z0;
    c.Z1 = b.Z1;
    c.Z2 = b.Z2;
    c.r_star = ri.r_star;
    c.r_max = ri.r_max;
    c.K = x0.order();
    c.nu = w.nu();
    return c;
}

BranchValidation validate_branch(const Branch &branch, const SystemParams &p, const NormWeight &w,
                                 const BoundOptions &opts) {
    if (branch.points.empty()) throw std::invalid_argument("cannot validate an empty branch");
    BranchValidation out;
    out.delta_begin = out.delta_end = branch.points.front().delta;
    NewtonOptions newton;
    newton.nu = w.nu();
    for (std::size_t i = 0; i + 1 < branch.points.size(); ++i) {
        const BranchPoint &a = branch.points[i];
        const BranchPoint &b = branch.points[i + 1];
        const Eigen::VectorXcd &t = branch.tangents[i];
        auto gauge_at = [&](const BranchPoint &anchor) { return make_gauge(a, t, anchor); };
        std::vector<ValidationCertificate> got;
        try {
            got.push_back(validate_segment(a, b, gauge_at(a), gauge_at(b), p, w, opts));
        } catch (const ValidationFailure &first) {
            try {
                Eigen::VectorXcd mid = 0.5 * (pack(a) + pack(b));
                symmetrize(mid, a.order());
                const BranchPoint guess = unpack(mid, a.order());
                const BranchPoint m = newton_refine(guess, gauge_at(guess), p, NewtonMode::Arclength, newton).point;
                got.push_back(validate_segment(a, m, gauge_at(a), gauge_at(m), p, w, opts));
                got.push_back(validate_segment(m, b, gauge_at(m), gauge_at(b), p, w, opts));
            } catch (const std::exception &second) {
                out.failure_index = static_cast<int>(i);
                out.failure = first.what();
                out.failure_bounds = first.bounds;
                if (const auto *vf = dynamic_cast<const ValidationFailure *>(&second)) out.failure_bounds = vf->bounds;
                break;
            }
        } catch (const std::exception &e) {
            out.failure_index = static_cast<int>(i);
            out.failure = e.what();
            break;
        }
        for (auto &c : got) {
            c.segment_index = static_cast<int>(i);
            out.max_r_star = std::max(out.max_r_star, c.r_star);
            out.delta_end = c.hi.delta;
            out.certificates.push_back(std::move(c));
        }
    }
    return out;
}

}  // namespace nafhn
