#pragma once

// Outward-rounded interval arithmetic. Every elementary result computed in
// round-to-nearest is pushed to (at least) the adjacent representable double,
// which encloses the exact value of the operation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace nafhn {

class IntervalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace rounding {
// |x| * 2^-52 is at least one ulp of x; the denormal term covers underflow.
inline double up(double x) { return x + (std::fabs(x) * 0x1p-52 + 0x1p-1074); }
inline double down(double x) { return x - (std::fabs(x) * 0x1p-52 + 0x1p-1074); }
}  // namespace rounding

class Interval {
public:
    constexpr Interval() : lo_(0.0), hi_(0.0) {}
    constexpr Interval(double x) : lo_(x), hi_(x) {}  // NOLINT: implicit point promotion
    Interval(double lo, double hi) : lo_(lo), hi_(hi) {
        if (!(lo <= hi)) throw IntervalError("interval with lo > hi");
    }
    // Bounds already known to be ordered.
    static Interval raw(double lo, double hi) {
        Interval r;
        r.lo_ = lo;
        r.hi_ = hi;
        return r;
    }
    static Interval hull(double a, double b) { return raw(std::min(a, b), std::max(a, b)); }

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double mid() const { return 0.5 * lo_ + 0.5 * hi_; }
    double width() const { return rounding::up(hi_ - lo_); }
    double mag() const { return std::max(std::fabs(lo_), std::fabs(hi_)); }
    double mig() const { return (lo_ <= 0.0 && hi_ >= 0.0) ? 0.0 : std::min(std::fabs(lo_), std::fabs(hi_)); }
    bool contains(double x) const { return lo_ <= x && x <= hi_; }
    bool contains_zero() const { return lo_ <= 0.0 && 0.0 <= hi_; }
    bool finite() const { return std::isfinite(lo_) && std::isfinite(hi_); }

    Interval operator-() const { return raw(-hi_, -lo_); }
    Interval &operator+=(const Interval &o);
    Interval &operator-=(const Interval &o);
    Interval &operator*=(const Interval &o);
    Interval &operator/=(const Interval &o);

private:
    double lo_, hi_;
};

inline Interval operator+(const Interval &a, const Interval &b) {
    return Interval::raw(rounding::down(a.lo() + b.lo()), rounding::up(a.hi() + b.hi()));
}
inline Interval operator-(const Interval &a, const Interval &b) {
    return Interval::raw(rounding::down(a.lo() - b.hi()), rounding::up(a.hi() - b.lo()));
}
inline Interval operator*(const Interval &a, const Interval &b) {
    const double p1 = a.lo() * b.lo(), p2 = a.lo() * b.hi();
    const double p3 = a.hi() * b.lo(), p4 = a.hi() * b.hi();
    const double lo = std::min(std::min(p1, p2), std::min(p3, p4));
    const double hi = std::max(std::max(p1, p2), std::max(p3, p4));
    return Interval::raw(rounding::down(lo), rounding::up(hi));
}
inline Interval operator*(double a, const Interval &b) {
    const double p1 = a * b.lo(), p2 = a * b.hi();
    return a >= 0.0 ? Interval::raw(rounding::down(p1), rounding::up(p2))
                    : Interval::raw(rounding::down(p2), rounding::up(p1));
}
inline Interval operator*(const Interval &a, double b) { return b * a; }
inline Interval operator/(const Interval &a, const Interval &b) {
    if (b.contains_zero()) throw IntervalError("interval division by an interval containing zero");
    const double p1 = a.lo() / b.lo(), p2 = a.lo() / b.hi();
    const double p3 = a.hi() / b.lo(), p4 = a.hi() / b.hi();
    const double lo = std::min(std::min(p1, p2), std::min(p3, p4));
    const double hi = std::max(std::max(p1, p2), std::max(p3, p4));
    return Interval::raw(rounding::down(lo), rounding::up(hi));
}

inline Interval &Interval::operator+=(const Interval &o) { return *this = *this + o; }
inline Interval &Interval::operator-=(const Interval &o) { return *this = *this - o; }
inline Interval &Interval::operator*=(const Interval &o) { return *this = *this * o; }
inline Interval &Interval::operator/=(const Interval &o) { return *this = *this / o; }

inline Interval abs(const Interval &a) {
    if (a.lo() >= 0.0) return a;
    if (a.hi() <= 0.0) return -a;
    return Interval::raw(0.0, std::max(-a.lo(), a.hi()));
}
inline Interval sqr(const Interval &a) {
    const Interval m = abs(a);
    return Interval::raw(rounding::down(m.lo() * m.lo()), rounding::up(m.hi() * m.hi()));
}
inline Interval pow(const Interval &a, int n) {
    if (n < 0) return Interval(1.0) / pow(a, -n);
    if (n == 0) return Interval(1.0);
    if (n % 2 == 0) {
        Interval r = pow(sqr(a), n / 2);
        return Interval::raw(std::max(0.0, r.lo()), r.hi());
    }
    // Odd powers are monotone; evaluate each endpoint by repeated outward products.
    Interval lo_pow = Interval(a.lo()), hi_pow = Interval(a.hi());
    Interval rl = lo_pow, rh = hi_pow;
    for (int i = 1; i < n; ++i) {
        rl = rl * lo_pow;
        rh = rh * hi_pow;
    }
    return Interval::raw(rl.lo(), rh.hi());
}
inline Interval sqrt(const Interval &a) {
    if (a.hi() < 0.0) throw IntervalError("square root of a negative interval");
    const double lo = std::max(0.0, a.lo());
    return Interval::raw(std::max(0.0, rounding::down(std::sqrt(lo))), rounding::up(std::sqrt(a.hi())));
}
inline Interval hull(const Interval &a, const Interval &b) {
    return Interval::raw(std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}
inline Interval max(const Interval &a, const Interval &b) {
    return Interval::raw(std::max(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

// Upper bound of a nonnegative sum or product of magnitudes.
inline double add_up(double a, double b) { return rounding::up(a + b); }
inline double mul_up(double a, double b) { return rounding::up(a * b); }
inline double div_up(double a, double b) { return rounding::up(a / b); }

// Rectangular complex interval.
struct CInterval {
    Interval re, im;

    CInterval() = default;
    CInterval(Interval r, Interval i = Interval(0.0)) : re(r), im(i) {}  // NOLINT
    CInterval(std::complex<double> z) : re(z.real()), im(z.imag()) {}    // NOLINT
    CInterval(double x) : re(x), im(0.0) {}                              // NOLINT

    CInterval operator-() const { return {-re, -im}; }
    CInterval &operator+=(const CInterval &o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    CInterval &operator-=(const CInterval &o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    bool finite() const { return re.finite() && im.finite(); }
};

inline CInterval operator+(const CInterval &a, const CInterval &b) { return {a.re + b.re, a.im + b.im}; }
inline CInterval operator-(const CInterval &a, const CInterval &b) { return {a.re - b.re, a.im - b.im}; }
inline CInterval operator*(const CInterval &a, const CInterval &b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline CInterval operator*(const std::complex<double> &a, const CInterval &b) {
    return {a.real() * b.re - a.imag() * b.im, a.real() * b.im + a.imag() * b.re};
}
inline CInterval operator*(const Interval &a, const CInterval &b) { return {a * b.re, a * b.im}; }
inline CInterval operator*(double a, const CInterval &b) { return {a * b.re, a * b.im}; }
inline CInterval conj(const CInterval &a) { return {a.re, -a.im}; }
inline CInterval hull(const CInterval &a, const CInterval &b) { return {hull(a.re, b.re), hull(a.im, b.im)}; }

// Upper bound of |z| over the box.
inline double mag(const CInterval &z) {
    const double r = z.re.mag(), i = z.im.mag();
    return rounding::up(std::sqrt(rounding::up(rounding::up(r * r) + rounding::up(i * i))));
}
inline double mag(const Interval &x) { return x.mag(); }
inline double mag(double x) { return std::fabs(x); }
inline double mag(const std::complex<double> &z) { return std::abs(z); }

}  // namespace nafhn
