#include "nafhn/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nafhn {

NormWeight::NormWeight(double nu) : nu_(nu) {
    if (!(nu > 1.0) || !std::isfinite(nu))
        throw std::invalid_argument("norm weight nu must be > 1");
}

double NormWeight::weight(int k) const { return std::pow(nu_, std::abs(k)); }

FourierCoefficients::FourierCoefficients(int order) : order_(order) {
    if (order < 0) throw std::invalid_argument("Fourier order must be nonnegative");
    data_.assign(2 * static_cast<std::size_t>(order) + 1, cplx(0.0));
}

FourierCoefficients FourierCoefficients::from_entries(std::vector<cplx> entries) {
    if (entries.size() % 2 != 1) throw std::invalid_argument("coefficient array must have odd length");
    FourierCoefficients c(static_cast<int>(entries.size() / 2));
    for (const auto &z : entries)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::invalid_argument("non-finite Fourier coefficient");
    const int K = c.order_;
    for (int k = -K; k <= K; ++k) {
        const cplx a = entries[k + K];
        const cplx b = std::conj(entries[-k + K]);
        c.data_[k + K] = 0.5 * (a + b);
    }
    c.data_[K] = c.data_[K].real();
    return c;
}

FourierCoefficients FourierCoefficients::unit(int order, int k, cplx value) {
    FourierCoefficients c(order);
    c.set(k, value);
    return c;
}

cplx FourierCoefficients::operator[](int k) const {
    if (k < -order_ || k > order_) return 0.0;
    return data_[k + order_];
}

void FourierCoefficients::set(int k, cplx value) {
    if (k < -order_ || k > order_) throw std::out_of_range("Fourier mode outside stored order");
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
        throw std::invalid_argument("non-finite Fourier coefficient");
    if (k == 0) {
        data_[order_] = value.real();
        return;
    }
    data_[k + order_] = value;
    data_[-k + order_] = std::conj(value);
}

FourierCoefficients FourierCoefficients::project(int order) const {
    FourierCoefficients out(order);
    const int m = std::min(order, order_);
    for (int k = -m; k <= m; ++k) out.data_[k + order] = data_[k + order_];
    return out;
}

double FourierCoefficients::realness_defect() const {
    double d = 0.0;
    for (int k = 0; k <= order_; ++k)
        d = std::max(d, std::abs(data_[-k + order_] - std::conj(data_[k + order_])));
    return d;
}

FourierCoefficients &FourierCoefficients::operator+=(const FourierCoefficients &o) {
    if (o.order_ > order_) *this = project(o.order_);
    for (int k = -o.order_; k <= o.order_; ++k) data_[k + order_] += o.data_[k + o.order_];
    return *this;
}

FourierCoefficients &FourierCoefficients::operator-=(const FourierCoefficients &o) {
    if (o.order_ > order_) *this = project(o.order_);
    for (int k = -o.order_; k <= o.order_; ++k) data_[k + order_] -= o.data_[k + o.order_];
    return *this;
}

FourierCoefficients &FourierCoefficients::operator*=(double s) {
    for (auto &z : data_) z *= s;
    return *this;
}

FourierCoefficients operator+(FourierCoefficients a, const FourierCoefficients &b) { return a += b; }
FourierCoefficients operator-(FourierCoefficients a, const FourierCoefficients &b) { return a -= b; }
FourierCoefficients operator*(double s, FourierCoefficients a) { return a *= s; }

double ell1_norm(const FourierCoefficients &c, const NormWeight &w) {
    double sum = 0.0;
    double wk = 1.0;
    const int K = c.order();
    sum += std::abs(c[0]);
    for (int k = 1; k <= K; ++k) {
        wk *= w.nu();
        sum += (std::abs(c[k]) + std::abs(c[-k])) * wk;
    }
    return sum;
}

FourierCoefficients convolve(const FourierCoefficients &c, const FourierCoefficients &d) {
    const int Kc = c.order(), Kd = d.order();
    const int K = Kc + Kd;
    std::vector<cplx> out(2 * static_cast<std::size_t>(K) + 1, cplx(0.0));
    auto ce = c.entries();
    auto de = d.entries();
    for (int i = -Kc; i <= Kc; ++i) {
        const cplx ci = ce[i + Kc];
        if (ci == cplx(0.0)) continue;
        for (int j = -Kd; j <= Kd; ++j) out[i + j + K] += ci * de[j + Kd];
    }
    // Exact symmetry is preserved up to rounding; from_entries removes the rounding residue.
    return FourierCoefficients::from_entries(std::move(out));
}

cplx evaluate_complex(const FourierCoefficients &c, double omega, double t) {
    if (!(omega > 0.0)) throw std::invalid_argument("evaluate requires omega > 0");
    const int K = c.order();
    cplx sum = c[0];
    for (int k = 1; k <= K; ++k) {
        const double th = k * omega * t;
        const cplx e(std::cos(th), std::sin(th));
        sum += c[k] * e + c[-k] * std::conj(e);
    }
    return sum;
}

double evaluate(const FourierCoefficients &c, double omega, double t) {
    const cplx z = evaluate_complex(c, omega, t);
    double scale = 0.0;
    for (const auto &e : c.entries()) scale += std::abs(e);
    if (std::abs(z.imag()) > 1e-10 * std::max(scale, 1e-300) && scale > 0.0)
        throw std::logic_error("Fourier sequence violates the realness invariant");
    return z.real();
}

double evaluate_derivative(const FourierCoefficients &c, double omega, double t) {
    return omega * evaluate(derivative_modes(c), omega, t);
}

cplx inner_product(const FourierCoefficients &c, const FourierCoefficients &d) {
    const int K = std::min(c.order(), d.order());
    cplx sum = 0.0;
    for (int k = -K; k <= K; ++k) sum += c[k] * d[k];
    return sum;
}

FourierCoefficients derivative_modes(const FourierCoefficients &c) {
    FourierCoefficients out(c.order());
    for (int k = 1; k <= c.order(); ++k) out.set(k, cplx(0.0, k) * c[k]);
    return out;
}

FourierCoefficients project_samples(std::span<const double> samples, int order) {
    const std::size_t n = samples.size();
    if (n < 2 * static_cast<std::size_t>(order) + 1)
        throw std::invalid_argument("too few samples for the requested Fourier order");
    FourierCoefficients out(order);
    for (int k = 0; k <= order; ++k) {
        cplx sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double th = -2.0 * std::numbers::pi * k * static_cast<double>(j) / static_cast<double>(n);
            sum += samples[j] * cplx(std::cos(th), std::sin(th));
        }
        out.set(k, sum / static_cast<double>(n));
    }
    return out;
}

}  // namespace nafhn
