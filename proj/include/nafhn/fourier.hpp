#pragma once

#include <complex>
#include <span>
#include <vector>

namespace nafhn {

using cplx = std::complex<double>;

// Geometric weight of the l1_nu norm.
class NormWeight {
public:
    explicit NormWeight(double nu = 1.05);
    double nu() const { return nu_; }
    // nu^|k|
    double weight(int k) const;

private:
    double nu_;
};

// Two-sided sequence c_{-K..K} of a real periodic signal (c_{-k} = conj(c_k)).
class FourierCoefficients {
public:
    FourierCoefficients() : FourierCoefficients(0) {}
    explicit FourierCoefficients(int order);

    // Symmetrizes the given entries (ordered k = -K..K, odd length).
    static FourierCoefficients from_entries(std::vector<cplx> entries);
    // Symmetrizes a single mode pair: sets c_k and c_{-k} = conj(value).
    static FourierCoefficients unit(int order, int k, cplx value = 1.0);

    int order() const { return order_; }
    std::size_t size() const { return data_.size(); }

    // Zero outside the stored range.
    cplx operator[](int k) const;
    void set(int k, cplx value);

    std::span<const cplx> entries() const { return data_; }

    // Truncates or zero-pads to the requested order.
    FourierCoefficients project(int order) const;

    // Largest |c_{-k} - conj(c_k)|.
    double realness_defect() const;

    FourierCoefficients &operator+=(const FourierCoefficients &o);
    FourierCoefficients &operator-=(const FourierCoefficients &o);
    FourierCoefficients &operator*=(double s);

    bool operator==(const FourierCoefficients &o) const = default;

private:
    int order_;
    std::vector<cplx> data_;
};

FourierCoefficients operator+(FourierCoefficients a, const FourierCoefficients &b);
FourierCoefficients operator-(FourierCoefficients a, const FourierCoefficients &b);
FourierCoefficients operator*(double s, FourierCoefficients a);

double ell1_norm(const FourierCoefficients &c, const NormWeight &w);
FourierCoefficients convolve(const FourierCoefficients &c, const FourierCoefficients &d);

// Sum c_k e^{ik omega t}; throws if the imaginary residue is not negligible.
double evaluate(const FourierCoefficients &c, double omega, double t);
// Time derivative of the represented signal.
double evaluate_derivative(const FourierCoefficients &c, double omega, double t);
cplx evaluate_complex(const FourierCoefficients &c, double omega, double t);

// Bilinear sum c_k d_k (no conjugation).
cplx inner_product(const FourierCoefficients &c, const FourierCoefficients &d);

// (iK c)_k = i k c_k
FourierCoefficients derivative_modes(const FourierCoefficients &c);

// Trapezoidal projection of uniform samples x(j T / n), j = 0..n-1, onto modes |k| <= order.
FourierCoefficients project_samples(std::span<const double> samples, int order);

}  // namespace nafhn
