#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nafhn/continuation.hpp"
#include "nafhn/interval.hpp"
#include "nafhn/problem.hpp"

namespace nafhn {

struct RadiiBounds {
    double Y = 0.0;
    double Z0 = 0.0;
    double Z1 = 0.0;
    double Z2 = 0.0;
};

class ValidationFailure : public std::runtime_error {
public:
    ValidationFailure(const std::string &msg, RadiiBounds b = {}) : std::runtime_error(msg), bounds(b) {}
    RadiiBounds bounds;
};

struct RadiiInterval {
    double r_min = 0.0;
    double r_max = 0.0;
    double r_star = 0.0;  // r_min stepped outward, verified p(r_star) < 0
};

// p(r) = Z2 r^2 - (1 - Z0 - Z1) r + Y; radii above r_bar are not admissible.
RadiiInterval radii_interval(const RadiiBounds &b, double r_bar = std::numeric_limits<double>::infinity());
// Upper bound of p(r) in outward-rounded arithmetic.
double radii_polynomial_upper(const RadiiBounds &b, double r);

// f(x) = x^2 - 4 with T(x) = x - A f(x).
RadiiBounds quadratic_bounds(double xhat, double A);

struct BoundOptions {
    double r_bar = 1e-2;  // a-priori radius for the second-derivative bound
    int pieces = 8;       // subintervals of s in [0, 1] for Y and Z1
    int z0_pieces = 1;    // subintervals for the matrix part of Z0
    // Plain floating-point evaluation at s = j / pieces instead of interval enclosures.
    bool plain = false;
};

struct SegmentInverses {
    Eigen::MatrixXcd A0, A1;
};

// Finite-block matrix of DG (gauge rows, then F rows) at x.
Eigen::MatrixXcd finite_derivative(const BranchPoint &x, const GaugeData &gauge, const SystemParams &p);

RadiiBounds compute_bounds(const BranchPoint &x0, const BranchPoint &x1, const GaugeData &g0, const GaugeData &g1,
                           const SystemParams &p, const NormWeight &w, const BoundOptions &opts = {},
                           const std::optional<SegmentInverses> &inverses = std::nullopt);

struct ValidationCertificate {
    int segment_index = 0;
    BranchPoint lo, hi;
    double Y = 0.0, Z0 = 0.0, Z1 = 0.0, Z2 = 0.0;
    double r_star = 0.0;
    double r_max = 0.0;
    int K = 0;
    double nu = 1.05;

    double delta_lo() const { return std::min(lo.delta, hi.delta); }
    double delta_hi() const { return std::max(lo.delta, hi.delta); }
};

ValidationCertificate validate_segment(const BranchPoint &x0, const BranchPoint &x1, const GaugeData &g0,
                                       const GaugeData &g1, const SystemParams &p, const NormWeight &w,
                                       const BoundOptions &opts = {});

struct BranchValidation {
    std::vector<ValidationCertificate> certificates;
    std::optional<int> failure_index;
    std::string failure;
    RadiiBounds failure_bounds;
    double max_r_star = 0.0;
    // Delta range covered by certificates (equal to the start delta when none).
    double delta_begin = 0.0;
    double delta_end = 0.0;
};

// Validates consecutive segments in order; a failing segment is split once at a
// Newton-refined midpoint before the branch end is declared.
BranchValidation validate_branch(const Branch &branch, const SystemParams &p, const NormWeight &w,
                                 const BoundOptions &opts = {});

}  // namespace nafhn
