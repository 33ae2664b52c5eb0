#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nafhn/fourier.hpp"

namespace nafhn {

struct SystemParams {
    double a = 0.0;
    double b = 0.5;
    double eps = 0.1;
    double delta = 0.0;

    void validate() const;
};

enum class ForcingKind { PeriodicCosine, QuasiPeriodicTwoTone, TwinFhnOrbit, Constant };

std::string to_string(ForcingKind kind);
ForcingKind forcing_kind_from_string(const std::string &name);

struct ForcingSignal {
    ForcingKind kind = ForcingKind::Constant;
    double amplitude = 0.0;
    double period = 30.0;
    // twin-fhn-orbit only: v(t) = sum c_k e^{ik omega t}
    FourierCoefficients orbit;
    double omega = 1.0;

    static ForcingSignal constant(double value);
    static ForcingSignal periodic_cosine(double amplitude, double period);
    static ForcingSignal quasi_periodic(double amplitude, double period);
    static ForcingSignal twin_orbit(FourierCoefficients v, double omega);

    double operator()(double t) const;
    // Upper bound of sup |v(t)|.
    double bound() const;
    // Period of v, or 0 when v is not periodic (quasi-periodic); constant returns 0.
    double base_period() const;
    void validate() const;
};

enum class Variant { PlanarNonautonomous, AutonomousFhn, Skewed, Coupled4d, ScalarLayered };

std::string to_string(Variant v);
Variant variant_from_string(const std::string &name);
int state_dimension(Variant v);

// Right-hand side of the selected system; layered_y is the frozen slow variable of
// the scalar layered equation.
std::vector<double> vector_field(const std::vector<double> &state, double t, const SystemParams &p,
                                 const ForcingSignal &v, Variant variant, double layered_y = 0.0);
// Allocation-free form used by the integrators.
void vector_field_into(const double *state, double t, const SystemParams &p, const ForcingSignal &v,
                       Variant variant, double layered_y, double *out);
// Jacobian with respect to the state.
Eigen::MatrixXd variational_matrix(const double *state, double t, const SystemParams &p, Variant variant);

struct BranchPoint {
    double omega = 1.0;
    double delta = 0.0;
    std::array<FourierCoefficients, 4> c;

    int order() const { return c[0].order(); }
    void validate() const;
    bool operator==(const BranchPoint &o) const = default;
};

// Index map of the unknown vector (omega, delta, c1, c2, c3, c4), each block k = -K..K.
struct Layout {
    int K;
    explicit Layout(int order) : K(order) {}
    int M() const { return 2 * K + 1; }
    int N() const { return 2 + 4 * M(); }
    static constexpr int omega = 0;
    static constexpr int delta = 1;
    int block(int i) const { return 2 + i * M(); }
    int index(int i, int k) const { return 2 + i * M() + k + K; }
};

Eigen::VectorXcd pack(const BranchPoint &x);
// Symmetrizes (omega, delta real; c_{-k} = conj(c_k)).
BranchPoint unpack(const Eigen::VectorXcd &v, int K);
// Enforces the real structure on a raw unknown or direction vector in place.
void symmetrize(Eigen::VectorXcd &v, int K);

// Norm of the unknown space: max(|omega|, |delta|, l1_nu of each block).
double sup_norm(const Eigen::VectorXcd &v, int K, const NormWeight &w);
double sup_norm(const BranchPoint &x, const NormWeight &w);

// Full residual blocks of order 3K.
std::array<FourierCoefficients, 4> F_map(const BranchPoint &x, const SystemParams &p);
// Residual projected to order K and packed (4M entries).
Eigen::VectorXcd F_vector(const BranchPoint &x, const SystemParams &p);

struct JacobianF {
    Eigen::MatrixXcd matrix;  // 4M x N
    Layout layout;
    FourierCoefficients square_u;  // c1 * c1
    FourierCoefficients square_x;  // c3 * c3
};

JacobianF jacobian_F(const BranchPoint &x, const SystemParams &p);

struct GaugeData {
    BranchPoint reference;
    std::array<FourierCoefficients, 4> reference_derivative;
    double beta = 0.0;
    Eigen::VectorXcd tangent;
    BranchPoint anchor;
};

// Phase data from a reference orbit; tangent/anchor left for the caller.
GaugeData make_gauge(const BranchPoint &reference);
GaugeData make_gauge(const BranchPoint &reference, const Eigen::VectorXcd &tangent, const BranchPoint &anchor);

struct GaugeValues {
    double g;
    double h;
};

GaugeValues gauge_conditions(const BranchPoint &x, const GaugeData &gauge);
// Row of dg/dx (bilinear with the reference derivative).
Eigen::RowVectorXcd gauge_g_row(const GaugeData &gauge);
// Row of dh/dx (Hermitian product with the tangent, normalized to unit slope along it).
Eigen::RowVectorXcd gauge_h_row(const GaugeData &gauge);

class ConditionViolated : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SingularOrbit {
    std::array<std::array<double, 2>, 2> folds;  // p+ then p-
    // Slow arcs on y = x^3/3 - x: right arc from x = 2 down to the fold x = 1 and the
    // mirror arc on the left.
    std::vector<std::array<double, 2>> right_arc;
    std::vector<std::array<double, 2>> left_arc;
    // Jump landing points (fold -> opposite attracting branch).
    std::array<std::array<double, 2>, 2> jump_targets;
    double slow_period = 0.0;  // slow time along both arcs
    double period = 0.0;       // fast-time estimate slow_period / eps
    std::vector<std::string> report;
};

SingularOrbit singular_orbit_seed(const SystemParams &p);

// Time-domain defect of the reconstructed orbit over one period (sup over samples).
double collocation_defect(const BranchPoint &x, const SystemParams &p, int samples = 512);

}  // namespace nafhn
