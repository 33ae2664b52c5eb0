#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nafhn/problem.hpp"

namespace nafhn {

class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Trajectory {
    std::vector<double> times;                // strictly increasing
    std::vector<std::vector<double>> states;  // one row per time
    bool blew_up = false;
    double blowup_time = std::numeric_limits<double>::quiet_NaN();

    std::size_t size() const { return times.size(); }
    int dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
    const std::vector<double> &front() const { return states.front(); }
    const std::vector<double> &back() const { return states.back(); }
};

using OdeRhs = std::function<void(double t, const double *x, double *dx)>;

struct IntegratorOptions {
    double escape_radius = 1e3;
    // Output spacing on the absolute grid t = m * sample_dt; 0 records every accepted step.
    double sample_dt = 0.0;
    // false keeps only the two end states (plus the blow-up point).
    bool record = true;
    double max_step = std::numeric_limits<double>::infinity();
    // Components entering the blow-up test; empty means all.
    int escape_components = 0;
};

// Dormand-Prince 5(4) with mixed absolute/relative error control at tol and dense output.
// Backward time (t1 < t0) integrates the time-reversed field.
Trajectory integrate_system(const OdeRhs &rhs, const std::vector<double> &initial, double t0, double t1, double tol,
                            const IntegratorOptions &opts = {});

Trajectory integrate(Variant variant, const SystemParams &p, const ForcingSignal &v, const std::vector<double> &initial,
                     double t0, double t1, double tol, const IntegratorOptions &opts = {}, double layered_y = 0.0);

struct InitBox {
    std::vector<double> center;
    std::vector<double> half_width;
};

struct EnsembleResult {
    std::vector<Trajectory> trajectories;
    std::vector<double> start_times;
    double transient_cutoff = 0.0;
    std::vector<std::string> failures;  // per-member integrator failures, empty string if none
};

struct EnsembleOptions {
    double t_end = 0.0;
    double sample_dt = 0.1;
    double tol = 1e-9;
    std::uint64_t seed = 1;
};

EnsembleResult pullback_ensemble(Variant variant, const SystemParams &p, const ForcingSignal &v, double t_a,
                                 double t_b, int n, const InitBox &box, double transient,
                                 const EnsembleOptions &opts);

// Largest pairwise distance between retained members on their shared sample times.
double max_pairwise_distance(const EnsembleResult &e);

struct RepellingOptions {
    double radius = 0.3;        // initial conditions on a circle about the origin
    double duration = 20000.0;  // backward integration length
    double window = 60.0;       // final window compared for convergence
    double tol = 1e-10;
    double sample_dt = 0.1;
    double agreement = 1e-6;
};

enum class RepellingOutcome { Found, Absent };

struct RepellingResult {
    RepellingOutcome outcome = RepellingOutcome::Absent;
    Trajectory solution;  // common backward limit over the window when found
    int blown_up = 0;
    int total = 0;
};

class InconclusiveResult : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

RepellingResult repelling_solution(Variant variant, const SystemParams &p, const ForcingSignal &v, double t_future,
                                   int n, const RepellingOptions &opts = {});

// Fraction of n points on the circle of given radius at time t_start that blow up when
// integrated backward over duration.
struct CircleBlowup {
    int total = 0;
    int blown_up = 0;
    double fraction() const { return total ? static_cast<double>(blown_up) / total : 0.0; }
};

CircleBlowup circle_backward_blowup(const SystemParams &p, const ForcingSignal &v, double t_start, double radius,
                                    int n, double duration, double tol = 1e-9);

class HorizonTooShort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SkewedOptions {
    double t_start = 0.0;
    double t_end = 300.0;
    double sample_dt = 0.05;
    double x0 = 2.0;  // initial value of phi_1 at -horizon (side of the attractor)
    double tol = 1e-12;
    double insensitivity = 1e-8;
};

struct SkewedSolution {
    Trajectory phi;         // states (phi_1, phi_2) on [t_start, t_end]
    double alpha = 0.0;     // fitted decay rate of psi
    double psi_bound = 1.0; // K with psi(t, t0) <= K e^{-alpha (t - t0)} on the samples
    double horizon = 0.0;
};

SkewedSolution skewed_hyperbolic_solution(const SystemParams &p, const ForcingSignal &v, double horizon,
                                          const SkewedOptions &opts = {});

// Radius beyond which the radial derivative is negative for all delta in [0,1] and |v| <= forcing_bound.
double trapping_radius(const SystemParams &p, double forcing_bound);
// r' along the planar field at the polar point, with given delta and forcing value.
double radial_derivative(const SystemParams &p, double r, double theta, double delta, double v);

class NonUniqueAttractor : public std::runtime_error {
public:
    NonUniqueAttractor(const std::string &msg, double y) : std::runtime_error(msg), y(y) {}
    double y;
};

struct AveragingOptions {
    int grid_points = 121;
    double pullback_horizon = 200.0;
    int window_periods = 50;
    double window_quasi = 1500.0;
    double uniqueness_tol = 1e-6;
    double tol = 1e-10;
    double sample_dtau = 0.01;
};

struct AveragedFlow {
    Trajectory slow;  // times are slow time tau, states (y)
    std::vector<double> y_grid;
    std::vector<double> mean_x;  // m(y) on the grid
};

AveragedFlow averaged_slow_flow(const SystemParams &p, const ForcingSignal &v, double y_lo, double y_hi, double y0,
                                double tau_end, const AveragingOptions &opts = {});

// Time average of the unique attractor of the layered equation at frozen y.
double layered_mean(const SystemParams &p, const ForcingSignal &v, double y, const AveragingOptions &opts = {});

// Natural cubic spline through (x_i, y_i) on a uniform grid.
class CubicSpline {
public:
    CubicSpline(std::vector<double> x, std::vector<double> y);
    double operator()(double t) const;

private:
    std::vector<double> x_, y_, m_;
};

}  // namespace nafhn
