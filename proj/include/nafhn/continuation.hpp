#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nafhn/problem.hpp"

namespace nafhn {

enum class NewtonMode { FixedDelta, Arclength };

class NewtonFailure : public std::runtime_error {
public:
    enum class Kind { Singular, Diverged, MaxIterations };
    NewtonFailure(Kind kind, const std::string &msg) : std::runtime_error(msg), kind(kind) {}
    Kind kind;
};

class FoldSuspected : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NewtonOptions {
    int max_iter = 30;
    double tol = 1e-10;
    double nu = 1.05;
};

struct NewtonResult {
    BranchPoint point;
    int iterations = 0;
    std::vector<double> residuals;  // residual before each update and after the last one
};

// Residual of (F, g, h) or (F, g, delta - delta0) in the product norm.
double active_residual(const BranchPoint &x, const GaugeData &gauge, const SystemParams &p, NewtonMode mode,
                       double delta0, const NormWeight &w);

// In fixed-delta mode the target delta is gauge.anchor.delta.
NewtonResult newton_refine(const BranchPoint &x0, const GaugeData &gauge, const SystemParams &p, NewtonMode mode,
                           const NewtonOptions &opts = {});

// Kernel of D(F, g) with unit sup-norm; the sign keeps Re<previous, t> > 0 (Hermitian).
Eigen::VectorXcd tangent_vector(const BranchPoint &x, const GaugeData &gauge, const SystemParams &p,
                                const std::optional<Eigen::VectorXcd> &previous, const NormWeight &w,
                                double rank_tol = 1e-8);

enum class Termination { ReachedBound, NewtonFailure, StepUnderflow, FoldDetected };

std::string to_string(Termination t);
Termination termination_from_string(const std::string &s);

struct Branch {
    std::vector<BranchPoint> points;
    std::vector<Eigen::VectorXcd> tangents;
    std::vector<double> step_history;  // step that produced point i (entry 0 is 0)
    std::vector<double> residuals;
    Termination termination = Termination::ReachedBound;
    std::string detail;
};

struct ContinuationOptions {
    double step = 1e-3;
    double step_min = 1e-6;
    double step_max = 0.05;
    double growth = 1.3;
    int fast_iterations = 3;
    int max_points = 5000;
    NewtonOptions newton;
};

Branch continue_branch(const BranchPoint &start, const SystemParams &p, int direction, double delta_lo,
                       double delta_hi, const ContinuationOptions &opts = {});

// Gauge used to correct point i + 1 from point i.
GaugeData segment_gauge(const Branch &branch, std::size_t i);

struct FhnCycle {
    double omega = 1.0;
    FourierCoefficients u, v;
};

// Limit cycle of the autonomous FHN system projected on K modes, time origin at an
// upward crossing of the u-section.
FhnCycle fhn_cycle(const SystemParams &p, int K);

// Time-shifts every block by theta.
BranchPoint shift_phase(const BranchPoint &x, double theta);
// Shift that maximizes the transversality of the phase condition.
BranchPoint align_phase(const BranchPoint &x);

// Periodic orbit of the twin-forced system at delta, attracting (forward pullback) or
// repelling (backward), refined by Newton at fixed delta.
BranchPoint seed_branch_point(const SystemParams &p, double delta, int K, bool attracting,
                              const NewtonOptions &opts = {});

}  // namespace nafhn
