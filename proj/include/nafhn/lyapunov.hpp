#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nafhn/continuation.hpp"
#include "nafhn/dynamics.hpp"
#include "nafhn/fourier.hpp"
#include "nafhn/problem.hpp"

namespace nafhn {

class LyapunovError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SpectrumEstimate {
    std::vector<double> exponents;  // descending, per unit time
    double horizon = 0.0;
    double renorm_interval = 0.0;
    std::string reference;
    double mean_divergence = 0.0;  // time average of tr J along the orbit
    // Spectrum of the forced (x, y) block along the same orbit (coupled orbits only).
    std::vector<double> block_exponents;
};

// J(t) written into a preallocated square matrix.
using VariationalFn = std::function<void(double t, Eigen::MatrixXd &J)>;

// Discrete QR method for z' = J(t) z on [t0, t0 + horizon].
SpectrumEstimate qr_spectrum(const VariationalFn &J, int dim, double t0, double horizon, double renorm_interval,
                             double tol = 1e-10);

struct LyapunovOptions {
    int n_periods = 10;
    // Defaults to period / 100.
    std::optional<double> renorm_interval;
    double tol = 1e-10;
    // Periodic orbits only: QR steps run this many periods before averaging starts.
    int warmup_periods = 4;
};

// Periodic orbit given by Fourier data; the state comes from evaluating the series, so
// unstable orbits are followed exactly. Blocks used per variant: autonomous-fhn (c1, c2),
// planar-nonautonomous and skewed (c3, c4), coupled-4d all four.
SpectrumEstimate lyapunov_spectrum(Variant variant, const SystemParams &p, const BranchPoint &orbit,
                                   const LyapunovOptions &opts = {});

// Trajectory started from initial at t0 and integrated alongside the variational equation
// for n_periods * period.
SpectrumEstimate lyapunov_spectrum(Variant variant, const SystemParams &p, const ForcingSignal &v,
                                   const std::vector<double> &initial, double t0, double period,
                                   const LyapunovOptions &opts = {}, double layered_y = 0.0);

struct FloquetResult {
    std::vector<cplx> multipliers;  // by decreasing modulus
    std::vector<double> exponents;  // log|mu| / T, same order
    double period = 0.0;
    // Planar autonomous orbits: (1/T) * integral of the divergence.
    std::optional<double> divergence_exponent;
};

FloquetResult floquet_multipliers(const VariationalFn &J, int dim, double period, double tol = 1e-11);
FloquetResult floquet_multipliers(Variant variant, const SystemParams &p, const BranchPoint &orbit,
                                  double max_defect = 1e-6, double tol = 1e-11);

// Autonomous FHN cycle as a synchronized branch point (c3 = c1, c4 = c2).
BranchPoint cycle_as_branch_point(const FhnCycle &cycle);

class HyperbolicityFailure : public std::runtime_error {
public:
    HyperbolicityFailure(const std::string &msg, double decay) : std::runtime_error(msg), decay(decay) {}
    double decay;
};

class SmallnessViolated : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DecayFit {
    double K = 1.0;
    double decay = 0.0;
};

// Fits ||Psi(t, t0)||_inf <= K exp(-decay (t - t0)) for the triangular principal matrix of
// the skewed variational equation along phi_1; t0 runs over the first half of the samples.
DecayFit fit_triangular_decay(const Trajectory &phi, const SystemParams &p, double t0_stride = 1.0);

struct HyperbolicityCertificate {
    double K = 1.0;
    double decay = 0.0;
    double alpha = 0.0;
    double b_eps = 0.0;
};

HyperbolicityCertificate hyperbolicity_certificate(const SkewedSolution &phi, const SystemParams &p);

}  // namespace nafhn
