#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nafhn/continuation.hpp"
#include "nafhn/lyapunov.hpp"
#include "nafhn/problem.hpp"
#include "nafhn/validation.hpp"

namespace nafhn {

struct BranchRunOptions {
    int K = 80;
    double nu = 1.05;
    ContinuationOptions continuation = [] {
        ContinuationOptions o;
        o.step = 1e-3;
        o.step_max = 0.01;
        return o;
    }();
    BoundOptions bounds;
    NewtonOptions seed_newton;
    bool validate = true;
};

struct BranchRun {
    std::string label;
    Branch branch;
    BranchValidation validation;
    bool validated = false;
    // Last certified delta when validation stops early, otherwise the last continued delta.
    double termination_delta = 0.0;
    std::string termination_reason;
};

// Seeds at delta_start (attracting or repelling orbit), continues toward delta_bound and
// validates the resulting segments in order.
BranchRun continue_and_validate(const SystemParams &p, double delta_start, bool attracting, double delta_bound,
                                const BranchRunOptions &opts = {});

struct SpectrumSample {
    double delta = 0.0;
    SpectrumEstimate spectrum;
};

// Lyapunov spectra at every stride-th point of a branch, restricted to [delta_lo, delta_hi].
std::vector<SpectrumSample> branch_spectra(const Branch &branch, const SystemParams &p, int stride,
                                           double delta_lo, double delta_hi, const LyapunovOptions &opts = {});

// Number of exponents strictly above the threshold.
int count_above(const SpectrumEstimate &s, double threshold);

}  // namespace nafhn
