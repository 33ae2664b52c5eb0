#include "nafhn/pipeline.hpp"

#include <algorithm>

namespace nafhn {

BranchRun continue_and_validate(const SystemParams &p, double delta_start, bool attracting, double delta_bound,
                                const BranchRunOptions &opts) {
    BranchRun run;
    run.label = attracting ? "attracting" : "repelling";
    NewtonOptions newton = opts.seed_newton;
    newton.nu = opts.nu;
    const BranchPoint seed = seed_branch_point(p, delta_start, opts.K, attracting, newton);
    const int direction = delta_bound >= delta_start ? 1 : -1;
    const double lo = std::min(delta_start, delta_bound);
    const double hi = std::max(delta_start, delta_bound);
    ContinuationOptions copts = opts.continuation;
    copts.newton.nu = opts.nu;
    run.branch = continue_branch(seed, p, direction, lo, hi, copts);
    run.termination_delta = run.branch.points.back().delta;
    run.termination_reason = to_string(run.branch.termination);
    if (!opts.validate) return run;
    run.validation = validate_branch(run.branch, p, NormWeight(opts.nu), opts.bounds);
    run.validated = true;
    if (run.validation.failure_index) {
        run.termination_delta = run.validation.delta_end;
        run.termination_reason = "validation-failure";
    }
    return run;
}

std::vector<SpectrumSample> branch_spectra(const Branch &branch, const SystemParams &p, int stride,
                                           double delta_lo, double delta_hi, const LyapunovOptions &opts) {
    if (stride <= 0) throw std::invalid_argument("stride must be positive");
    std::vector<SpectrumSample> out;
    for (std::size_t i = 0; i < branch.points.size(); i += static_cast<std::size_t>(stride)) {
        const BranchPoint &x = branch.points[i];
        if (x.delta < delta_lo || x.delta > delta_hi) continue;
        out.push_back({x.delta, lyapunov_spectrum(Variant::Coupled4d, p, x, opts)});
    }
    return out;
}

int count_above(const SpectrumEstimate &s, double threshold) {
    return static_cast<int>(std::count_if(s.exponents.begin(), s.exponents.end(),
                                          [&](double e) { return e > threshold; }));
}

}  // namespace nafhn
