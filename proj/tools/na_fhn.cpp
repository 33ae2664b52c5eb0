#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "nafhn/continuation.hpp"
#include "nafhn/dynamics.hpp"
#include "nafhn/io.hpp"
#include "nafhn/lyapunov.hpp"
#include "nafhn/pipeline.hpp"
#include "nafhn/validation.hpp"

namespace fs = std::filesystem;
using namespace nafhn;

namespace {

constexpr const char *kVersion = "0.1.0";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ScientificFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::set<std::string> kKeys = {
    "a", "b", "eps", "delta", "nu", "K", "seed", "tol", "variant",
    "forcing.kind", "forcing.period", "forcing.amplitude",
    "simulate.t0", "simulate.t1", "simulate.initial", "simulate.sample_dt", "simulate.escape_radius",
    "simulate.layered_y",
    "pullback.t_a", "pullback.t_b", "pullback.n", "pullback.t_end", "pullback.transient", "pullback.sample_dt",
    "pullback.box_center", "pullback.box_half_width",
    "repelling.t_future", "repelling.n", "repelling.radius", "repelling.duration", "repelling.window",
    "circle.t_start", "circle.n", "circle.radius", "circle.duration",
    "skewed.horizon", "skewed.t_start", "skewed.t_end", "skewed.sample_dt", "skewed.x0",
    "continue.delta_start", "continue.delta_bound", "continue.attracting", "continue.step", "continue.step_min",
    "continue.step_max",
    "validate.branch", "validate.pieces", "validate.z0_pieces", "validate.r_bar",
    "spectrum.branch", "spectrum.stride", "spectrum.n_periods", "spectrum.warmup_periods", "spectrum.delta_lo",
    "spectrum.delta_hi", "spectrum.initial", "spectrum.t0", "spectrum.period",
    "floquet.orbit",
    "averaged.y_lo", "averaged.y_hi", "averaged.y0", "averaged.tau_end", "averaged.grid_points",
    "trapping.forcing_bound", "trapping.samples",
    "figure.branch_dir", "figure.validate",
};

struct Context {
    Config cfg;
    fs::path out;
    json summary = json::object();
};

std::vector<double> parse_list(const Config &cfg, const std::string &key, std::vector<double> fallback) {
    if (!cfg.has(key)) return fallback;
    std::vector<double> out;
    std::stringstream ss(cfg.get_string(key, ""));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto a = item.find_first_not_of(' ');
        const auto b = item.find_last_not_of(' ');
        const std::string tok = a == std::string::npos ? "" : item.substr(a, b - a + 1);
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw ConfigError("key '" + key + "': '" + tok + "' is not a number", key);
        out.push_back(v);
    }
    return out;
}

int order(const Config &cfg) {
    const int K = cfg.get_int("K", 80);
    if (K < 1) throw ConfigError("K must be positive", "K");
    return K;
}

double nu(const Config &cfg) {
    const double v = cfg.get_double("nu", 1.05);
    if (!(v > 1.0)) throw ConfigError("nu must exceed 1", "nu");
    return v;
}

ForcingSignal make_forcing(const Config &cfg, const SystemParams &p) {
    ForcingSignal base = ForcingSignal::periodic_cosine(1.0, 30.0);
    if (cfg.get_string("forcing.kind", "") == "twin-fhn-orbit") {
        SystemParams q = p;
        q.delta = 0.0;
        const FhnCycle cyc = fhn_cycle(q, order(cfg));
        return ForcingSignal::twin_orbit(cyc.v, cyc.omega);
    }
    return cfg.forcing(base);
}

Variant variant(const Config &cfg, Variant fallback) {
    if (!cfg.has("variant")) return fallback;
    try {
        return variant_from_string(cfg.get_string("variant", ""));
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what(), "variant");
    }
}

json trajectory_summary(const Trajectory &tr) {
    json j{{"samples", tr.size()}, {"blew_up", tr.blew_up}};
    if (tr.blew_up) j["blowup_time"] = tr.blowup_time;
    if (tr.size()) j["final_state"] = tr.back();
    return j;
}

int cmd_simulate(Context &c) {
    const SystemParams p = c.cfg.params();
    const ForcingSignal v = make_forcing(c.cfg, p);
    const Variant var = variant(c.cfg, Variant::PlanarNonautonomous);
    const double t0 = c.cfg.get_double("simulate.t0", 0.0);
    const double t1 = c.cfg.get_double("simulate.t1", 100.0);
    std::vector<double> x0 = parse_list(c.cfg, "simulate.initial", std::vector<double>(state_dimension(var), 0.1));
    if (static_cast<int>(x0.size()) != state_dimension(var))
        throw ConfigError("simulate.initial must have " + std::to_string(state_dimension(var)) + " entries",
                          "simulate.initial");
    IntegratorOptions io;
    io.sample_dt = c.cfg.get_double("simulate.sample_dt", 0.1);
    io.escape_radius = c.cfg.get_double("simulate.escape_radius", 1e3);
    const Trajectory tr = integrate(var, p, v, x0, t0, t1, c.cfg.get_double("tol", 1e-10), io,
                                    c.cfg.get_double("simulate.layered_y", 0.0));
    write_trajectory_csv(c.out / "trajectory.csv", tr);
    c.summary["trajectory"] = trajectory_summary(tr);
    return 0;
}

int run_pullback(const Config &cfg, const SystemParams &p, const ForcingSignal &v, const fs::path &dir,
                 json &summary) {
    const Variant var = variant(cfg, Variant::PlanarNonautonomous);
    const int dim = state_dimension(var);
    InitBox box;
    box.center = parse_list(cfg, "pullback.box_center", std::vector<double>(dim, 0.0));
    box.half_width = parse_list(cfg, "pullback.box_half_width", std::vector<double>(dim, 2.0));
    if (static_cast<int>(box.center.size()) != dim || static_cast<int>(box.half_width.size()) != dim)
        throw ConfigError("pullback box has the wrong dimension", "pullback.box_center");
    EnsembleOptions eo;
    eo.t_end = cfg.get_double("pullback.t_end", 100.0);
    eo.sample_dt = cfg.get_double("pullback.sample_dt", 0.1);
    eo.tol = cfg.get_double("tol", 1e-9);
    eo.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    const EnsembleResult e =
        pullback_ensemble(var, p, v, cfg.get_double("pullback.t_a", -200.0), cfg.get_double("pullback.t_b", -100.0),
                          cfg.get_int("pullback.n", 100), box, cfg.get_double("pullback.transient", 0.0), eo);
    json manifest;
    manifest["transient_cutoff"] = e.transient_cutoff;
    manifest["members"] = json::array();
    for (std::size_t i = 0; i < e.trajectories.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "member_%04zu.csv", i);
        write_trajectory_csv(dir / name, e.trajectories[i]);
        json m{{"file", name}, {"start_time", e.start_times[i]}, {"blew_up", e.trajectories[i].blew_up}};
        if (i < e.failures.size() && !e.failures[i].empty()) m["failure"] = e.failures[i];
        manifest["members"].push_back(m);
    }
    write_json(dir / "manifest.json", manifest);
    summary["members"] = e.trajectories.size();
    summary["max_pairwise_distance"] = max_pairwise_distance(e);
    return 0;
}

int cmd_pullback(Context &c) {
    const SystemParams p = c.cfg.params();
    return run_pullback(c.cfg, p, make_forcing(c.cfg, p), c.out, c.summary);
}

int run_repelling(const Config &cfg, const SystemParams &p, const ForcingSignal &v, const fs::path &dir,
                  json &summary) {
    RepellingOptions ro;
    ro.radius = cfg.get_double("repelling.radius", ro.radius);
    ro.duration = cfg.get_double("repelling.duration", ro.duration);
    ro.window = cfg.get_double("repelling.window", ro.window);
    const RepellingResult r = repelling_solution(Variant::PlanarNonautonomous, p, v,
                                                 cfg.get_double("repelling.t_future", 20100.0),
                                                 cfg.get_int("repelling.n", 20), ro);
    summary["repelling"] = {{"outcome", r.outcome == RepellingOutcome::Found ? "found" : "absent"},
                            {"blown_up", r.blown_up},
                            {"total", r.total}};
    if (r.outcome == RepellingOutcome::Found) write_trajectory_csv(dir / "repelling.csv", r.solution);
    const CircleBlowup cb = circle_backward_blowup(p, v, cfg.get_double("circle.t_start", 200.0 / 3.0),
                                                   cfg.get_double("circle.radius", 0.3), cfg.get_int("circle.n", 50),
                                                   cfg.get_double("circle.duration", 300.0));
    summary["circle"] = {{"blown_up", cb.blown_up}, {"total", cb.total}, {"fraction", cb.fraction()}};
    return 0;
}

int cmd_repelling(Context &c) {
    const SystemParams p = c.cfg.params();
    return run_repelling(c.cfg, p, make_forcing(c.cfg, p), c.out, c.summary);
}

int run_skewed(const Config &cfg, const SystemParams &p, const ForcingSignal &v, const fs::path &dir,
               json &summary) {
    SkewedOptions so;
    so.t_start = cfg.get_double("skewed.t_start", so.t_start);
    so.t_end = cfg.get_double("skewed.t_end", so.t_end);
    so.sample_dt = cfg.get_double("skewed.sample_dt", so.sample_dt);
    so.x0 = cfg.get_double("skewed.x0", so.x0);
    const SkewedSolution s = skewed_hyperbolic_solution(p, v, cfg.get_double("skewed.horizon", 400.0), so);
    write_trajectory_csv(dir / "skewed.csv", s.phi);
    summary["alpha"] = s.alpha;
    summary["psi_bound"] = s.psi_bound;
    try {
        const HyperbolicityCertificate h = hyperbolicity_certificate(s, p);
        const json cert{{"K", h.K}, {"decay", h.decay}, {"alpha", h.alpha}, {"b_eps", h.b_eps}};
        write_json(dir / "hyperbolicity.json", cert);
        summary["certificate"] = cert;
    } catch (const HyperbolicityFailure &e) {
        summary["certificate_failure"] = e.what();
        throw ScientificFailure(e.what());
    } catch (const SmallnessViolated &e) {
        summary["certificate_failure"] = e.what();
        throw ScientificFailure(e.what());
    }
    return 0;
}

int cmd_skewed(Context &c) {
    SystemParams p = c.cfg.params();
    p.delta = 1.0;
    return run_skewed(c.cfg, p, make_forcing(c.cfg, p), c.out, c.summary);
}

BranchRunOptions branch_options(const Config &cfg) {
    BranchRunOptions o;
    o.K = order(cfg);
    o.nu = nu(cfg);
    o.continuation.step = cfg.get_double("continue.step", o.continuation.step);
    o.continuation.step_min = cfg.get_double("continue.step_min", o.continuation.step_min);
    o.continuation.step_max = cfg.get_double("continue.step_max", o.continuation.step_max);
    o.bounds.pieces = cfg.get_int("validate.pieces", o.bounds.pieces);
    o.bounds.z0_pieces = cfg.get_int("validate.z0_pieces", o.bounds.z0_pieces);
    o.bounds.r_bar = cfg.get_double("validate.r_bar", o.bounds.r_bar);
    return o;
}

json certificates_json(const BranchValidation &v) {
    json arr = json::array();
    for (const auto &cert : v.certificates) arr.push_back(certificate_to_json(cert));
    return arr;
}

json branch_summary(const BranchRun &r) {
    json j{{"points", r.branch.points.size()},
           {"delta_first", r.branch.points.front().delta},
           {"delta_last", r.branch.points.back().delta},
           {"continuation", to_string(r.branch.termination)},
           {"termination_delta", r.termination_delta},
           {"termination_reason", r.termination_reason}};
    if (r.validated) j["validation"] = validation_to_json(r.validation);
    return j;
}

void write_run(const fs::path &dir, const BranchRun &r, const SystemParams &p, double nu_value) {
    write_branch(dir, r.branch, p, nu_value);
    if (r.validated) {
        write_json(dir / "certificates.json", certificates_json(r.validation));
        write_json(dir / "validation.json", validation_to_json(r.validation));
    }
}

int cmd_continue(Context &c) {
    SystemParams p = c.cfg.params({0.0, 0.5, 0.1, 0.0});
    const BranchRunOptions o = [&] {
        BranchRunOptions b = branch_options(c.cfg);
        b.validate = false;
        return b;
    }();
    const double d0 = c.cfg.get_double("continue.delta_start", 0.1);
    const double bound = c.cfg.get_double("continue.delta_bound", 1.0);
    const BranchRun r = continue_and_validate(p, d0, c.cfg.get_bool("continue.attracting", false), bound, o);
    write_branch(c.out / "branch", r.branch, p, o.nu);
    c.summary["branch"] = branch_summary(r);
    return 0;
}

int cmd_validate(Context &c) {
    if (!c.cfg.has("validate.branch")) throw ConfigError("validate needs validate.branch", "validate.branch");
    const BranchFile bf = read_branch(c.cfg.get_string("validate.branch", ""));
    const BranchRunOptions o = branch_options(c.cfg);
    const BranchValidation v = validate_branch(bf.branch, bf.params, NormWeight(bf.nu), o.bounds);
    write_json(c.out / "certificates.json", certificates_json(v));
    write_json(c.out / "validation.json", validation_to_json(v));
    c.summary["validation"] = validation_to_json(v);
    if (v.failure_index) {
        std::cerr << "validation failed at segment " << *v.failure_index << ": " << v.failure << '\n';
        throw ScientificFailure("validation failed at segment " + std::to_string(*v.failure_index));
    }
    return 0;
}

LyapunovOptions lyapunov_options(const Config &cfg) {
    LyapunovOptions o;
    o.n_periods = cfg.get_int("spectrum.n_periods", o.n_periods);
    o.warmup_periods = cfg.get_int("spectrum.warmup_periods", o.warmup_periods);
    return o;
}

json spectra_json(const std::vector<SpectrumSample> &s) {
    json arr = json::array();
    for (const auto &x : s)
        arr.push_back({{"delta", x.delta},
                       {"exponents", x.spectrum.exponents},
                       {"block_exponents", x.spectrum.block_exponents},
                       {"mean_divergence", x.spectrum.mean_divergence}});
    return arr;
}

void write_spectra(const fs::path &path, const std::vector<SpectrumSample> &s) {
    std::vector<double> d;
    std::vector<SpectrumEstimate> e;
    for (const auto &x : s) {
        d.push_back(x.delta);
        e.push_back(x.spectrum);
    }
    write_spectrum_csv(path, d, e);
}

int cmd_spectrum(Context &c) {
    const LyapunovOptions lo = lyapunov_options(c.cfg);
    if (c.cfg.has("spectrum.branch")) {
        const BranchFile bf = read_branch(c.cfg.get_string("spectrum.branch", ""));
        const auto s = branch_spectra(bf.branch, bf.params, c.cfg.get_int("spectrum.stride", 1),
                                      c.cfg.get_double("spectrum.delta_lo", 0.0),
                                      c.cfg.get_double("spectrum.delta_hi", 1.0), lo);
        write_spectra(c.out / "spectrum.csv", s);
        c.summary["spectra"] = spectra_json(s);
        return 0;
    }
    const SystemParams p = c.cfg.params();
    const ForcingSignal v = make_forcing(c.cfg, p);
    const Variant var = variant(c.cfg, Variant::PlanarNonautonomous);
    const std::vector<double> x0 =
        parse_list(c.cfg, "spectrum.initial", std::vector<double>(state_dimension(var), 0.1));
    const double period = c.cfg.get_double("spectrum.period", v.base_period() > 0 ? v.base_period() : 30.0);
    const SpectrumEstimate s =
        lyapunov_spectrum(var, p, v, x0, c.cfg.get_double("spectrum.t0", 0.0), period, lo);
    write_spectrum_csv(c.out / "spectrum.csv", {p.delta}, {s});
    c.summary["exponents"] = s.exponents;
    c.summary["mean_divergence"] = s.mean_divergence;
    return 0;
}

json floquet_json(const FloquetResult &f) {
    json mus = json::array();
    for (const cplx &m : f.multipliers) mus.push_back({m.real(), m.imag()});
    json j{{"multipliers", mus}, {"exponents", f.exponents}, {"period", f.period}};
    if (f.divergence_exponent) j["divergence_exponent"] = *f.divergence_exponent;
    return j;
}

int cmd_floquet(Context &c) {
    const std::string src = c.cfg.get_string("floquet.orbit", "fhn-cycle");
    FloquetResult f;
    if (src == "fhn-cycle") {
        SystemParams p = c.cfg.params({0.0, 0.7, 0.1, 0.0});
        p.delta = 0.0;
        f = floquet_multipliers(Variant::AutonomousFhn, p, cycle_as_branch_point(fhn_cycle(p, order(c.cfg))));
    } else {
        const BranchPoint x = point_from_json(read_json(src));
        f = floquet_multipliers(variant(c.cfg, Variant::Coupled4d), c.cfg.params({0.0, 0.5, 0.1, x.delta}), x);
    }
    const json j = floquet_json(f);
    write_json(c.out / "floquet.json", j);
    c.summary["floquet"] = j;
    return 0;
}

int cmd_averaged(Context &c) {
    const SystemParams p = c.cfg.params({0.0, 0.7, 1e-3, 0.9});
    const ForcingSignal v = make_forcing(c.cfg, p);
    AveragingOptions ao;
    ao.grid_points = c.cfg.get_int("averaged.grid_points", ao.grid_points);
    const AveragedFlow f =
        averaged_slow_flow(p, v, c.cfg.get_double("averaged.y_lo", -1.2), c.cfg.get_double("averaged.y_hi", 1.2),
                           c.cfg.get_double("averaged.y0", 0.8), c.cfg.get_double("averaged.tau_end", 2.0), ao);
    write_trajectory_csv(c.out / "slow.csv", f.slow);
    Trajectory m;
    for (std::size_t i = 0; i < f.y_grid.size(); ++i) {
        m.times.push_back(f.y_grid[i]);
        m.states.push_back({f.mean_x[i]});
    }
    write_trajectory_csv(c.out / "mean_x.csv", m);
    c.summary["slow"] = trajectory_summary(f.slow);
    return 0;
}

int cmd_trapping(Context &c) {
    const SystemParams p = c.cfg.params();
    const ForcingSignal v = make_forcing(c.cfg, p);
    const double bound = c.cfg.get_double("trapping.forcing_bound", v.bound());
    const double r = trapping_radius(p, bound);
    const int samples = c.cfg.get_int("trapping.samples", 10000);
    std::mt19937_64 rng(static_cast<std::uint64_t>(c.cfg.get_int("seed", 1)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int violations = 0;
    for (int i = 0; i < samples; ++i) {
        const double rr = r * (1.0 + 4.0 * unit(rng));
        const double th = 2.0 * std::numbers::pi * unit(rng);
        const double d = unit(rng);
        const double w = bound * (2.0 * unit(rng) - 1.0);
        if (!(radial_derivative(p, rr, th, d, w) < 0.0)) ++violations;
    }
    const json j{{"radius", r}, {"forcing_bound", bound}, {"samples", samples}, {"violations", violations}};
    write_json(c.out / "trapping.json", j);
    c.summary["trapping"] = j;
    if (violations) throw ScientificFailure(std::to_string(violations) + " sampled points violate r' < 0");
    return 0;
}

// Parameter presets for reproduce-figure.
Config preset(int figure) {
    Config c;
    switch (figure) {
    case 1:
        c.set("a", "0"), c.set("b", "0.7"), c.set("eps", "0.1");
        break;
    case 2:
        c.set("a", "0"), c.set("b", "0.7"), c.set("eps", "0.1"), c.set("delta", "0.07");
        c.set("forcing.kind", "quasi-periodic-two-tone"), c.set("forcing.amplitude", "1"),
            c.set("forcing.period", "30");
        c.set("pullback.t_a", "-200"), c.set("pullback.t_b", "-100"), c.set("pullback.n", "300"),
            c.set("pullback.t_end", "200");
        break;
    case 3:
        c.set("a", "0"), c.set("b", "0.7"), c.set("eps", "0.1");
        c.set("forcing.kind", "quasi-periodic-two-tone"), c.set("forcing.amplitude", "1"),
            c.set("forcing.period", "30");
        c.set("pullback.t_a", "-200"), c.set("pullback.t_b", "-100"), c.set("pullback.n", "300"),
            c.set("pullback.t_end", "200");
        break;
    case 4:
        c.set("a", "0"), c.set("b", "0.4"), c.set("eps", "0.1");
        c.set("pullback.t_a", "-200"), c.set("pullback.t_b", "50"), c.set("pullback.n", "500"),
            c.set("pullback.transient", "50"), c.set("pullback.t_end", "300");
        c.set("repelling.t_future", "20100"), c.set("repelling.n", "20");
        c.set("circle.t_start", "66.7"), c.set("circle.n", "50"), c.set("circle.radius", "0.3");
        break;
    case 5:
    case 6:
        c.set("a", "0"), c.set("b", "0.5"), c.set("eps", "0.1");
        break;
    default:
        throw UsageError("reproduce-figure accepts figures 1 to 6");
    }
    return c;
}

Config merged(const Config &base, const Config &over) {
    Config out = base;
    for (const auto &[k, v] : over.values()) out.set(k, v);
    return out;
}

int figure_1(Context &c) {
    SystemParams p = c.cfg.params();
    p.delta = 0.0;
    const FhnCycle cyc = fhn_cycle(p, order(c.cfg));
    const BranchPoint x = cycle_as_branch_point(cyc);
    Trajectory orbit;
    const double T = 2.0 * std::numbers::pi / cyc.omega;
    for (int i = 0; i <= 400; ++i) {
        const double t = T * i / 400.0;
        orbit.times.push_back(t);
        orbit.states.push_back({evaluate(cyc.u, cyc.omega, t), evaluate(cyc.v, cyc.omega, t)});
    }
    write_trajectory_csv(c.out / "cycle.csv", orbit);
    const ForcingSignal none;
    IntegratorOptions io;
    io.sample_dt = 0.1;
    int idx = 0;
    for (double x0 : {-2.5, 0.0, 2.5})
        for (double y0 : {-1.5, 0.0, 1.5}) {
            if (x0 == 0.0 && y0 == 0.0) continue;
            const Trajectory tr = integrate(Variant::AutonomousFhn, p, none, {x0, y0}, 0.0, 60.0, 1e-10, io);
            write_trajectory_csv(c.out / ("sample_" + std::to_string(idx++) + ".csv"), tr);
        }
    const FloquetResult f = floquet_multipliers(Variant::AutonomousFhn, p, x);
    write_json(c.out / "floquet.json", floquet_json(f));
    c.summary["period"] = T;
    c.summary["floquet"] = floquet_json(f);
    return 0;
}

int figure_2(Context &c) {
    const SystemParams p = c.cfg.params();
    const ForcingSignal v = make_forcing(c.cfg, p);
    json s;
    run_pullback(c.cfg, p, v, c.out / "ensemble", s);
    Config rc = c.cfg;
    if (!rc.has("circle.n")) rc.set("circle.n", "0");
    json r;
    run_repelling(rc, p, v, c.out, r);
    c.summary["ensemble"] = s;
    c.summary["repelling"] = r["repelling"];
    return 0;
}

int figure_3(Context &c) {
    for (double d : {1.0, 0.7}) {
        SystemParams p = c.cfg.params();
        p.delta = d;
        const ForcingSignal v = make_forcing(c.cfg, p);
        const std::string tag = d == 1.0 ? "delta_1.0" : "delta_0.7";
        json s;
        run_pullback(c.cfg, p, v, c.out / tag, s);
        c.summary[tag] = s;
    }
    SystemParams p = c.cfg.params();
    p.delta = 1.0;
    json sk;
    run_skewed(c.cfg, p, make_forcing(c.cfg, p), c.out / "skewed", sk);
    c.summary["skewed"] = sk;
    return 0;
}

int figure_4(Context &c) {
    const std::vector<std::pair<std::string, std::vector<double>>> cases = {
        {"periodic-cosine", {0.1, 0.6, 0.72}}, {"quasi-periodic-two-tone", {0.1, 0.35, 0.4}}};
    for (const auto &[kind, deltas] : cases) {
        Config cfg = c.cfg;
        cfg.set("forcing.kind", kind);
        for (double d : deltas) {
            cfg.set("delta", std::to_string(d));
            const SystemParams p = cfg.params();
            const ForcingSignal v = make_forcing(cfg, p);
            std::ostringstream tag;
            tag << kind << "/delta_" << d;
            json s;
            run_pullback(cfg, p, v, c.out / tag.str() / "ensemble", s);
            run_repelling(cfg, p, v, c.out / tag.str(), s);
            c.summary[tag.str()] = s;
        }
    }
    return 0;
}

std::pair<BranchRun, BranchRun> figure_5_runs(const Config &cfg, bool validate) {
    const SystemParams p = cfg.params();
    BranchRunOptions o = branch_options(cfg);
    o.validate = validate;
    BranchRun stable = continue_and_validate(p, 0.9, true, 0.0, o);
    BranchRun unstable = continue_and_validate(p, 0.1, false, 1.0, o);
    return {std::move(stable), std::move(unstable)};
}

int figure_5(Context &c) {
    const auto [stable, unstable] = figure_5_runs(c.cfg, c.cfg.get_bool("figure.validate", true));
    const SystemParams p = c.cfg.params();
    write_run(c.out / "stable", stable, p, nu(c.cfg));
    write_run(c.out / "unstable", unstable, p, nu(c.cfg));
    c.summary["stable"] = branch_summary(stable);
    c.summary["unstable"] = branch_summary(unstable);
    const bool complete = stable.validated && unstable.validated && stable.validation.certificates.size() &&
                          unstable.validation.certificates.size();
    if (!complete) throw ScientificFailure("a branch carries no certificates");
    return 0;
}

int figure_6(Context &c) {
    Branch stable, unstable;
    SystemParams p = c.cfg.params();
    if (c.cfg.has("figure.branch_dir")) {
        const fs::path d = c.cfg.get_string("figure.branch_dir", "");
        BranchFile s = read_branch(d / "stable");
        stable = std::move(s.branch);
        p = s.params;
        unstable = read_branch(d / "unstable").branch;
    } else {
        auto runs = figure_5_runs(c.cfg, false);
        stable = std::move(runs.first.branch);
        unstable = std::move(runs.second.branch);
    }
    const LyapunovOptions lo = lyapunov_options(c.cfg);
    const int stride = c.cfg.get_int("spectrum.stride", 4);
    const auto s = branch_spectra(stable, p, stride, 0.0, 1.0, lo);
    const auto u = branch_spectra(unstable, p, stride, 0.0, 1.0, lo);
    write_spectra(c.out / "spectrum_stable.csv", s);
    write_spectra(c.out / "spectrum_unstable.csv", u);
    c.summary["stable"] = spectra_json(s);
    c.summary["unstable"] = spectra_json(u);
    return 0;
}

std::string timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Continuation, validation and simulation of forced FitzHugh-Nagumo systems", "na-fhn"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = "out";
    int figure = 0;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "integrate one trajectory"},
        {"pullback", "pullback ensemble from a window of start times"},
        {"repelling", "backward search for the repelling solution"},
        {"skewed", "delta = 1 hyperbolic solution and its certificate"},
        {"continue", "continue and validate a branch of periodic orbits"},
        {"validate", "validate a stored branch directory"},
        {"spectrum", "Lyapunov spectra along a branch or a trajectory"},
        {"floquet", "Floquet multipliers of a periodic orbit"},
        {"averaged", "averaged slow flow"},
        {"trapping", "trapping radius with a randomized check"},
        {"reproduce-figure", "run a figure preset"}};
    for (const auto &[name, help] : commands) {
        CLI::App *sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->add_option("--out", out_dir, "output directory");
        sub->allow_extras();
        if (name == "reproduce-figure") sub->add_option("figure", figure, "figure number (1-6)")->required();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    const std::vector<std::string> extras = app.get_subcommands().front()->remaining();

    const auto start = std::chrono::steady_clock::now();
    Context ctx;
    ctx.out = out_dir;
    int code = 0;
    std::string error;
    try {
        Config overrides;
        for (std::size_t i = 0; i < extras.size(); ++i) {
            const std::string &arg = extras[i];
            if (arg.rfind("--", 0) != 0) throw UsageError("unexpected argument '" + arg + "'");
            const auto eq = arg.find('=');
            if (eq != std::string::npos) {
                overrides.set(arg.substr(2, eq - 2), arg.substr(eq + 1));
            } else {
                if (i + 1 >= extras.size()) throw UsageError("flag '" + arg + "' needs a value");
                overrides.set(arg.substr(2), extras[++i]);
            }
        }
        Config file = config_path.empty() ? Config{} : Config::load(config_path);
        ctx.cfg = merged(merged(command == "reproduce-figure" ? preset(figure) : Config{}, file), overrides);
        ctx.cfg.require_known(kKeys);
        fs::create_directories(ctx.out);

        if (command == "simulate") code = cmd_simulate(ctx);
        else if (command == "pullback") code = cmd_pullback(ctx);
        else if (command == "repelling") code = cmd_repelling(ctx);
        else if (command == "skewed") code = cmd_skewed(ctx);
        else if (command == "continue") code = cmd_continue(ctx);
        else if (command == "validate") code = cmd_validate(ctx);
        else if (command == "spectrum") code = cmd_spectrum(ctx);
        else if (command == "floquet") code = cmd_floquet(ctx);
        else if (command == "averaged") code = cmd_averaged(ctx);
        else if (command == "trapping") code = cmd_trapping(ctx);
        else if (figure == 1) code = figure_1(ctx);
        else if (figure == 2) code = figure_2(ctx);
        else if (figure == 3) code = figure_3(ctx);
        else if (figure == 4) code = figure_4(ctx);
        else if (figure == 5) code = figure_5(ctx);
        else code = figure_6(ctx);
    } catch (const ConfigError &e) {
        error = std::string("usage error (key '") + e.key + "'): " + e.what();
        code = 2;
    } catch (const UsageError &e) {
        error = std::string("usage error: ") + e.what();
        code = 2;
    } catch (const FormatError &e) {
        error = std::string("input error: ") + e.what();
        code = 1;
    } catch (const std::invalid_argument &e) {
        error = std::string("usage error: ") + e.what();
        code = 2;
    } catch (const std::exception &e) {
        error = std::string("scientific failure: ") + e.what();
        code = 1;
    }
    if (!error.empty()) std::cerr << error << '\n';

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (code != 2 || fs::exists(ctx.out)) {
        json run;
        run["command"] = command;
        if (command == "reproduce-figure") run["figure"] = figure;
        run["config"] = ctx.cfg.values();
        run["versions"] = {{"na-fhn", kVersion},
                           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                         "." + std::to_string(EIGEN_MINOR_VERSION)},
                           {"compiler", __VERSION__}};
        run["started"] = timestamp();
        run["wall_time_seconds"] = wall;
        run["exit_code"] = code;
        if (!error.empty()) run["error"] = error;
        run["summary"] = ctx.summary;
        try {
            fs::create_directories(ctx.out);
            write_json(ctx.out / "run.json", run);
        } catch (const std::exception &e) {
            std::cerr << "cannot write run.json: " << e.what() << '\n';
        }
    }
    return code;
}
