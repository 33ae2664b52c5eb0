#include "nafhn/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nafhn {

namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::ofstream open_out(const fs::path &path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

const json &field(const json &j, const char *key) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
    return j.at(key);
}

double number(const json &j, const char *key) {
    const json &v = field(j, key);
    if (!v.is_number()) throw FormatError(std::string("field '") + key + "' is not a number");
    return v.get<double>();
}

int integer(const json &j, const char *key) {
    const json &v = field(j, key);
    if (!v.is_number_integer()) throw FormatError(std::string("field '") + key + "' is not an integer");
    return v.get<int>();
}

std::string trim(const std::string &s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string point_file(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%05zu.json", i);
    return buf;
}

}  // namespace

json sequence_to_json(const FourierCoefficients &c) {
    json arr = json::array();
    for (const cplx &z : c.entries()) arr.push_back({z.real(), z.imag()});
    return arr;
}

FourierCoefficients sequence_from_json(const json &j) {
    if (!j.is_array() || j.size() % 2 != 1) throw FormatError("coefficient array must have odd length");
    std::vector<cplx> entries;
    entries.reserve(j.size());
    for (const json &e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw FormatError("coefficient entries must be [re, im] pairs");
        entries.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    try {
        return FourierCoefficients::from_entries(std::move(entries));
    } catch (const std::invalid_argument &e) {
        throw FormatError(e.what());
    }
}

json vector_to_json(const Eigen::VectorXcd &v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back({v(i).real(), v(i).imag()});
    return arr;
}

Eigen::VectorXcd vector_from_json(const json &j) {
    if (!j.is_array()) throw FormatError("vector must be an array of [re, im] pairs");
    Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json &e = j[i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw FormatError("vector entries must be [re, im] pairs");
        v(static_cast<Eigen::Index>(i)) = cplx(e[0].get<double>(), e[1].get<double>());
    }
    return v;
}

json point_to_json(const BranchPoint &x) {
    json j;
    j["omega"] = x.omega;
    j["delta"] = x.delta;
    j["K"] = x.order();
    for (int i = 0; i < 4; ++i) j["c" + std::to_string(i + 1)] = sequence_to_json(x.c[i]);
    return j;
}

BranchPoint point_from_json(const json &j) {
    BranchPoint x;
    x.omega = number(j, "omega");
    x.delta = number(j, "delta");
    const int K = integer(j, "K");
    for (int i = 0; i < 4; ++i) {
        const std::string key = "c" + std::to_string(i + 1);
        x.c[i] = sequence_from_json(field(j, key.c_str()));
        if (x.c[i].order() != K) throw FormatError("block " + key + " does not have order K");
    }
    try {
        x.validate();
    } catch (const std::invalid_argument &e) {
        throw FormatError(e.what());
    }
    return x;
}

json params_to_json(const SystemParams &p) {
    return {{"a", p.a}, {"b", p.b}, {"eps", p.eps}, {"delta", p.delta}};
}

SystemParams params_from_json(const json &j) {
    SystemParams p;
    p.a = number(j, "a");
    p.b = number(j, "b");
    p.eps = number(j, "eps");
    p.delta = number(j, "delta");
    return p;
}

json forcing_to_json(const ForcingSignal &v) {
    json j{{"kind", to_string(v.kind)}, {"amplitude", v.amplitude}, {"period", v.period}};
    if (v.kind == ForcingKind::TwinFhnOrbit) {
        j["omega"] = v.omega;
        j["orbit"] = sequence_to_json(v.orbit);
    }
    return j;
}

ForcingSignal forcing_from_json(const json &j) {
    ForcingSignal v;
    try {
        v.kind = forcing_kind_from_string(field(j, "kind").get<std::string>());
    } catch (const std::invalid_argument &e) {
        throw FormatError(e.what());
    }
    v.amplitude = number(j, "amplitude");
    v.period = number(j, "period");
    if (v.kind == ForcingKind::TwinFhnOrbit) {
        v.omega = number(j, "omega");
        v.orbit = sequence_from_json(field(j, "orbit"));
    }
    return v;
}

json certificate_to_json(const ValidationCertificate &c) {
    json j;
    j["segment_index"] = c.segment_index;
    j["delta_lo"] = c.delta_lo();
    j["delta_hi"] = c.delta_hi();
    j["Y"] = c.Y;
    j["Z0"] = c.Z0;
    j["Z1"] = c.Z1;
    j["Z2"] = c.Z2;
    j["r_star"] = c.r_star;
    j["r_max"] = c.r_max;
    j["K"] = c.K;
    j["nu"] = c.nu;
    j["lo"] = point_to_json(c.lo);
    j["hi"] = point_to_json(c.hi);
    return j;
}

ValidationCertificate certificate_from_json(const json &j) {
    ValidationCertificate c;
    c.segment_index = integer(j, "segment_index");
    c.Y = number(j, "Y");
    c.Z0 = number(j, "Z0");
    c.Z1 = number(j, "Z1");
    c.Z2 = number(j, "Z2");
    c.r_star = number(j, "r_star");
    c.r_max = number(j, "r_max");
    c.K = integer(j, "K");
    c.nu = number(j, "nu");
    c.lo = point_from_json(field(j, "lo"));
    c.hi = point_from_json(field(j, "hi"));
    if (c.delta_lo() != number(j, "delta_lo") || c.delta_hi() != number(j, "delta_hi"))
        throw FormatError("certificate delta range does not match its endpoints");
    return c;
}

json validation_to_json(const BranchValidation &v) {
    json j;
    j["certified_segments"] = v.certificates.size();
    j["delta_begin"] = v.delta_begin;
    j["delta_end"] = v.delta_end;
    j["max_r_star"] = v.max_r_star;
    j["complete"] = !v.failure_index.has_value();
    if (v.failure_index) {
        j["failure_index"] = *v.failure_index;
        j["failure"] = v.failure;
        j["failure_bounds"] = {{"Y", v.failure_bounds.Y},
                               {"Z0", v.failure_bounds.Z0},
                               {"Z1", v.failure_bounds.Z1},
                               {"Z2", v.failure_bounds.Z2}};
    }
    return j;
}

void write_json(const fs::path &path, const json &j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

json read_json(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_branch(const fs::path &dir, const Branch &branch, const SystemParams &p, double nu) {
    if (branch.tangents.size() != branch.points.size()) throw std::invalid_argument("branch tangents missing");
    fs::create_directories(dir / "points");
    json meta;
    meta["termination"] = to_string(branch.termination);
    meta["detail"] = branch.detail;
    meta["n_points"] = branch.points.size();
    meta["K"] = branch.points.empty() ? 0 : branch.points.front().order();
    meta["nu"] = nu;
    meta["params"] = params_to_json(p);
    if (!branch.points.empty()) {
        meta["delta_first"] = branch.points.front().delta;
        meta["delta_last"] = branch.points.back().delta;
    }
    write_json(dir / "branch.json", meta);

    std::ofstream csv = open_out(dir / "points.csv");
    csv << "index,omega,delta,residual,step\n";
    for (std::size_t i = 0; i < branch.points.size(); ++i) {
        const double res = i < branch.residuals.size() ? branch.residuals[i] : 0.0;
        const double step = i < branch.step_history.size() ? branch.step_history[i] : 0.0;
        csv << i << ',' << fmt(branch.points[i].omega) << ',' << fmt(branch.points[i].delta) << ',' << fmt(res)
            << ',' << fmt(step) << '\n';
        json pj = point_to_json(branch.points[i]);
        pj["tangent"] = vector_to_json(branch.tangents[i]);
        write_json(dir / "points" / point_file(i), pj);
    }
}

BranchFile read_branch(const fs::path &dir) {
    const json meta = read_json(dir / "branch.json");
    BranchFile out;
    out.params = params_from_json(field(meta, "params"));
    out.nu = number(meta, "nu");
    try {
        out.branch.termination = termination_from_string(field(meta, "termination").get<std::string>());
    } catch (const std::invalid_argument &e) {
        throw FormatError(e.what());
    }
    out.branch.detail = field(meta, "detail").get<std::string>();
    const int n = integer(meta, "n_points");
    if (n < 0) throw FormatError("negative point count");

    std::ifstream csv(dir / "points.csv");
    if (!csv) throw FormatError("cannot read " + (dir / "points.csv").string());
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(cell);
        if (cols.size() != 5) throw FormatError("points.csv row has " + std::to_string(cols.size()) + " columns");
        out.branch.residuals.push_back(std::stod(cols[3]));
        out.branch.step_history.push_back(std::stod(cols[4]));
    }
    if (static_cast<int>(out.branch.residuals.size()) != n) throw FormatError("points.csv row count mismatch");

    for (int i = 0; i < n; ++i) {
        const json pj = read_json(dir / "points" / point_file(static_cast<std::size_t>(i)));
        BranchPoint x = point_from_json(pj);
        Eigen::VectorXcd t = vector_from_json(field(pj, "tangent"));
        if (t.size() != Layout(x.order()).N()) throw FormatError("tangent length does not match K");
        out.branch.points.push_back(std::move(x));
        out.branch.tangents.push_back(std::move(t));
    }
    return out;
}

void write_sequence_csv(const fs::path &path, const FourierCoefficients &c) {
    std::ofstream out = open_out(path);
    out << "k,re,im\n";
    const int K = c.order();
    for (int k = -K; k <= K; ++k) out << k << ',' << fmt(c[k].real()) << ',' << fmt(c[k].imag()) << '\n';
}

void write_trajectory_csv(const fs::path &path, const Trajectory &tr) {
    std::ofstream out = open_out(path);
    out << 't';
    for (int i = 0; i < tr.dim(); ++i) out << ",x" << i + 1;
    out << ",blew_up\n";
    for (std::size_t r = 0; r < tr.size(); ++r) {
        out << fmt(tr.times[r]);
        for (double v : tr.states[r]) out << ',' << fmt(v);
        const bool at_blowup = tr.blew_up && r + 1 == tr.size();
        out << ',' << (at_blowup ? 1 : 0) << '\n';
    }
}

void write_spectrum_csv(const fs::path &path, const std::vector<double> &deltas,
                        const std::vector<SpectrumEstimate> &spectra) {
    if (deltas.size() != spectra.size()) throw std::invalid_argument("delta and spectrum counts differ");
    std::size_t n = 0;
    for (const auto &s : spectra) n = std::max(n, s.exponents.size());
    std::ofstream out = open_out(path);
    out << "delta";
    for (std::size_t i = 0; i < n; ++i) out << ",le" << i + 1;
    out << '\n';
    for (std::size_t r = 0; r < deltas.size(); ++r) {
        out << fmt(deltas[r]);
        for (std::size_t i = 0; i < n; ++i)
            out << ',' << (i < spectra[r].exponents.size() ? fmt(spectra[r].exponents[i]) : std::string());
        out << '\n';
    }
}

Config Config::parse(const std::string &text) {
    Config cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section", line);
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value", line);
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key", line);
        cfg.set(section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
    }
    return cfg;
}

Config Config::load(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string(), path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void Config::set(const std::string &key, const std::string &value) { values_[key] = value; }

std::string Config::get_string(const std::string &key, const std::string &fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string &key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string &s = it->second;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("key '" + key + "': '" + s + "' is not a number", key);
    return v;
}

int Config::get_int(const std::string &key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string &s = it->second;
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("key '" + key + "': '" + s + "' is not an integer", key);
    return v;
}

bool Config::get_bool(const std::string &key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("key '" + key + "': '" + it->second + "' is not a boolean", key);
}

void Config::require_known(const std::set<std::string> &allowed) const {
    for (const auto &[key, value] : values_)
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "'", key);
}

SystemParams Config::params(const SystemParams &fallback) const {
    SystemParams p = fallback;
    p.a = get_double("a", p.a);
    p.b = get_double("b", p.b);
    p.eps = get_double("eps", p.eps);
    p.delta = get_double("delta", p.delta);
    try {
        p.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what(), "params");
    }
    return p;
}

ForcingSignal Config::forcing(const ForcingSignal &fallback) const {
    ForcingSignal v = fallback;
    try {
        if (has("forcing.kind")) v.kind = forcing_kind_from_string(get_string("forcing.kind", ""));
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what(), "forcing.kind");
    }
    v.period = get_double("forcing.period", v.period);
    v.amplitude = get_double("forcing.amplitude", v.amplitude);
    if (v.kind == ForcingKind::TwinFhnOrbit && v.orbit.order() == 0)
        throw ConfigError("twin-fhn-orbit forcing is built from a computed cycle, not from config", "forcing.kind");
    try {
        v.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what(), "forcing");
    }
    return v;
}

}  // namespace nafhn
