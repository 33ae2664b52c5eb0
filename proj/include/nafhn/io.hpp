#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nafhn/continuation.hpp"
#include "nafhn/dynamics.hpp"
#include "nafhn/fourier.hpp"
#include "nafhn/lyapunov.hpp"
#include "nafhn/problem.hpp"
#include "nafhn/validation.hpp"

namespace nafhn {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Coefficients as [re, im] pairs ordered k = -K..K.
json sequence_to_json(const FourierCoefficients &c);
FourierCoefficients sequence_from_json(const json &j);

json vector_to_json(const Eigen::VectorXcd &v);
Eigen::VectorXcd vector_from_json(const json &j);

json point_to_json(const BranchPoint &x);
BranchPoint point_from_json(const json &j);

json params_to_json(const SystemParams &p);
SystemParams params_from_json(const json &j);

json forcing_to_json(const ForcingSignal &v);
ForcingSignal forcing_from_json(const json &j);

json certificate_to_json(const ValidationCertificate &c);
ValidationCertificate certificate_from_json(const json &j);

json validation_to_json(const BranchValidation &v);

struct BranchFile {
    Branch branch;
    SystemParams params;
    double nu = 1.05;
};

// Directory layout: branch.json (metadata), points.csv, points/NNNNN.json (coefficients and tangent).
void write_branch(const std::filesystem::path &dir, const Branch &branch, const SystemParams &p, double nu);
BranchFile read_branch(const std::filesystem::path &dir);

// Rows k, re, im.
void write_sequence_csv(const std::filesystem::path &path, const FourierCoefficients &c);
// Rows t, x1..xn, blew_up (1 on the sample at the blow-up time).
void write_trajectory_csv(const std::filesystem::path &path, const Trajectory &tr);
// Rows delta, le1..len.
void write_spectrum_csv(const std::filesystem::path &path, const std::vector<double> &deltas,
                        const std::vector<SpectrumEstimate> &spectra);

void write_json(const std::filesystem::path &path, const json &j);
json read_json(const std::filesystem::path &path);

// Flat key = value configuration; "[section]" lines prefix later keys with "section.".
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string &msg, std::string key) : std::runtime_error(msg), key(std::move(key)) {}
    std::string key;
};

class Config {
public:
    static Config parse(const std::string &text);
    static Config load(const std::filesystem::path &path);

    void set(const std::string &key, const std::string &value);
    bool has(const std::string &key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string> &values() const { return values_; }

    std::string get_string(const std::string &key, const std::string &fallback) const;
    double get_double(const std::string &key, double fallback) const;
    int get_int(const std::string &key, int fallback) const;
    bool get_bool(const std::string &key, bool fallback) const;

    // Throws ConfigError naming the first key outside the allowed set.
    void require_known(const std::set<std::string> &allowed) const;

    // Keys a, b, eps (delta from "delta" when present).
    SystemParams params(const SystemParams &fallback = {}) const;
    // Keys forcing.kind, forcing.period, forcing.amplitude.
    ForcingSignal forcing(const ForcingSignal &fallback) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace nafhn
