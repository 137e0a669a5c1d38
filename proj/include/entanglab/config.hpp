#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "entanglab/models.hpp"
#include "entanglab/probes.hpp"
#include "entanglab/spectra.hpp"

namespace entanglab::config {

/// Named numeric tolerances. Every name has a default; overriding an unknown
/// name is a ConfigError.
class Tolerances {
public:
    Tolerances();

    double get(const std::string& name) const;
    void set(const std::string& name, double value);
    // "NAME=VALUE"
    void set_from_string(const std::string& assignment);
    const std::map<std::string, double>& all() const { return values_; }

    spectra::SolverOptions solver_options() const;

private:
    std::map<std::string, double> values_;
};

enum class OutputFormat { csv, json };

OutputFormat parse_format(const std::string& s);

struct Sweep {
    std::string path; // dotted, e.g. probes.1.energy or model.params.gap
    double from = 0.0;
    double to = 0.0;
    int steps = 2;

    double value(int i) const;
};

/// One fully resolved evaluation point.
struct Point {
    double sweep_value = 0.0;
    models::ModelConfig model;
    std::array<probes::ProbeSpec, 2> probes;
    std::string model_key; // canonical text of the model section
};

struct RunConfig {
    probes::Flavor flavor = probes::Flavor::mode;
    std::optional<Sweep> sweep;
    std::optional<std::filesystem::path> output_path;
    OutputFormat format = OutputFormat::csv;
    Tolerances tolerances;
    std::vector<Point> points; // one when there is no sweep
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

models::InnerConfig as_inner(const models::ModelConfig& config);

} // namespace entanglab::config
