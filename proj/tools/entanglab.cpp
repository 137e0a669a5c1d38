#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "entanglab/cone.hpp"
#include "entanglab/driver.hpp"
#include "entanglab/kernel.hpp"
#include "entanglab/verify.hpp"

using namespace entanglab;

namespace {

enum Exit { exit_ok = 0, exit_config = 1, exit_numerical = 2 };

struct Common {
    std::string config_path;
    std::string output;
    std::string format;
    int threads = 1;
    std::vector<std::string> tolerances;
};

void add_common(CLI::App* app, Common& c, bool with_config = true) {
    if (with_config) app->add_option("--config", c.config_path, "Run configuration (YAML)")->check(CLI::ExistingFile);
    app->add_option("--output", c.output, "Output file, written atomically; stdout when absent");
    app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--tolerance", c.tolerances, "Override a tolerance, NAME=VALUE (repeatable)");
}

config::RunConfig load(const Common& c) {
    if (c.config_path.empty()) throw ConfigError("--config is required");
    auto cfg = config::load_run_config(c.config_path);
    for (const auto& t : c.tolerances) cfg.tolerances.set_from_string(t);
    if (!c.output.empty()) cfg.output_path = c.output;
    if (!c.format.empty()) cfg.format = config::parse_format(c.format);
    for (const auto& p : cfg.points.front().probes)
        for (const auto& w : p.warnings()) std::cerr << "warning: " << w << "\n";
    return cfg;
}

void emit(const std::optional<std::filesystem::path>& path, const std::string& content) {
    if (path)
        driver::write_atomic(*path, content);
    else
        std::cout << content;
}

int rows_exit(const std::vector<driver::ResultRow>& rows) {
    for (const auto& r : rows)
        if (!r.failed()) return exit_ok;
    for (const auto& r : rows) std::cerr << r.status << "\n";
    return exit_numerical;
}

int cmd_solve(const Common& c) {
    if (c.config_path.empty()) throw ConfigError("--config is required");
    auto cfg = config::load_run_config(c.config_path);
    config::Tolerances tol = cfg.tolerances;
    for (const auto& t : c.tolerances) tol.set_from_string(t);
    const auto& point = cfg.points.front();
    const auto model = models::build_hamiltonian(point.model);
    auto opts = tol.solver_options();
    opts.threads = c.threads;
    const auto g = models::solve_ground(model, opts);
    nlohmann::ordered_json j;
    j["model_id"] = model.id;
    j["modes"] = model.mode_count;
    j["sector"] = g.sector.describe();
    j["ground_energy"] = g.ground.energy;
    j["degeneracy"] = g.ground.degeneracy;
    j["residual"] = g.ground.residual;
    j["mode_energies"] = model.modes.energies;
    const std::string out = j.dump(2) + "\n";
    emit(c.output.empty() ? std::optional<std::filesystem::path>{} : std::optional<std::filesystem::path>{c.output}, out);
    return exit_ok;
}

int cmd_rows(const Common& c, bool sweep) {
    const auto cfg = load(c);
    if (sweep && !cfg.sweep) throw ConfigError("sweep: the config has no sweep section");
    if (!sweep && cfg.sweep) throw ConfigError("alpha evaluates a single point; use the sweep subcommand");
    const auto rows = driver::run(cfg, c.threads);
    emit(cfg.output_path, driver::serialize(rows, cfg.format));
    return rows_exit(rows);
}

int cmd_entangle(const Common& c, const std::optional<double>& alpha_in) {
    double alpha = 0.0;
    if (alpha_in) {
        if (!c.config_path.empty()) throw ConfigError("give either --alpha or --config");
        alpha = *alpha_in;
    } else {
        const auto cfg = load(c);
        if (cfg.sweep) throw ConfigError("entangle evaluates a single point; remove the sweep section");
        const auto rows = driver::run(cfg, c.threads);
        if (rows.front().failed()) {
            std::cerr << rows.front().status << "\n";
            return exit_numerical;
        }
        alpha = *rows.front().alpha;
    }
    const auto rep = cone::entanglement_from_alpha(alpha);
    nlohmann::ordered_json j;
    j["alpha"] = alpha;
    j["status"] = cone::to_string(rep.status);
    if (rep.status == cone::Status::ok) {
        j["E1"] = rep.entanglement;
        j["weights"] = rep.weights;
    } else {
        j["E1"] = nullptr;
    }
    emit(c.output.empty() ? std::optional<std::filesystem::path>{} : std::optional<std::filesystem::path>{c.output},
         j.dump(2) + "\n");
    return exit_ok;
}

struct KernelArgs {
    std::string spectrum;
    double gamma = 0.0, tau = 0.0, mean0 = 0.0, mean1 = 0.0;
};

int cmd_kernel(const Common& c, const KernelArgs& k) {
    config::Tolerances tol;
    for (const auto& t : c.tolerances) tol.set_from_string(t);
    const auto table = probes::read_spectrum_table(std::filesystem::path(k.spectrum));
    const auto r = probes::alpha_from_spectrum(table, k.mean0, k.mean1, probes::KernelParams{k.gamma, k.tau},
                                               tol.get("quadrature"));
    nlohmann::ordered_json j;
    j["alpha"] = r.alpha;
    j["error_estimate"] = r.error_estimate;
    j["imaginary_residue"] = r.imaginary_residue;
    j["tail"] = r.tail;
    emit(c.output.empty() ? std::optional<std::filesystem::path>{} : std::optional<std::filesystem::path>{c.output},
         j.dump(2) + "\n");
    return exit_ok;
}

int cmd_verify(const Common& c, bool sign_bug) {
    verify::Options o;
    for (const auto& t : c.tolerances) o.tolerances.set_from_string(t);
    o.inject_sign_bug = sign_bug;
    o.threads = c.threads;
    const auto report = verify::run(o);
    std::cout << verify::format(report);
    return report.passed() ? exit_ok : exit_numerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"entanglab: occupation-number entanglement from probe correlators"};
    app.require_subcommand(1);

    Common solve_c, alpha_c, entangle_c, sweep_c, kernel_c, verify_c;
    auto* solve = app.add_subcommand("solve", "Ground state of the configured model");
    add_common(solve, solve_c);
    auto* alpha = app.add_subcommand("alpha", "Normalized correlator at a single point");
    add_common(alpha, alpha_c);
    auto* entangle = app.add_subcommand("entangle", "Entanglement from alpha, computed or given");
    add_common(entangle, entangle_c);
    std::optional<double> alpha_value;
    entangle->add_option("--alpha", alpha_value, "Use this alpha instead of a config");
    auto* sweep = app.add_subcommand("sweep", "Parameter sweep, one row per point");
    add_common(sweep, sweep_c);
    auto* kernel = app.add_subcommand("kernel", "Alpha from a cross-correlation spectrum file");
    add_common(kernel, kernel_c, false);
    KernelArgs k;
    kernel->add_option("--spectrum", k.spectrum, "Two-column file: omega, S(omega)")->required()->check(CLI::ExistingFile);
    kernel->add_option("--gamma", k.gamma, "Level width")->required();
    kernel->add_option("--tau", k.tau, "Measurement time")->required();
    kernel->add_option("--mean0", k.mean0, "Mean occupation of probe 0")->required();
    kernel->add_option("--mean1", k.mean1, "Mean occupation of probe 1")->required();
    auto* ver = app.add_subcommand("verify", "Run every built-in oracle battery");
    add_common(ver, verify_c, false);
    bool sign_bug = false;
    ver->add_flag("--inject-sign-bug", sign_bug, "Drop the fermionic string sign (the suite must fail)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*solve) return cmd_solve(solve_c);
        if (*alpha) return cmd_rows(alpha_c, false);
        if (*sweep) return cmd_rows(sweep_c, true);
        if (*entangle) return cmd_entangle(entangle_c, alpha_value);
        if (*kernel) return cmd_kernel(kernel_c, k);
        if (*ver) return cmd_verify(verify_c, sign_bug);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    }
    return exit_ok;
}
