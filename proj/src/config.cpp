#include "entanglab/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace entanglab::config {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void require_map(const YAML::Node& n, const std::string& path) {
    if (!n.IsMap()) fail(path + ": expected a table");
}

void check_keys(const YAML::Node& n, const std::string& path, const std::set<std::string>& allowed) {
    require_map(n, path);
    for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) fail(join(path, key) + ": unknown key");
    }
}

double to_double(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) fail(path + ": expected a number");
    const auto s = n.Scalar();
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
        fail(path + ": '" + s + "' is not a finite number");
    return v;
}

int to_int(const YAML::Node& n, const std::string& path) {
    const double v = to_double(n, path);
    if (v != std::floor(v) || std::abs(v) > 1e9) fail(path + ": expected an integer");
    return static_cast<int>(v);
}

std::string to_str(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) fail(path + ": expected a string");
    return n.Scalar();
}

void read(const YAML::Node& m, const std::string& path, const char* key, double& out) {
    if (const auto n = m[key]) out = to_double(n, join(path, key));
}

void read(const YAML::Node& m, const std::string& path, const char* key, int& out) {
    if (const auto n = m[key]) out = to_int(n, join(path, key));
}

void read(const YAML::Node& m, const std::string& path, const char* key, std::optional<int>& out) {
    if (const auto n = m[key]) out = to_int(n, join(path, key));
}

std::optional<models::Charging> read_charging(const YAML::Node& m, const std::string& path) {
    const auto n = m["charging"];
    if (!n) return std::nullopt;
    const auto p = join(path, "charging");
    check_keys(n, p, {"energy", "offset"});
    models::Charging c{0.0, 0.0};
    read(n, p, "energy", c.energy);
    read(n, p, "offset", c.offset);
    return c;
}

models::Character parse_character(const YAML::Node& n, const std::string& path) {
    const auto s = to_str(n, path);
    if (s == "particle") return models::Character::particle;
    if (s == "hole") return models::Character::hole;
    fail(path + ": expected particle or hole, got '" + s + "'");
}

models::CouplingTarget parse_target(const YAML::Node& n, const std::string& path) {
    const auto s = to_str(n, path);
    if (s == "site") return models::CouplingTarget::site;
    if (s == "eigenmode") return models::CouplingTarget::eigenmode;
    fail(path + ": expected site or eigenmode, got '" + s + "'");
}

models::InnerConfig parse_inner(const YAML::Node& node, const std::string& path);

models::ProbeLevel parse_probe_level(const YAML::Node& n, const std::string& path) {
    check_keys(n, path, {"energy", "coupling", "site", "character", "target", "mode"});
    models::ProbeLevel p;
    read(n, path, "energy", p.energy);
    read(n, path, "coupling", p.coupling);
    read(n, path, "site", p.site);
    read(n, path, "mode", p.mode);
    if (const auto c = n["character"]) p.character = parse_character(c, join(path, "character"));
    if (const auto t = n["target"]) p.target = parse_target(t, join(path, "target"));
    return p;
}

models::ModelConfig parse_model(const YAML::Node& node, const std::string& path) {
    check_keys(node, path, {"preset", "params"});
    if (!node["preset"]) fail(join(path, "preset") + ": missing");
    const auto preset = to_str(node["preset"], join(path, "preset"));
    YAML::Node params = node["params"] ? node["params"] : YAML::Node(YAML::NodeType::Map);
    const auto pp = join(path, "params");

    if (preset == "free_chain") {
        check_keys(params, pp, {"sites", "hopping", "filling", "chemical_potential", "charging"});
        models::FreeChain c;
        read(params, pp, "sites", c.sites);
        read(params, pp, "hopping", c.hopping);
        read(params, pp, "filling", c.filling);
        read(params, pp, "chemical_potential", c.chemical_potential);
        c.charging = read_charging(params, pp);
        return c;
    }
    if (preset == "interacting_chain") {
        check_keys(params, pp, {"sites", "hopping", "interaction", "filling"});
        models::InteractingChain c;
        read(params, pp, "sites", c.sites);
        read(params, pp, "hopping", c.hopping);
        read(params, pp, "interaction", c.interaction);
        read(params, pp, "filling", c.filling);
        return c;
    }
    if (preset == "pairing_toy") {
        check_keys(params, pp, {"pairs"});
        const auto pairs = params["pairs"];
        if (!pairs || !pairs.IsSequence()) fail(join(pp, "pairs") + ": expected a list of {xi, gap}");
        models::PairingToy c;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto ip = join(pp, "pairs." + std::to_string(i));
            check_keys(pairs[i], ip, {"xi", "gap"});
            if (!pairs[i]["xi"] || !pairs[i]["gap"]) fail(ip + ": needs xi and gap");
            c.pairs.push_back({to_double(pairs[i]["xi"], join(ip, "xi")), to_double(pairs[i]["gap"], join(ip, "gap"))});
        }
        return c;
    }
    if (preset == "proximity_chain") {
        check_keys(params, pp, {"normal_sites", "sc_sites", "hopping", "gap", "transmission"});
        models::ProximityChain c;
        read(params, pp, "normal_sites", c.normal_sites);
        read(params, pp, "sc_sites", c.sc_sites);
        read(params, pp, "hopping", c.hopping);
        read(params, pp, "gap", c.gap);
        read(params, pp, "transmission", c.transmission);
        return c;
    }
    if (preset == "probe_coupled") {
        check_keys(params, pp, {"inner", "probes"});
        if (!params["inner"]) fail(join(pp, "inner") + ": missing");
        models::ProbeCoupled c;
        c.inner = parse_inner(params["inner"], join(pp, "inner"));
        const auto list = params["probes"];
        if (!list || !list.IsSequence()) fail(join(pp, "probes") + ": expected a list");
        for (std::size_t i = 0; i < list.size(); ++i)
            c.probes.push_back(parse_probe_level(list[i], join(pp, "probes." + std::to_string(i))));
        return c;
    }
    fail(join(path, "preset") + ": unknown preset '" + preset + "'");
}

models::InnerConfig parse_inner(const YAML::Node& node, const std::string& path) {
    const auto m = parse_model(node, path);
    if (std::holds_alternative<models::ProbeCoupled>(m)) fail(path + ": probe_coupled models cannot be nested");
    return as_inner(m);
}

probes::ProbeSpec parse_probe(const YAML::Node& n, const std::string& path) {
    check_keys(n, path, {"energy", "character", "width", "site", "mode", "coupling", "target"});
    probes::ProbeSpec p;
    if (!n["energy"]) fail(join(path, "energy") + ": missing");
    read(n, path, "energy", p.energy);
    read(n, path, "width", p.width);
    read(n, path, "site", p.site);
    read(n, path, "mode", p.mode);
    read(n, path, "coupling", p.coupling);
    if (const auto c = n["character"]) p.character = parse_character(c, join(path, "character"));
    if (const auto t = n["target"]) p.target = parse_target(t, join(path, "target"));
    p.validate();
    return p;
}

// Walks a dotted path; every segment must already exist.
YAML::Node locate(YAML::Node root, const std::string& path) {
    YAML::Node cur = root;
    std::stringstream ss(path);
    std::string seg, walked;
    while (std::getline(ss, seg, '.')) {
        walked = join(walked, seg);
        YAML::Node next;
        if (cur.IsMap()) {
            if (!cur[seg]) fail("sweep.path: '" + walked + "' does not exist");
            next.reset(cur[seg]);
        } else if (cur.IsSequence()) {
            std::size_t idx = 0;
            auto res = std::from_chars(seg.data(), seg.data() + seg.size(), idx);
            if (res.ec != std::errc() || res.ptr != seg.data() + seg.size() || idx >= cur.size())
                fail("sweep.path: '" + walked + "' is not a valid index");
            next.reset(cur[idx]);
        } else {
            fail("sweep.path: '" + walked + "' does not exist");
        }
        cur.reset(next);
    }
    return cur;
}

struct Parsed {
    models::ModelConfig model;
    std::array<probes::ProbeSpec, 2> probes;
    std::string model_key;
};

Parsed parse_point(const YAML::Node& root) {
    Parsed out;
    out.model = parse_model(root["model"], "model");
    YAML::Emitter e;
    e << YAML::Flow << root["model"];
    out.model_key = e.c_str();
    const auto list = root["probes"];
    if (!list.IsSequence() || list.size() != 2) fail("probes: expected exactly two probes");
    for (std::size_t i = 0; i < 2; ++i) out.probes[i] = parse_probe(list[i], "probes." + std::to_string(i));
    return out;
}

} // namespace

Tolerances::Tolerances()
    : values_{
          // solver
          {"degeneracy", 1e-9},
          {"residual", 1e-10},
          // kernel quadrature, on α
          {"quadrature", 1e-7},
          // |α| below this is reported as zero
          {"alpha_zero", 1e-12},
          // verify batteries
          {"algebra", 1e-12},
          {"nullity", 1e-12},
          {"pairing", 1e-12},
          {"bogoliubov", 1e-8},
          {"cross_pair", 1e-12},
          {"flavor_filtered", 0.02},
          {"flavor_probe_level", 0.05},
          {"qd_formula", 1e-6},
          {"closed_form", 1e-12},
          {"cone", 1e-6},
          {"cone_identity", 1e-12},
          {"pauli", 1e-14},
          {"solver_agreement", 1e-9},
          {"charging", 1e-12},
      } {}

double Tolerances::get(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) fail("unknown tolerance '" + name + "'");
    return it->second;
}

void Tolerances::set(const std::string& name, double value) {
    auto it = values_.find(name);
    if (it == values_.end()) fail("unknown tolerance '" + name + "'");
    if (!(value > 0.0) || !std::isfinite(value)) fail("tolerance '" + name + "' must be positive");
    it->second = value;
}

void Tolerances::set_from_string(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) fail("--tolerance expects NAME=VALUE, got '" + assignment + "'");
    const auto name = assignment.substr(0, eq), value = assignment.substr(eq + 1);
    double v = 0.0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        fail("tolerance '" + name + "': '" + value + "' is not a number");
    set(name, v);
}

spectra::SolverOptions Tolerances::solver_options() const {
    spectra::SolverOptions o;
    o.degeneracy_tol = get("degeneracy");
    o.residual_tol = get("residual");
    return o;
}

OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    fail("format: expected csv or json, got '" + s + "'");
}

double Sweep::value(int i) const {
    const double v = from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1);
    // drop the last-digit noise of the linear grid (0.45999999999999996 -> 0.46)
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return std::strtod(buf, nullptr);
}

models::InnerConfig as_inner(const models::ModelConfig& config) {
    return std::visit(
        [](const auto& c) -> models::InnerConfig {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, models::ProbeCoupled>)
                fail("a probe_coupled model cannot be used here; give the inner model instead");
            else
                return c;
        },
        config);
}

RunConfig parse_run_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        fail(std::string("config parse error: ") + e.what());
    }
    check_keys(root, "", {"model", "probes", "flavor", "sweep", "output", "tolerances"});
    if (!root["model"]) fail("model: missing");
    if (!root["probes"]) fail("probes: missing");

    RunConfig cfg;
    if (const auto f = root["flavor"]) {
        try {
            cfg.flavor = probes::parse_flavor(to_str(f, "flavor"));
        } catch (const Error& e) {
            fail(std::string("flavor: ") + e.what());
        }
    }
    if (const auto o = root["output"]) {
        check_keys(o, "output", {"path", "format"});
        if (o["path"]) cfg.output_path = to_str(o["path"], "output.path");
        if (o["format"]) cfg.format = parse_format(to_str(o["format"], "output.format"));
    }
    if (const auto t = root["tolerances"]) {
        require_map(t, "tolerances");
        for (const auto& kv : t) {
            const auto name = kv.first.as<std::string>();
            cfg.tolerances.set(name, to_double(kv.second, "tolerances." + name));
        }
    }

    if (const auto s = root["sweep"]) {
        check_keys(s, "sweep", {"path", "from", "to", "steps"});
        for (const char* k : {"path", "from", "to", "steps"})
            if (!s[k]) fail(std::string("sweep.") + k + ": missing");
        Sweep sw;
        sw.path = to_str(s["path"], "sweep.path");
        sw.from = to_double(s["from"], "sweep.from");
        sw.to = to_double(s["to"], "sweep.to");
        sw.steps = to_int(s["steps"], "sweep.steps");
        if (sw.steps < 2) fail("sweep.steps: must be at least 2");
        if (sw.path.rfind("model.", 0) != 0 && sw.path.rfind("probes.", 0) != 0)
            fail("sweep.path: must start with model. or probes.");
        cfg.sweep = sw;
        const auto target = locate(root, sw.path);
        if (!target.IsScalar()) fail("sweep.path: '" + sw.path + "' is not a numeric field");
        to_double(target, sw.path);
        for (int i = 0; i < sw.steps; ++i) {
            YAML::Node copy = YAML::Clone(root);
            YAML::Node field = locate(copy, sw.path);
            const double v = sw.value(i);
            field = shortest(v);
            auto parsed = parse_point(copy);
            cfg.points.push_back({v, std::move(parsed.model), parsed.probes, std::move(parsed.model_key)});
        }
    } else {
        auto parsed = parse_point(root);
        cfg.points.push_back({0.0, std::move(parsed.model), parsed.probes, std::move(parsed.model_key)});
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

} // namespace entanglab::config
