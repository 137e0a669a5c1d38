#include "entanglab/driver.hpp"

#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "json.hpp"

#include "entanglab/cone.hpp"

namespace entanglab::driver {

namespace {

template <class F>
void parallel_for(std::size_t n, int threads, F&& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
}

struct Prepared {
    models::BuiltModel model;
    std::optional<models::ModelGround> ground;
    std::optional<probes::SectorSpectra> spectra;
    std::string error; // numerical failure while preparing
};

std::string prepare_key(const config::RunConfig& cfg, const config::Point& p) {
    std::string key = p.model_key;
    if (cfg.flavor == probes::Flavor::filtered)
        key += "|" + probes::to_string(p.probes[0].character) + "|" + probes::to_string(p.probes[1].character);
    return key;
}

ResultRow base_row(const config::RunConfig& cfg, const config::Point& p) {
    ResultRow row;
    row.model_id = models::preset_name(p.model);
    row.flavor = probes::to_string(cfg.flavor);
    row.eps0 = p.probes[0].energy;
    row.eps1 = p.probes[1].energy;
    row.gamma = p.probes[0].width;
    row.vprime = p.probes[0].coupling;
    return row;
}

// |α| below `zero` counts as zero for the status and E₁.
void fill(ResultRow& row, double zero, const probes::AlphaResult& r) {
    const double alpha = r.extrapolated.value_or(r.alpha);
    row.alpha = alpha;
    row.mean0 = r.mean0;
    row.mean1 = r.mean1;
    row.covariance = r.covariance;
    if (r.flagged) {
        row.status = "flagged: coupling extrapolation did not settle";
    } else if (alpha <= -zero) {
        row.status = "negative_alpha";
    } else {
        row.status = "ok";
        row.e1 = cone::e1_closed_form(std::max(alpha, 0.0));
    }
}

std::optional<double> parse_optional(const std::string& s, const std::string& field) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("csv: field " + field + " holds '" + s + "', not a number");
    return v;
}

double parse_required(const std::string& s, const std::string& field) {
    auto v = parse_optional(s, field);
    if (!v) throw ConfigError("csv: field " + field + " is empty");
    return *v;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

// Splits one record; quoted fields may contain commas, doubled quotes and newlines.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;
    std::string cur;
    bool quoted = false;
    char c;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    cur += '"';
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (quoted) throw ConfigError("csv: unterminated quoted field");
    fields.push_back(std::move(cur));
    return true;
}

nlohmann::ordered_json json_number(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> json_optional(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

} // namespace

std::vector<ResultRow> run(const config::RunConfig& cfg, int threads) {
    const auto solver = cfg.tolerances.solver_options();
    const double zero = cfg.tolerances.get("alpha_zero");

    // one preparation per distinct model (and filter sectors)
    std::map<std::string, std::size_t> key_index;
    std::vector<std::size_t> point_key(cfg.points.size());
    std::vector<const config::Point*> representative;
    for (std::size_t i = 0; i < cfg.points.size(); ++i) {
        const auto key = prepare_key(cfg, cfg.points[i]);
        auto [it, inserted] = key_index.emplace(key, representative.size());
        if (inserted) representative.push_back(&cfg.points[i]);
        point_key[i] = it->second;
    }

    std::vector<std::unique_ptr<Prepared>> prepared(representative.size());
    std::vector<std::exception_ptr> config_errors(std::max(representative.size(), cfg.points.size()));
    if (cfg.flavor != probes::Flavor::probe_level) {
        parallel_for(representative.size(), threads, [&](std::size_t k) {
            const auto& p = *representative[k];
            auto prep = std::make_unique<Prepared>();
            try {
                prep->model = models::build_hamiltonian(p.model);
                prep->ground = models::solve_ground(prep->model, solver);
                if (cfg.flavor == probes::Flavor::filtered)
                    prep->spectra = probes::filter_spectra(prep->model, *prep->ground, p.probes[0], p.probes[1], solver);
            } catch (const ConfigError&) {
                config_errors[k] = std::current_exception();
            } catch (const std::exception& e) {
                prep->error = e.what();
            }
            prepared[k] = std::move(prep);
        });
        for (const auto& e : config_errors)
            if (e) std::rethrow_exception(e);
    } else {
        for (const auto& p : cfg.points) config::as_inner(p.model);
    }

    std::vector<ResultRow> rows(cfg.points.size());
    parallel_for(cfg.points.size(), threads, [&](std::size_t i) {
        const auto& p = cfg.points[i];
        ResultRow row = base_row(cfg, p);
        try {
            if (cfg.flavor == probes::Flavor::probe_level) {
                auto opts = solver;
                fill(row, zero, probes::probe_level_correlator(config::as_inner(p.model), p.probes[0], p.probes[1], opts));
            } else {
                const auto& prep = *prepared[point_key[i]];
                row.model_id = prep.model.id.empty() ? row.model_id : prep.model.id;
                if (!prep.error.empty()) throw NumericalError(prep.error);
                if (cfg.flavor == probes::Flavor::mode)
                    fill(row, zero, probes::mode_occupation_correlator(prep.ground->ground.state, prep.model.modes,
                                                                 p.probes[0], p.probes[1]));
                else
                    fill(row, zero, probes::filtered_correlator(*prep.ground, *prep.spectra, prep.model, p.probes[0],
                                                          p.probes[1]));
            }
        } catch (const ConfigError&) {
            config_errors[i] = std::current_exception();
        } catch (const std::exception& e) {
            row.alpha = row.mean0 = row.mean1 = row.covariance = row.e1 = std::nullopt;
            row.status = std::string("error: ") + e.what();
        }
        rows[i] = std::move(row);
    });
    for (const auto& e : config_errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string to_csv(const std::vector<ResultRow>& rows) {
    std::string out = std::string(csv_header) + "\n";
    for (const auto& r : rows) {
        out += csv_field(r.model_id) + "," + csv_field(r.flavor) + "," + format_number(r.eps0) + "," +
               format_number(r.eps1) + "," + format_number(r.gamma) + "," + format_number(r.vprime) + "," +
               csv_number(r.alpha) + "," + csv_number(r.mean0) + "," + csv_number(r.mean1) + "," +
               csv_number(r.covariance) + "," + csv_number(r.e1) + "," + csv_field(r.status) + "\n";
    }
    return out;
}

std::string to_json(const std::vector<ResultRow>& rows) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        arr.push_back({{"model_id", r.model_id},
                       {"flavor", r.flavor},
                       {"eps0", r.eps0},
                       {"eps1", r.eps1},
                       {"gamma", r.gamma},
                       {"vprime", r.vprime},
                       {"alpha", json_number(r.alpha)},
                       {"mean0", json_number(r.mean0)},
                       {"mean1", json_number(r.mean1)},
                       {"covariance", json_number(r.covariance)},
                       {"E1", json_number(r.e1)},
                       {"status", r.status}});
    }
    return arr.dump(2) + "\n";
}

std::string serialize(const std::vector<ResultRow>& rows, config::OutputFormat format) {
    return format == config::OutputFormat::csv ? to_csv(rows) : to_json(rows);
}

std::vector<ResultRow> read_csv(std::istream& in) {
    std::vector<std::string> f;
    if (!read_record(in, f)) throw ConfigError("csv: empty input");
    std::string header;
    for (std::size_t i = 0; i < f.size(); ++i) header += (i ? "," : "") + f[i];
    if (header != csv_header) throw ConfigError("csv: unexpected header '" + header + "'");
    std::vector<ResultRow> rows;
    while (read_record(in, f)) {
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() != 12) throw ConfigError("csv: row " + std::to_string(rows.size() + 1) + " has " +
                                              std::to_string(f.size()) + " fields");
        ResultRow r;
        r.model_id = f[0];
        r.flavor = f[1];
        r.eps0 = parse_required(f[2], "eps0");
        r.eps1 = parse_required(f[3], "eps1");
        r.gamma = parse_required(f[4], "gamma");
        r.vprime = parse_required(f[5], "vprime");
        r.alpha = parse_optional(f[6], "alpha");
        r.mean0 = parse_optional(f[7], "mean0");
        r.mean1 = parse_optional(f[8], "mean1");
        r.covariance = parse_optional(f[9], "covariance");
        r.e1 = parse_optional(f[10], "E1");
        r.status = f[11];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> read_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
        std::vector<ResultRow> rows;
        for (const auto& o : j) {
            ResultRow r;
            r.model_id = o.at("model_id").get<std::string>();
            r.flavor = o.at("flavor").get<std::string>();
            r.eps0 = o.at("eps0").get<double>();
            r.eps1 = o.at("eps1").get<double>();
            r.gamma = o.at("gamma").get<double>();
            r.vprime = o.at("vprime").get<double>();
            r.alpha = json_optional(o, "alpha");
            r.mean0 = json_optional(o, "mean0");
            r.mean1 = json_optional(o, "mean1");
            r.covariance = json_optional(o, "covariance");
            r.e1 = json_optional(o, "E1");
            r.status = o.at("status").get<std::string>();
            rows.push_back(std::move(r));
        }
        return rows;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("json: ") + e.what());
    }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw ConfigError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw ConfigError("cannot move output into place at " + path.string() + ": " + ec.message());
    }
}

} // namespace entanglab::driver
