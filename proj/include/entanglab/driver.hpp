#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "entanglab/config.hpp"

namespace entanglab::driver {

struct ResultRow {
    std::string model_id;
    std::string flavor;
    double eps0 = 0.0;
    double eps1 = 0.0;
    double gamma = 0.0;
    double vprime = 0.0;
    std::optional<double> alpha;
    std::optional<double> mean0;
    std::optional<double> mean1;
    std::optional<double> covariance;
    std::optional<double> e1; // only for status ok and α ≥ 0
    std::string status;       // ok, negative_alpha, flagged: ..., error: ...

    bool failed() const { return status.rfind("error", 0) == 0; }
    bool operator==(const ResultRow&) const = default;
};

inline constexpr const char* csv_header = "model_id,flavor,eps0,eps1,gamma,vprime,alpha,mean0,mean1,covariance,E1,status";

// One row per point, in point order. Points run concurrently on `threads`
// workers; models and filter spectra shared between points are built once.
// Numerical failures become error rows; config errors propagate.
std::vector<ResultRow> run(const config::RunConfig& cfg, int threads = 1);

// Shortest decimal that parses back to the same double.
std::string format_number(double v);

std::string to_csv(const std::vector<ResultRow>& rows);
std::string to_json(const std::vector<ResultRow>& rows);
std::string serialize(const std::vector<ResultRow>& rows, config::OutputFormat format);
std::vector<ResultRow> read_csv(std::istream& in);
std::vector<ResultRow> read_json(std::istream& in);

// Write to a sibling temp file, then rename over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace entanglab::driver
