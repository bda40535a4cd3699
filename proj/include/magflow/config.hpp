#pragma once

#include <optional>
#include <string>
#include <vector>

#include "magflow/counting.hpp"

namespace magflow {

struct ConfigIssue {
    int line = 0; // 0 when not tied to a line (e.g. missing key)
    std::string key;
    std::string message;
};

class ConfigParseError : public std::runtime_error {
public:
    explicit ConfigParseError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    static std::string format(const std::vector<ConfigIssue>& issues);
    std::vector<ConfigIssue> issues_;
};

// One `key = value` per line, `#` comments. Later occurrences of a key
// override earlier ones, which is also how CLI flag overrides are applied.
struct RunConfig {
    SurfaceKind kind = SurfaceKind::FlatTorus;
    double Lx = 1.0, Ly = 1.0;
    std::string lambda_text; // conformal_torus only
    std::string b_text = "1";
    double s = 0.0;

    double h = 1e-3;
    std::uint64_t seed = 0;
    int workers = 1;

    double T = 10.0;
    std::vector<double> T_list;

    long n_theta = 1000;
    long n_pairs = 1000;
    CountOptions count;

    ChartPoint x{0.0, 0.0};
    ChartPoint y{0.5, 0.0};
    double angle = 0.0;
    double window_fraction = 0.5;
    std::optional<double> reference_rate;
    std::string out_dir;

    SurfaceModel make_surface() const;
    std::vector<double> effective_T_list() const; // T_list, or {T} when empty
};

// Parses and validates; collects every error (with line provenance) before
// throwing ConfigParseError.
RunConfig parse_config(const std::string& text);

// Keys recognized by parse_config, for CLI flag generation.
const std::vector<std::pair<std::string, std::string>>& config_key_docs();

} // namespace magflow
