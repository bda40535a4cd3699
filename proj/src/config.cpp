#include "magflow/config.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace magflow {

ConfigParseError::ConfigParseError(std::vector<ConfigIssue> issues)
    : std::runtime_error(format(issues)), issues_(std::move(issues)) {}

std::string ConfigParseError::format(const std::vector<ConfigIssue>& issues) {
    std::ostringstream os;
    os << "configuration errors:";
    for (const ConfigIssue& i : issues) {
        os << "\n  ";
        if (i.line > 0) os << "line " << i.line << ": ";
        if (!i.key.empty()) os << i.key << ": ";
        os << i.message;
    }
    return os.str();
}

namespace {

struct KeyValue {
    int line;
    std::string value;
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

const std::vector<std::pair<std::string, std::string>> kKeyDocs = {
    {"kind", "surface kind: flat_torus | hyperbolic_plane | conformal_torus"},
    {"Lx", "torus period in u (torus kinds only)"},
    {"Ly", "torus period in v (torus kinds only)"},
    {"lambda", "conformal exponent expression in u, v (conformal_torus only)"},
    {"b", "magnetic field density expression in u, v (default 1)"},
    {"s", "magnetic field strength"},
    {"h", "integrator step (default 1e-3)"},
    {"seed", "random seed (default 0)"},
    {"workers", "worker thread cap (default MAGFLOW_WORKERS or 1)"},
    {"T", "time horizon"},
    {"T_list", "comma-separated list of horizons (lemma-check)"},
    {"n_theta", "unit-tangent Monte Carlo samples"},
    {"n_pairs", "endpoint-pair Monte Carlo samples"},
    {"n_angle", "launch-angle grid resolution (default 720)"},
    {"time_cell", "arrival-time grid cell (default 0.05)"},
    {"count_step", "integrator step used while counting (default 0.01)"},
    {"tol_pos", "Newton position tolerance in chart units (default 1e-6)"},
    {"t_min", "minimum arrival time (default 10 * count_step)"},
    {"max_newton", "Newton iteration cap (default 25)"},
    {"allow_equal", "permit x == y targets (default false)"},
    {"x", "source point, as 'u, v'"},
    {"y", "target point, as 'u, v'"},
    {"angle", "launch angle for trajectory/det-growth"},
    {"window_fraction", "tail fraction of the T range used for rate fits (default 0.5)"},
    {"reference_rate", "known entropy to compare against (entropy-rate)"},
    {"out", "output directory"},
};

class Validator {
public:
    Validator(std::map<std::string, KeyValue> kv) : kv_(std::move(kv)) {}

    std::vector<ConfigIssue> issues;

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    template <class F>
    void with(const std::string& key, F&& fn) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return;
        seen_.insert(key);
        try {
            fn(it->second.value);
        } catch (const std::exception& e) {
            issues.push_back({it->second.line, key, e.what()});
        }
    }

    double number(const std::string& text) {
        size_t used = 0;
        double v = std::stod(text, &used);
        if (trim(text.substr(used)) != "")
            throw std::runtime_error("not a number: '" + text + "'");
        return v;
    }

    long integer(const std::string& text) {
        double v = number(text);
        if (v != std::floor(v)) throw std::runtime_error("not an integer: '" + text + "'");
        return static_cast<long>(v);
    }

    ChartPoint point(const std::string& text) {
        size_t comma = text.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("expected 'u, v', got '" + text + "'");
        return ChartPoint{number(trim(text.substr(0, comma))),
                          number(trim(text.substr(comma + 1)))};
    }

    std::vector<double> number_list(const std::string& text) {
        std::vector<double> out;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(number(trim(item)));
        if (out.empty()) throw std::runtime_error("empty list");
        return out;
    }

    bool boolean(const std::string& text) {
        if (text == "true" || text == "1" || text == "yes") return true;
        if (text == "false" || text == "0" || text == "no") return false;
        throw std::runtime_error("not a boolean: '" + text + "'");
    }

    void reject(const std::string& key, const std::string& why) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return;
        seen_.insert(key);
        issues.push_back({it->second.line, key, why});
    }

    void finish_unknown() {
        for (const auto& [key, kv] : kv_)
            if (!seen_.count(key)) issues.push_back({kv.line, key, "unknown key"});
    }

private:
    std::map<std::string, KeyValue> kv_;
    std::set<std::string> seen_;
};

} // namespace

const std::vector<std::pair<std::string, std::string>>& config_key_docs() { return kKeyDocs; }

RunConfig parse_config(const std::string& text) {
    std::vector<ConfigIssue> issues;
    std::map<std::string, KeyValue> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back({lineno, "", "expected 'key = value'"});
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            issues.push_back({lineno, "", "missing key before '='"});
            continue;
        }
        kv[key] = KeyValue{lineno, value}; // last occurrence wins
    }

    Validator val(std::move(kv));
    RunConfig cfg;
    if (const char* env = std::getenv("MAGFLOW_WORKERS")) {
        try {
            cfg.workers = std::max(1, static_cast<int>(std::stol(env)));
        } catch (const std::exception&) {
            issues.push_back({0, "MAGFLOW_WORKERS", "environment value is not an integer"});
        }
    }

    bool have_kind = val.has("kind");
    val.with("kind", [&](const std::string& v) {
        if (v == "flat_torus") cfg.kind = SurfaceKind::FlatTorus;
        else if (v == "hyperbolic_plane") cfg.kind = SurfaceKind::HyperbolicPlane;
        else if (v == "conformal_torus") cfg.kind = SurfaceKind::ConformalTorus;
        else throw std::runtime_error("unknown kind '" + v + "'");
    });
    if (!have_kind) issues.push_back({0, "kind", "required key is missing"});

    if (cfg.kind == SurfaceKind::HyperbolicPlane) {
        val.reject("Lx", "periods are not allowed for hyperbolic_plane");
        val.reject("Ly", "periods are not allowed for hyperbolic_plane");
    } else {
        val.with("Lx", [&](const std::string& v) {
            cfg.Lx = val.number(v);
            if (!(cfg.Lx > 0.0)) throw std::runtime_error("Lx must be positive");
        });
        val.with("Ly", [&](const std::string& v) {
            cfg.Ly = val.number(v);
            if (!(cfg.Ly > 0.0)) throw std::runtime_error("Ly must be positive");
        });
    }
    if (cfg.kind == SurfaceKind::ConformalTorus) {
        val.with("lambda", [&](const std::string& v) {
            Expr::parse(v); // validate now, kept as text
            cfg.lambda_text = v;
        });
    } else {
        val.reject("lambda", "lambda is only allowed for conformal_torus");
    }
    val.with("b", [&](const std::string& v) {
        Expr::parse(v);
        cfg.b_text = v;
    });
    val.with("s", [&](const std::string& v) { cfg.s = val.number(v); });
    val.with("h", [&](const std::string& v) {
        cfg.h = val.number(v);
        if (!(cfg.h > 0.0)) throw std::runtime_error("h must be positive");
    });
    val.with("seed", [&](const std::string& v) {
        long s = val.integer(v);
        if (s < 0) throw std::runtime_error("seed must be nonnegative");
        cfg.seed = static_cast<std::uint64_t>(s);
    });
    val.with("workers", [&](const std::string& v) {
        cfg.workers = static_cast<int>(val.integer(v));
        if (cfg.workers < 1) throw std::runtime_error("workers must be at least 1");
    });
    val.with("T", [&](const std::string& v) {
        cfg.T = val.number(v);
        if (!(cfg.T >= 0.0)) throw std::runtime_error("T must be nonnegative");
    });
    val.with("T_list", [&](const std::string& v) { cfg.T_list = val.number_list(v); });
    val.with("n_theta", [&](const std::string& v) {
        cfg.n_theta = val.integer(v);
        if (cfg.n_theta < 1) throw std::runtime_error("n_theta must be positive");
    });
    val.with("n_pairs", [&](const std::string& v) {
        cfg.n_pairs = val.integer(v);
        if (cfg.n_pairs < 1) throw std::runtime_error("n_pairs must be positive");
    });
    val.with("n_angle", [&](const std::string& v) {
        cfg.count.n_angle = static_cast<int>(val.integer(v));
        if (cfg.count.n_angle < 8) throw std::runtime_error("n_angle must be at least 8");
    });
    val.with("time_cell", [&](const std::string& v) {
        cfg.count.time_cell = val.number(v);
        if (!(cfg.count.time_cell > 0.0)) throw std::runtime_error("time_cell must be positive");
    });
    bool have_t_min = val.has("t_min");
    val.with("count_step", [&](const std::string& v) {
        cfg.count.step = val.number(v);
        if (!(cfg.count.step > 0.0)) throw std::runtime_error("count_step must be positive");
    });
    if (!have_t_min) cfg.count.t_min = 10.0 * cfg.count.step;
    val.with("t_min", [&](const std::string& v) {
        cfg.count.t_min = val.number(v);
        if (cfg.count.t_min < 10.0 * cfg.count.step - 1e-12)
            throw std::runtime_error("t_min must be at least 10 * count_step");
    });
    val.with("tol_pos", [&](const std::string& v) {
        cfg.count.tol_pos = val.number(v);
        if (!(cfg.count.tol_pos > 0.0)) throw std::runtime_error("tol_pos must be positive");
    });
    val.with("max_newton", [&](const std::string& v) {
        cfg.count.max_newton = static_cast<int>(val.integer(v));
        if (cfg.count.max_newton < 1) throw std::runtime_error("max_newton must be positive");
    });
    val.with("allow_equal",
             [&](const std::string& v) { cfg.count.allow_equal_endpoints = val.boolean(v); });
    val.with("x", [&](const std::string& v) { cfg.x = val.point(v); });
    val.with("y", [&](const std::string& v) { cfg.y = val.point(v); });
    val.with("angle", [&](const std::string& v) { cfg.angle = val.number(v); });
    val.with("window_fraction", [&](const std::string& v) {
        cfg.window_fraction = val.number(v);
        if (!(cfg.window_fraction > 0.0 && cfg.window_fraction <= 1.0))
            throw std::runtime_error("window_fraction must be in (0, 1]");
    });
    val.with("reference_rate", [&](const std::string& v) { cfg.reference_rate = val.number(v); });
    val.with("out", [&](const std::string& v) { cfg.out_dir = v; });
    val.finish_unknown();

    issues.insert(issues.end(), val.issues.begin(), val.issues.end());
    if (!issues.empty()) throw ConfigParseError(std::move(issues));
    return cfg;
}

SurfaceModel RunConfig::make_surface() const {
    Expr b = Expr::parse(b_text);
    switch (kind) {
    case SurfaceKind::FlatTorus: return SurfaceModel::flat_torus(Lx, Ly, s, b);
    case SurfaceKind::HyperbolicPlane: return SurfaceModel::hyperbolic_plane(s, b);
    case SurfaceKind::ConformalTorus:
        return SurfaceModel::conformal_torus(
            Lx, Ly, lambda_text.empty() ? Expr::constant(0.0) : Expr::parse(lambda_text), b, s);
    }
    throw ConfigurationError("invalid surface kind");
}

std::vector<double> RunConfig::effective_T_list() const {
    return T_list.empty() ? std::vector<double>{T} : T_list;
}

} // namespace magflow
