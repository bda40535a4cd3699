#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "magflow/config.hpp"
#include "magflow/estimators.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace magflow;

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct OutputDir {
    fs::path dir;

    explicit OutputDir(const std::string& path) : dir(path.empty() ? "." : path) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw std::runtime_error("cannot create output directory " + dir.string());
    }

    void write_text(const std::string& name, const std::string& content) const {
        fs::path p = dir / name;
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        out << content;
    }

    void write_json(const std::string& name, const json& j) const {
        write_text(name, j.dump(2) + "\n");
    }

    // Wall-clock info goes to a separate log so reports stay byte-stable.
    void log_run(const std::string& subcommand) const {
        auto now = std::chrono::system_clock::now();
        std::time_t tt = std::chrono::system_clock::to_time_t(now);
        char buf[64];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
        std::ofstream out(dir / "run.log", std::ios::app);
        out << buf << " " << subcommand << "\n";
    }
};

RunConfig load_config(const std::string& config_path,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
    std::string text;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot read config file " + config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    // Flags append as later lines; later occurrences win in the parser.
    for (const auto& [key, value] : overrides) text += "\n" + key + " = " + value;
    return parse_config(text);
}

json estimate_json(const IntegralEstimate& e) {
    return json{{"value", e.value},
                {"std_error", e.std_error},
                {"n_samples", e.n_samples},
                {"n_failed", e.n_failed},
                {"n_resampled", e.n_resampled},
                {"rejected", e.rejected}};
}

int run_trajectory(const RunConfig& cfg) {
    SurfaceModel surface = cfg.make_surface();
    TrajectorySample traj = flow(surface, unit_state(surface, cfg.x, cfg.angle), cfg.T, cfg.h);
    std::ostringstream csv;
    csv << "t,u,v,du,dv,energy\n";
    for (size_t i = 0; i < traj.times.size(); ++i) {
        const UnitTangentState& st = traj.states[i];
        csv << fmt17(traj.times[i]) << ',' << fmt17(st.point.u) << ',' << fmt17(st.point.v) << ','
            << fmt17(st.velocity.du) << ',' << fmt17(st.velocity.dv) << ','
            << fmt17(energy(surface, st)) << '\n';
    }
    OutputDir out(cfg.out_dir);
    out.write_text("trajectory.csv", csv.str());
    out.log_run("trajectory");
    std::cout << "trajectory: " << traj.times.size() << " samples, energy drift "
              << fmt17(traj.energy_drift) << "\n";
    if (traj.failure_time) {
        std::cerr << "integration left the chart at t = " << fmt17(*traj.failure_time) << "\n";
        return 2;
    }
    return 0;
}

int run_det_growth(const RunConfig& cfg) {
    SurfaceModel surface = cfg.make_surface();
    UnitTangentState theta0 = unit_state(surface, cfg.x, cfg.angle);
    DeterminantTrace trace = alpha_determinant_along(surface, theta0, cfg.T, cfg.h);
    std::ostringstream csv;
    csv << "t,det\n";
    for (size_t i = 0; i < trace.times.size(); ++i)
        csv << fmt17(trace.times[i]) << ',' << fmt17(trace.det_values[i]) << '\n';
    GrowthEstimate est = log_det_growth(surface, theta0, cfg.T, cfg.h, cfg.window_fraction);
    json summary{{"rate", est.rate},
                 {"ci_low", est.rate - est.ci_half_width},
                 {"ci_high", est.rate + est.ci_half_width},
                 {"n_excluded", est.n_excluded}};
    OutputDir out(cfg.out_dir);
    out.write_text("det_growth.csv", csv.str());
    out.write_json("det_growth.json", summary);
    out.log_run("det-growth");
    std::cout << "det-growth rate " << fmt17(est.rate) << " +/- " << fmt17(est.ci_half_width)
              << "\n";
    return 0;
}

int run_count(const RunConfig& cfg) {
    SurfaceModel surface = cfg.make_surface();
    CountResult res;
    try {
        res = count_connections(surface, cfg.x, cfg.y, cfg.T, cfg.count);
    } catch (const DegenerateTargetError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    std::ostringstream csv;
    csv << "angle,t,residual,jacobian_det\n";
    for (const ConnectionRoot& r : res.roots)
        csv << fmt17(r.angle) << ',' << fmt17(r.t) << ',' << fmt17(r.residual) << ','
            << fmt17(r.jacobian_det) << '\n';
    OutputDir out(cfg.out_dir);
    out.write_text("count_roots.csv", csv.str());
    out.log_run("count");
    std::cout << "count " << res.count << "\n";
    if (res.flags.continuum_degenerate) {
        std::cerr << "continuum degeneracy detected; the count is unreliable\n";
        return 2;
    }
    return 0;
}

int run_lemma_check(const RunConfig& cfg) {
    SurfaceModel surface = cfg.make_surface();
    LemmaReport rep = lemma_check(surface, cfg.effective_T_list(), cfg.n_theta, cfg.n_pairs,
                                  cfg.count, cfg.h, cfg.seed, cfg.workers);
    json rows = json::array();
    std::ostringstream csv;
    csv << "T,lhs,lhs_se,rhs,rhs_se,tolerance,pass\n";
    for (const LemmaRow& row : rep.rows) {
        rows.push_back(json{{"T", row.T},
                            {"lhs", row.lhs.value},
                            {"lhs_se", row.lhs.std_error},
                            {"rhs", row.rhs.value},
                            {"rhs_se", row.rhs.std_error},
                            {"tolerance", row.tolerance},
                            {"pass", row.pass},
                            {"lhs_detail", estimate_json(row.lhs)},
                            {"rhs_detail", estimate_json(row.rhs)}});
        csv << fmt17(row.T) << ',' << fmt17(row.lhs.value) << ',' << fmt17(row.lhs.std_error)
            << ',' << fmt17(row.rhs.value) << ',' << fmt17(row.rhs.std_error) << ','
            << fmt17(row.tolerance) << ',' << (row.pass ? "1" : "0") << '\n';
    }
    std::string status = rep.status == ReportStatus::Pass   ? "PASS"
                         : rep.status == ReportStatus::Fail ? "FAIL"
                                                            : "INCOMPLETE";
    json summary{{"status", status}, {"cause", rep.cause}, {"rows", rows}};
    OutputDir out(cfg.out_dir);
    out.write_json("lemma_check.json", summary);
    out.write_text("lemma_check.csv", csv.str());
    out.log_run("lemma-check");
    std::cout << "lemma-check " << status << "\n";
    for (const LemmaRow& row : rep.rows)
        std::cout << "  T=" << fmt17(row.T) << " lhs=" << fmt17(row.lhs.value)
                  << " rhs=" << fmt17(row.rhs.value) << " tol=" << fmt17(row.tolerance)
                  << (row.pass ? " ok" : " MISMATCH") << "\n";
    if (rep.status == ReportStatus::Incomplete) std::cerr << rep.cause << "\n";
    return rep.status == ReportStatus::Pass ? 0 : rep.status == ReportStatus::Fail ? 1 : 2;
}

int run_entropy_rate(const RunConfig& cfg) {
    SurfaceModel surface = cfg.make_surface();
    EntropyReport rep;
    try {
        rep = entropy_report(surface, cfg.T, cfg.n_theta, cfg.h, cfg.seed, cfg.reference_rate,
                             cfg.workers);
    } catch (const DegenerateFitError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    std::ostringstream csv;
    csv << "T,log_value\n";
    for (size_t i = 0; i < rep.estimate.T_values.size(); ++i)
        csv << fmt17(rep.estimate.T_values[i]) << ',' << fmt17(rep.estimate.log_values[i]) << '\n';
    json summary{{"rate", rep.estimate.rate},
                 {"ci", rep.estimate.ci_half_width},
                 {"window", {rep.estimate.window_lo, rep.estimate.window_hi}},
                 {"n_excluded", rep.estimate.n_excluded},
                 {"reference", rep.reference ? json(*rep.reference) : json(nullptr)},
                 {"pass", rep.pass}};
    OutputDir out(cfg.out_dir);
    out.write_json("entropy_rate.json", summary);
    out.write_text("entropy_rate.csv", csv.str());
    out.log_run("entropy-rate");
    std::cout << "entropy-rate " << fmt17(rep.estimate.rate) << " +/- "
              << fmt17(rep.estimate.ci_half_width);
    if (rep.reference) std::cout << " (reference " << fmt17(*rep.reference) << ")";
    std::cout << "\n";
    return rep.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Magnetic geodesic flows on model surfaces: trajectories, "
                 "alpha-determinant growth, two-point trajectory counting, and the "
                 "counting-identity cross check"};
    app.require_subcommand(1);
    // the config key `h` maps to a `--h` flag, so the help flag is long-only
    app.set_help_flag("--help", "print this help message and exit");

    struct SubState {
        std::string config_path;
        std::map<std::string, std::string> overrides;
    };
    std::map<std::string, std::pair<CLI::App*, std::shared_ptr<SubState>>> subs;

    const char* names[] = {"trajectory", "det-growth", "count", "lemma-check", "entropy-rate"};
    const char* descs[] = {
        "integrate one magnetic trajectory and emit t,u,v,du,dv,energy",
        "alpha-determinant along one trajectory plus its exponential growth rate",
        "count trajectories from x to y with length <= T",
        "cross-validate the averaged count against the determinant integral",
        "exponential growth rate of the determinant integral vs a reference entropy"};
    for (int i = 0; i < 5; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], descs[i]);
        sub->set_help_flag("--help", "print this help message and exit");
        auto state = std::make_shared<SubState>();
        sub->add_option("--config", state->config_path, "configuration file (key = value lines)");
        for (const auto& [key, doc] : config_key_docs())
            sub->add_option_function<std::string>(
                "--" + key, [state, k = key](const std::string& v) { state->overrides[k] = v; },
                doc + " (overrides the config file)");
        subs[names[i]] = {sub, state};
    }

    CLI11_PARSE(app, argc, argv);

    for (const auto& [name, entry] : subs) {
        auto [sub, state] = entry;
        if (!sub->parsed()) continue;
        try {
            std::vector<std::pair<std::string, std::string>> overrides(state->overrides.begin(),
                                                                       state->overrides.end());
            RunConfig cfg = load_config(state->config_path, overrides);
            if (name == "trajectory") return run_trajectory(cfg);
            if (name == "det-growth") return run_det_growth(cfg);
            if (name == "count") return run_count(cfg);
            if (name == "lemma-check") return run_lemma_check(cfg);
            if (name == "entropy-rate") return run_entropy_rate(cfg);
        } catch (const ConfigParseError& e) {
            std::cerr << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
    }
    return 2;
}
