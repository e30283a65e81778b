// Command-line front end: simulate one scenario, sweep a parameter, or
// summarize an existing trace.
//
// Exit codes: 0 ok, 2 configuration/usage error, 3 runtime error,
// 4 at least one constraint violation.

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcbf/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitViolation = 4;

json summary_json(const pcbf::ViolationSummary& s) {
    json per = json::array();
    for (std::size_t i = 0; i < s.per_constraint.size(); ++i) {
        const auto& c = s.per_constraint[i];
        per.push_back({{"constraint", i + 1},
                       {"count", c.count},
                       {"first_step", c.first_step ? json(*c.first_step) : json(nullptr)},
                       {"max_depth", c.max_depth}});
    }
    return {{"violating_steps", s.violating_steps},
            {"total_violations", s.total()},
            {"projecting_steps", s.projecting_steps},
            {"infeasible_steps", s.infeasible_steps},
            {"constraints", per}};
}

void print_summary(std::ostream& os, const std::string& label, const pcbf::ViolationSummary& s, std::size_t steps) {
    os << label << ": " << steps << " steps, " << s.violating_steps << " violating, " << s.projecting_steps
       << " projecting, " << s.infeasible_steps << " infeasible-passthrough\n";
    for (std::size_t i = 0; i < s.per_constraint.size(); ++i) {
        const auto& c = s.per_constraint[i];
        if (c.count == 0)
            continue;
        os << "  h" << (i + 1) << ": count " << c.count << ", first step " << *c.first_step << ", max depth "
           << c.max_depth << '\n';
    }
}

// Runs one scenario and writes trace.csv and summary.json into `dir`.
pcbf::ViolationSummary run_and_write(const pcbf::ScenarioConfig& cfg, const fs::path& dir,
                                     const std::string& trace_name, std::size_t& steps) {
    const pcbf::SimTrace trace = pcbf::run_scenario(cfg);
    fs::create_directories(dir);
    pcbf::write_trace(trace, (dir / trace_name).string());
    const auto summary = pcbf::report_violations(trace);
    json out = summary_json(summary);
    out["name"] = cfg.name;
    out["plant"] = pcbf::to_string(cfg.plant);
    out["steps"] = trace.records.size();
    out["seed"] = cfg.seed;
    out["trace"] = trace_name;
    std::ofstream(dir / "summary.json") << out.dump(2) << '\n';
    steps = trace.records.size();
    return summary;
}

int cmd_simulate(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed) {
    pcbf::ScenarioConfig cfg = pcbf::load_config(config);
    if (seed)
        cfg.seed = *seed;
    const fs::path dir = out.empty() ? fs::path(cfg.output.dir) : fs::path(out);
    std::size_t steps = 0;
    const auto summary = run_and_write(cfg, dir, cfg.output.trace, steps);
    print_summary(std::cout, cfg.name, summary, steps);
    std::cout << "wrote " << (dir / cfg.output.trace).string() << '\n';
    return summary.any() ? kExitViolation : kExitOk;
}

// Values are parsed as JSON when possible ("3", "true", "[1,2]"), otherwise
// taken as strings.
json parse_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return text;
    }
}

int cmd_sweep(const std::string& config, const std::string& param, const std::vector<std::string>& values,
              const std::string& out) {
    const json base = pcbf::read_json_file(config);
    // Validate every variant before starting any run.
    std::vector<pcbf::ScenarioConfig> cfgs;
    for (const auto& v : values) {
        json doc = base;
        pcbf::set_config_value(doc, param, parse_value(v));
        try {
            cfgs.push_back(pcbf::parse_config(doc));
        } catch (const pcbf::ConfigError& e) {
            throw pcbf::ConfigError(param + "=" + v + ": " + e.what());
        }
    }
    const fs::path root = out.empty() ? fs::path(cfgs.empty() ? "out" : cfgs.front().output.dir) / "sweep" : fs::path(out);

    struct Outcome {
        pcbf::ViolationSummary summary;
        std::size_t steps = 0;
    };
    std::vector<std::future<Outcome>> jobs;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        const fs::path dir = root / (param + "=" + values[i]);
        jobs.push_back(std::async(std::launch::async, [cfg = cfgs[i], dir] {
            Outcome o;
            o.summary = run_and_write(cfg, dir, cfg.output.trace, o.steps);
            return o;
        }));
    }
    bool any = false;
    std::string failure;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        try {
            const Outcome o = jobs[i].get();
            print_summary(std::cout, param + "=" + values[i], o.summary, o.steps);
            any = any || o.summary.any();
        } catch (const std::exception& e) {
            std::cerr << param << "=" << values[i] << ": " << e.what() << '\n';
            failure = e.what();
        }
    }
    if (!failure.empty())
        return kExitRuntime;
    return any ? kExitViolation : kExitOk;
}

int cmd_report(const std::string& path) {
    const pcbf::SimTrace trace = pcbf::read_trace(path);
    const auto summary = pcbf::report_violations(trace);
    print_summary(std::cout, path, summary, trace.records.size());
    return summary.any() ? kExitViolation : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictive control barrier function simulator"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    auto* simulate = app.add_subcommand("simulate", "Run one scenario and write trace.csv and summary.json");
    simulate->add_option("--config", config, "Scenario JSON file")->required();
    simulate->add_option("--out", out, "Output directory (default: the config's output.dir)");
    auto* seed_opt = simulate->add_option("--seed", seed, "Seed for initial_state_jitter");

    std::string param;
    std::vector<std::string> values;
    auto* sweep = app.add_subcommand("sweep", "Run one scenario per parameter value, in parallel");
    sweep->add_option("--config", config, "Base scenario JSON file")->required();
    sweep->add_option("--param", param, "Dotted config path, e.g. filter.horizon")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
    sweep->add_option("--out", out, "Output root (default: <output.dir>/sweep)");

    std::string trace_path;
    auto* report = app.add_subcommand("report", "Summarize violations in a trace CSV");
    report->add_option("--trace", trace_path, "Trace CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*simulate)
            return cmd_simulate(config, out, *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt);
        if (*sweep)
            return cmd_sweep(config, param, values, out);
        return cmd_report(trace_path);
    } catch (const pcbf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
