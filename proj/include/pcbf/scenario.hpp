#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pcbf/closed_loop.hpp"

namespace pcbf {

// Raised for malformed or invalid scenario files. The message names the
// offending field (dotted path) or, for syntax errors, the line and column.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OutputSettings {
    std::string dir = "out";
    std::string trace = "trace.csv";
};

struct ScenarioConfig {
    std::string name = "scenario";
    PlantKind plant = PlantKind::double_integrator;
    int duration_steps = 400;
    double initial_state_jitter = 0.0;
    std::uint64_t seed = 0;
    std::variant<DoubleIntegratorSetup, BicopterSetup> setup;
    OutputSettings output;

    [[nodiscard]] const FilterSettings& filter() const {
        return std::visit([](const auto& s) -> const FilterSettings& { return s.filter; }, setup);
    }
};

namespace detail {

using nlohmann::json;

[[nodiscard]] inline std::string join_path(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

template <class T>
[[nodiscard]] T get_as(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + ": unexpected type " + std::string(j.type_name()));
    }
}

[[nodiscard]] inline double get_number(const json& j, const std::string& path) {
    if (!j.is_number())
        throw ConfigError(path + ": expected a number, got " + std::string(j.type_name()));
    const double v = j.get<double>();
    if (!std::isfinite(v))
        throw ConfigError(path + ": value must be finite");
    return v;
}

[[nodiscard]] inline int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer())
        throw ConfigError(path + ": expected an integer, got " + std::string(j.type_name()));
    return j.get<int>();
}

[[nodiscard]] inline std::vector<double> get_vector(const json& j, const std::string& path) {
    if (!j.is_array())
        throw ConfigError(path + ": expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

[[nodiscard]] inline Matrix get_row(const json& j, const std::string& path, std::size_t expected) {
    auto v = get_vector(j, path);
    if (v.size() != expected)
        throw ConfigError(path + ": expected " + std::to_string(expected) + " entries, got " +
                          std::to_string(v.size()));
    return Matrix::row(std::move(v));
}

[[nodiscard]] inline ReferenceProfile parse_reference(const json& j, const std::string& path) {
    if (j.is_number())
        return ReferenceProfile::constant(get_number(j, path));
    if (!j.is_object())
        throw ConfigError(path + ": expected a number or an object");
    if (j.contains("constant"))
        return ReferenceProfile::constant(get_number(j["constant"], join_path(path, "constant")));
    if (j.contains("ramp")) {
        const json& r = j["ramp"];
        const std::string rp = join_path(path, "ramp");
        if (!r.contains("final"))
            throw ConfigError(rp + ".final: missing");
        const double duration = r.contains("duration") ? get_number(r["duration"], rp + ".duration") : 5.0;
        if (!(duration > 0.0))
            throw ConfigError(rp + ".duration: must be positive");
        return ReferenceProfile::ramp(get_number(r["final"], rp + ".final"), duration);
    }
    if (j.contains("points")) {
        const std::string pp = join_path(path, "points");
        const json& pts = j["points"];
        if (!pts.is_array() || pts.empty())
            throw ConfigError(pp + ": expected a nonempty array of [t, value] pairs");
        ReferenceProfile prof;
        prof.points.clear();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto pair = get_vector(pts[i], pp + "[" + std::to_string(i) + "]");
            if (pair.size() != 2)
                throw ConfigError(pp + "[" + std::to_string(i) + "]: expected [t, value]");
            if (!prof.points.empty() && !(pair[0] > prof.points.back().first))
                throw ConfigError(pp + ": times must be strictly increasing");
            prof.points.emplace_back(pair[0], pair[1]);
        }
        return prof;
    }
    throw ConfigError(path + ": expected one of 'constant', 'ramp', 'points'");
}

[[nodiscard]] inline PolytopicBarrier parse_barrier(const json& j, const std::string& path, std::size_t n) {
    if (!j.is_object())
        throw ConfigError(path + ": expected an object");
    try {
        if (j.contains("box")) {
            const std::string bp = join_path(path, "box");
            const json& box = j["box"];
            if (!box.is_array() || box.size() != n)
                throw ConfigError(bp + ": expected " + std::to_string(n) + " [min, max] pairs");
            std::vector<std::pair<double, double>> bounds;
            for (std::size_t i = 0; i < n; ++i) {
                const auto pair = get_vector(box[i], bp + "[" + std::to_string(i) + "]");
                if (pair.size() != 2 || !(pair[0] < pair[1]))
                    throw ConfigError(bp + "[" + std::to_string(i) + "]: expected [min, max] with min < max");
                bounds.emplace_back(pair[0], pair[1]);
            }
            return box_barrier(bounds);
        }
        if (j.contains("a_cbf") && j.contains("b_cbf")) {
            const json& a = j["a_cbf"];
            const auto b = get_vector(j["b_cbf"], join_path(path, "b_cbf"));
            if (!a.is_array() || a.size() != b.size() || a.empty())
                throw ConfigError(join_path(path, "a_cbf") + ": expected " + std::to_string(b.size()) + " rows");
            Matrix am(b.size(), n);
            for (std::size_t i = 0; i < b.size(); ++i)
                am.set_block(i, 0, get_row(a[i], join_path(path, "a_cbf") + "[" + std::to_string(i) + "]", n));
            return PolytopicBarrier(std::move(am), Matrix::column(b));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    throw ConfigError(path + ": expected 'box' or 'a_cbf'/'b_cbf'");
}

[[nodiscard]] inline int parse_horizon(const json& j, const std::string& path) {
    const int h = get_int(j, path);
    if (h < 1)
        throw ConfigError(path + ": horizons must be at least 1");
    return h;
}

inline void parse_filter(const json& root, FilterSettings& f, bool bicopter) {
    if (!root.contains("filter"))
        return;
    const json& j = root["filter"];
    if (!j.is_object())
        throw ConfigError("filter: expected an object");
    if (j.contains("enabled"))
        f.enabled = get_as<bool>(j["enabled"], "filter.enabled");
    if (j.contains("gamma"))
        f.gamma = get_number(j["gamma"], "filter.gamma");
    if (j.contains("warm_start"))
        f.warm_start = get_as<bool>(j["warm_start"], "filter.warm_start");
    if (bicopter) {
        if (j.contains("horizon_h"))
            f.horizons[0] = parse_horizon(j["horizon_h"], "filter.horizon_h");
        if (j.contains("horizon_v"))
            f.horizons[1] = parse_horizon(j["horizon_v"], "filter.horizon_v");
    } else if (j.contains("horizon")) {
        f.horizons[0] = parse_horizon(j["horizon"], "filter.horizon");
    }
    if (f.enabled && !(f.gamma > 0.0 && f.gamma < 1.0))
        throw ConfigError("filter.gamma: gamma must lie strictly in (0,1)");
}

[[nodiscard]] inline double parse_ts(const json& root, double fallback) {
    if (!root.contains("ts"))
        return fallback;
    const double ts = get_number(root["ts"], "ts");
    if (!(ts > 0.0))
        throw ConfigError("ts: sample time must be positive");
    return ts;
}

[[nodiscard]] inline DoubleIntegratorSetup parse_double_integrator(const json& root) {
    DoubleIntegratorSetup s;
    s.ts = parse_ts(root, 1.0);
    s.delay_steps = 0;
    if (root.contains("delay_steps")) {
        const int m = get_int(root["delay_steps"], "delay_steps");
        if (m < 0)
            throw ConfigError("delay_steps: must be nonnegative");
        s.delay_steps = static_cast<unsigned>(m);
    }
    if (root.contains("initial_state")) {
        const auto x0 = get_vector(root["initial_state"], "initial_state");
        if (x0.size() != 2)
            throw ConfigError("initial_state: expected 2 entries");
        s.x0 = Matrix::column(x0);
    }
    s.reference = root.contains("reference") ? parse_reference(root["reference"], "reference")
                                             : ReferenceProfile::constant(0.0);
    if (root.contains("constraints"))
        s.barrier = parse_barrier(root["constraints"], "constraints", 2);
    parse_filter(root, s.filter, false);
    if (root.contains("controller")) {
        const json& c = root["controller"];
        if (c.contains("gain"))
            s.gain = get_row(c["gain"], "controller.gain", 3);
        if (c.contains("anti_windup")) {
            s.anti_windup = get_number(c["anti_windup"], "controller.anti_windup");
            if (s.anti_windup < 0.0)
                throw ConfigError("controller.anti_windup: must be nonnegative");
        }
    }
    return s;
}

[[nodiscard]] inline BicopterSetup parse_bicopter(const json& root) {
    BicopterSetup s;
    s.ts = parse_ts(root, 0.005);
    if (root.contains("params")) {
        const json& p = root["params"];
        if (p.contains("mass"))
            s.params.mass = get_number(p["mass"], "params.mass");
        if (p.contains("inertia"))
            s.params.inertia = get_number(p["inertia"], "params.inertia");
        if (p.contains("arm"))
            s.params.arm = get_number(p["arm"], "params.arm");
        if (p.contains("gravity"))
            s.params.gravity = get_number(p["gravity"], "params.gravity");
        if (p.contains("substeps"))
            s.substeps = get_int(p["substeps"], "params.substeps");
        try {
            s.params.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("params: ") + e.what());
        }
        if (s.substeps < 1)
            throw ConfigError("params.substeps: must be at least 1");
    }
    if (root.contains("initial_state")) {
        const auto x0 = get_vector(root["initial_state"], "initial_state");
        if (x0.size() != 6)
            throw ConfigError("initial_state: expected 6 entries");
        s.x0 = BicopterState{x0[0], x0[1], x0[2], x0[3], x0[4], x0[5]};
    }
    if (root.contains("reference")) {
        const json& r = root["reference"];
        if (!r.is_object())
            throw ConfigError("reference: expected an object with 'horizontal' and 'vertical'");
        if (r.contains("horizontal"))
            s.reference_h = parse_reference(r["horizontal"], "reference.horizontal");
        if (r.contains("vertical"))
            s.reference_v = parse_reference(r["vertical"], "reference.vertical");
    }
    if (root.contains("constraints")) {
        const json& c = root["constraints"];
        if (c.contains("horizontal"))
            s.barrier_h = parse_barrier(c["horizontal"], "constraints.horizontal", 2);
        if (c.contains("vertical"))
            s.barrier_v = parse_barrier(c["vertical"], "constraints.vertical", 2);
    }
    parse_filter(root, s.filter, true);
    if (root.contains("controller")) {
        const json& c = root["controller"];
        if (c.contains("gain_h"))
            s.gains.horizontal = get_row(c["gain_h"], "controller.gain_h", 3);
        if (c.contains("gain_v"))
            s.gains.vertical = get_row(c["gain_v"], "controller.gain_v", 3);
        if (c.contains("gain_att"))
            s.gains.attitude = get_row(c["gain_att"], "controller.gain_att", 3);
        if (c.contains("anti_windup")) {
            s.gains.anti_windup = get_number(c["anti_windup"], "controller.anti_windup");
            if (s.gains.anti_windup < 0.0)
                throw ConfigError("controller.anti_windup: must be nonnegative");
        }
    }
    return s;
}

[[nodiscard]] inline std::string line_context(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

} // namespace detail

inline constexpr int kSchemaVersion = 1;

[[nodiscard]] inline ScenarioConfig parse_config(const nlohmann::json& root) {
    using detail::get_int;
    if (!root.is_object())
        throw ConfigError("config: top level must be an object");
    if (!root.contains("schema_version"))
        throw ConfigError("schema_version: missing");
    if (get_int(root["schema_version"], "schema_version") != kSchemaVersion)
        throw ConfigError("schema_version: unsupported version (expected 1)");
    if (!root.contains("plant"))
        throw ConfigError("plant: missing plant selector (double_integrator | bicopter)");

    ScenarioConfig cfg;
    const auto plant = detail::get_as<std::string>(root["plant"], "plant");
    if (plant == "double_integrator") {
        cfg.plant = PlantKind::double_integrator;
        cfg.setup = detail::parse_double_integrator(root);
        cfg.duration_steps = 400;
    } else if (plant == "bicopter") {
        cfg.plant = PlantKind::bicopter;
        cfg.setup = detail::parse_bicopter(root);
        cfg.duration_steps = 4000;
    } else {
        throw ConfigError("plant: unknown plant '" + plant + "' (expected double_integrator | bicopter)");
    }
    if (root.contains("name"))
        cfg.name = detail::get_as<std::string>(root["name"], "name");
    if (root.contains("duration_steps"))
        cfg.duration_steps = get_int(root["duration_steps"], "duration_steps");
    if (cfg.duration_steps < 1)
        throw ConfigError("duration_steps: must be at least 1");
    if (root.contains("initial_state_jitter")) {
        cfg.initial_state_jitter = detail::get_number(root["initial_state_jitter"], "initial_state_jitter");
        if (cfg.initial_state_jitter < 0.0)
            throw ConfigError("initial_state_jitter: must be nonnegative");
    }
    if (root.contains("seed"))
        cfg.seed = detail::get_as<std::uint64_t>(root["seed"], "seed");
    if (root.contains("output")) {
        const auto& o = root["output"];
        if (o.contains("dir"))
            cfg.output.dir = detail::get_as<std::string>(o["dir"], "output.dir");
        if (o.contains("trace"))
            cfg.output.trace = detail::get_as<std::string>(o["trace"], "output.trace");
    }
    return cfg;
}

[[nodiscard]] inline nlohmann::json parse_json_text(const std::string& text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("parse error at " + detail::line_context(text, e.byte) + ": " + e.what());
    }
}

[[nodiscard]] inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str());
}

[[nodiscard]] inline ScenarioConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

// Sets a dotted path such as "filter.horizon" inside a config document,
// creating intermediate objects as needed.
inline void set_config_value(nlohmann::json& root, const std::string& dotted, const nlohmann::json& value) {
    nlohmann::json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty())
            throw ConfigError("invalid parameter path '" + dotted + "'");
        if (!node->is_object())
            throw ConfigError("parameter path '" + dotted + "' traverses a non-object");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null())
            *node = nlohmann::json::object();
        start = dot + 1;
    }
}

// Runtime failure inside a closed-loop run, tagged with the step index.
class SimulationError : public std::runtime_error {
public:
    SimulationError(int step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
    [[nodiscard]] int step() const noexcept { return step_; }

private:
    int step_;
};

namespace detail {

template <class Loop>
[[nodiscard]] SimTrace run_loop(Loop& loop, PlantKind plant, int steps) {
    SimTrace trace;
    trace.plant = plant;
    trace.records.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) {
        try {
            trace.records.push_back(loop.step());
        } catch (const std::exception& e) {
            throw SimulationError(k, e.what());
        }
    }
    return trace;
}

} // namespace detail

[[nodiscard]] inline SimTrace run_scenario(const ScenarioConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> jitter(-cfg.initial_state_jitter, cfg.initial_state_jitter);
    if (cfg.plant == PlantKind::double_integrator) {
        DoubleIntegratorSetup setup = std::get<DoubleIntegratorSetup>(cfg.setup);
        if (cfg.initial_state_jitter > 0.0)
            for (std::size_t i = 0; i < setup.x0.size(); ++i)
                setup.x0[i] += jitter(rng);
        DoubleIntegratorLoop loop(std::move(setup));
        return detail::run_loop(loop, cfg.plant, cfg.duration_steps);
    }
    BicopterSetup setup = std::get<BicopterSetup>(cfg.setup);
    if (cfg.initial_state_jitter > 0.0) {
        auto a = setup.x0.as_array();
        for (double& v : a)
            v += jitter(rng);
        setup.x0 = BicopterState::from_array(a);
    }
    BicopterLoop loop(std::move(setup));
    return detail::run_loop(loop, cfg.plant, cfg.duration_steps);
}

// ---------------------------------------------------------------------------
// Violation summary
// ---------------------------------------------------------------------------
struct ConstraintViolations {
    int count = 0;
    std::optional<int> first_step;
    double max_depth = 0.0;
};

struct ViolationSummary {
    std::vector<ConstraintViolations> per_constraint;
    int violating_steps = 0;
    int infeasible_steps = 0;
    int projecting_steps = 0;

    [[nodiscard]] int total() const {
        int t = 0;
        for (const auto& c : per_constraint)
            t += c.count;
        return t;
    }
    [[nodiscard]] bool any() const { return violating_steps > 0; }
};

// Counts come from the violation flags; depth is -h on flagged steps.
[[nodiscard]] inline ViolationSummary report_violations(const SimTrace& trace) {
    ViolationSummary s;
    for (const auto& rec : trace.records) {
        if (s.per_constraint.size() < rec.violation.size())
            s.per_constraint.resize(rec.violation.size());
        bool any = false;
        for (std::size_t i = 0; i < rec.violation.size(); ++i) {
            if (!rec.violation[i])
                continue;
            any = true;
            auto& c = s.per_constraint[i];
            ++c.count;
            if (!c.first_step)
                c.first_step = rec.step;
            if (i < rec.barrier.size())
                c.max_depth = std::max(c.max_depth, -rec.barrier[i]);
        }
        if (any)
            ++s.violating_steps;
        if (rec.status == FilterStatus::infeasible_passthrough)
            ++s.infeasible_steps;
        if (rec.status == FilterStatus::projecting)
            ++s.projecting_steps;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Trace CSV
// ---------------------------------------------------------------------------
namespace detail {

[[nodiscard]] inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

[[nodiscard]] inline double parse_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("trace: cannot parse number '" + s + "'");
    return v;
}

[[nodiscard]] inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

[[nodiscard]] inline std::vector<std::string> state_columns(PlantKind plant) {
    if (plant == PlantKind::double_integrator)
        return {"x1", "x2"};
    return {"p_h", "v_h", "p_v", "v_v", "theta", "omega"};
}

} // namespace detail

[[nodiscard]] inline std::vector<std::string> trace_header(PlantKind plant, std::size_t num_constraints) {
    std::vector<std::string> cols{"step", "t"};
    const bool di = plant == PlantKind::double_integrator;
    if (di) {
        cols.insert(cols.end(), {"r"});
    } else {
        cols.insert(cols.end(), {"r_h", "r_v"});
    }
    for (auto& c : detail::state_columns(plant))
        cols.push_back(c);
    if (di) {
        cols.insert(cols.end(), {"u_req", "u_app"});
    } else {
        cols.insert(cols.end(), {"u_req_h", "u_req_v", "u_app_h", "u_app_v", "T", "tau"});
    }
    for (std::size_t i = 1; i <= num_constraints; ++i)
        cols.push_back("h" + std::to_string(i));
    cols.push_back("status");
    for (std::size_t i = 1; i <= num_constraints; ++i)
        cols.push_back("viol" + std::to_string(i));
    return cols;
}

[[nodiscard]] inline std::string format_trace(const SimTrace& trace) {
    const std::size_t p = trace.records.empty() ? 0 : trace.records.front().barrier.size();
    std::ostringstream os;
    const auto header = trace_header(trace.plant, p);
    for (std::size_t i = 0; i < header.size(); ++i)
        os << (i ? "," : "") << header[i];
    os << '\n';
    using detail::format_double;
    for (const auto& r : trace.records) {
        os << r.step << ',' << format_double(r.t);
        for (double v : r.reference)
            os << ',' << format_double(v);
        for (double v : r.state)
            os << ',' << format_double(v);
        if (trace.plant == PlantKind::double_integrator) {
            os << ',' << format_double(r.u_requested.at(0)) << ',' << format_double(r.u_applied.at(0));
        } else {
            for (double v : r.u_requested)
                os << ',' << format_double(v);
            for (double v : r.u_applied)
                os << ',' << format_double(v);
            for (double v : r.actuation)
                os << ',' << format_double(v);
        }
        for (double v : r.barrier)
            os << ',' << format_double(v);
        os << ',' << to_string(r.status);
        for (bool f : r.violation)
            os << ',' << (f ? 1 : 0);
        os << '\n';
    }
    return os.str();
}

inline void write_trace(const SimTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    out << format_trace(trace);
    if (!out)
        throw std::runtime_error("write to '" + path + "' failed");
}

[[nodiscard]] inline SimTrace parse_trace(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("trace: empty input");
    const auto header = detail::split_csv(line);
    auto find = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    SimTrace trace;
    trace.plant = find("theta") ? PlantKind::bicopter : PlantKind::double_integrator;
    const bool di = trace.plant == PlantKind::double_integrator;

    auto require = [&](const std::string& name) {
        const auto idx = find(name);
        if (!idx)
            throw std::runtime_error("trace: missing column '" + name + "'");
        return *idx;
    };
    auto columns = [&](const std::vector<std::string>& names) {
        std::vector<std::size_t> idx;
        for (const auto& n : names)
            idx.push_back(require(n));
        return idx;
    };
    const auto ref_cols = columns(di ? std::vector<std::string>{"r"} : std::vector<std::string>{"r_h", "r_v"});
    const auto state_cols = columns(detail::state_columns(trace.plant));
    const auto req_cols =
        columns(di ? std::vector<std::string>{"u_req"} : std::vector<std::string>{"u_req_h", "u_req_v"});
    const auto app_cols =
        columns(di ? std::vector<std::string>{"u_app"} : std::vector<std::string>{"u_app_h", "u_app_v"});
    const auto act_cols = di ? std::vector<std::size_t>{} : columns({"T", "tau"});
    std::vector<std::size_t> h_cols;
    std::vector<std::size_t> v_cols;
    for (std::size_t i = 1; find("h" + std::to_string(i)); ++i) {
        h_cols.push_back(*find("h" + std::to_string(i)));
        v_cols.push_back(require("viol" + std::to_string(i)));
    }
    const std::size_t step_col = require("step");
    const std::size_t t_col = require("t");
    const std::size_t status_col = require("status");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != header.size())
            throw std::runtime_error("trace: line " + std::to_string(line_no) + " has " +
                                     std::to_string(cells.size()) + " fields, expected " +
                                     std::to_string(header.size()));
        TraceRecord r;
        r.step = static_cast<int>(detail::parse_double(cells[step_col]));
        r.t = detail::parse_double(cells[t_col]);
        auto take = [&](const std::vector<std::size_t>& idx) {
            std::vector<double> v;
            for (std::size_t i : idx)
                v.push_back(detail::parse_double(cells[i]));
            return v;
        };
        r.reference = take(ref_cols);
        r.state = take(state_cols);
        r.u_requested = take(req_cols);
        r.u_applied = take(app_cols);
        r.actuation = take(act_cols);
        r.barrier = take(h_cols);
        r.status = filter_status_from_string(cells[status_col]);
        for (std::size_t i : v_cols)
            r.violation.push_back(cells[i] == "1");
        trace.records.push_back(std::move(r));
    }
    return trace;
}

[[nodiscard]] inline SimTrace read_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open trace '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_trace(ss.str());
}

} // namespace pcbf
