#include "etm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace etm {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> tokens(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

double to_num(const std::string& key, const std::string& s) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError("config key '" + key + "': not a number: '" + s + "'");
    }
}

const std::map<std::string, std::string>& preset_map() {
    static const std::map<std::string, std::string> presets = {
        {"example1",
         "model = sigmoid 9 3.5\n"
         "sigma = 0.5\n"
         "initial = density plateau_exp 0.5 1\n"
         "route = pde\n"
         "T = 25\n"
         "branch = 1\n"},
        {"example2",
         "model = sigmoid 9 3.5\n"
         "sigma = 0.5\n"
         "initial = density exp_shift 0.5\n"
         "route = pde\n"
         "T = 25\n"
         "branch = 1\n"},
        {"example3_1",
         "model = clamped_linear 1.6 1 0.25\n"
         "sigma = 1\n"
         "initial = density exp_shift 0\n"
         "route = pde\n"
         "T = 50\n"
         "branch = 1\n"},
        {"example3_2",
         "model = rational_shift 10 0.5\n"
         "sigma = 1\n"
         "initial = density exp_shift 1\n"
         "route = pde\n"
         "T = 50\n"
         "branch = 1\n"},
        {"example4",
         "model = double_gaussian 8 0.1 8 3\n"
         "sigma = 0.2\n"
         "initial = density cos_exp\n"
         "route = pde\n"
         "T = 10\n"
         "branch = 1\n"},
    };
    return presets;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    bool saw_model = false, saw_sigma = false, saw_initial = false, saw_T = false;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
        auto toks = tokens(val);
        auto one = [&]() {
            if (toks.size() != 1)
                throw ConfigError("config key '" + key + "': expected one value");
            return toks[0];
        };
        if (key == "model") {
            if (toks.empty()) throw ConfigError("config key 'model': missing name");
            c.model_name = toks[0];
            c.model_params.clear();
            for (size_t i = 1; i < toks.size(); ++i)
                c.model_params.push_back(to_num(key, toks[i]));
            saw_model = true;
        } else if (key == "sigma") {
            c.sigma = to_num(key, one());
            saw_sigma = true;
        } else if (key == "initial") {
            if (toks.empty()) throw ConfigError("config key 'initial': missing kind");
            if (toks[0] == "density") {
                if (toks.size() < 2)
                    throw ConfigError("config key 'initial': density needs a name");
                c.initial.kind = InitialSpec::Kind::Density;
                c.initial.density_name = toks[1];
                c.initial.density_params.clear();
                for (size_t i = 2; i < toks.size(); ++i)
                    c.initial.density_params.push_back(to_num(key, toks[i]));
            } else if (toks[0] == "steady") {
                if (toks.size() != 2)
                    throw ConfigError("config key 'initial': steady needs a root index");
                c.initial.kind = InitialSpec::Kind::Steady;
                c.initial.steady_index = static_cast<int>(to_num(key, toks[1]));
            } else if (toks[0] == "ramp") {
                if (toks.size() != 3)
                    throw ConfigError("config key 'initial': ramp needs index and delta");
                c.initial.kind = InitialSpec::Kind::Ramp;
                c.initial.ramp_target_index = static_cast<int>(to_num(key, toks[1]));
                c.initial.ramp_delta = to_num(key, toks[2]);
            } else {
                throw ConfigError("config key 'initial': unknown kind '" + toks[0] + "'");
            }
            saw_initial = true;
        } else if (key == "route") {
            std::string r = one();
            if (r == "pde")
                c.route = Route::Pde;
            else if (r == "delay")
                c.route = Route::Delay;
            else if (r == "monotone")
                c.route = Route::Monotone;
            else
                throw ConfigError("config key 'route': unknown route '" + r + "'");
        } else if (key == "T") {
            c.T = to_num(key, one());
            saw_T = true;
        } else if (key == "dt") {
            c.dt = to_num(key, one());
        } else if (key == "s_max") {
            c.s_max = to_num(key, one());
        } else if (key == "branch") {
            std::string v = one();
            if (v.rfind("value:", 0) == 0) {
                c.branch_value = to_num(key, v.substr(6));
            } else {
                c.branch = static_cast<int>(to_num(key, v));
            }
        } else if (key == "policy") {
            std::string p = one();
            if (p == "continuation_then_jump")
                c.policy = PolicyMode::ContinuationThenJump;
            else if (p == "fixed_branch")
                c.policy = PolicyMode::FixedBranch;
            else if (p == "fail_on_ambiguity")
                c.policy = PolicyMode::FailOnAmbiguity;
            else
                throw ConfigError("config key 'policy': unknown mode '" + p + "'");
        } else if (key == "snapshot_every") {
            c.snapshot_every = static_cast<int>(to_num(key, one()));
        } else {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    }
    if (!saw_model) throw ConfigError("config: missing key 'model'");
    if (!saw_sigma) throw ConfigError("config: missing key 'sigma'");
    if (!saw_initial) throw ConfigError("config: missing key 'initial'");
    if (!saw_T) throw ConfigError("config: missing key 'T'");
    if (c.sigma <= 0.0) throw ConfigError("config key 'sigma': must be positive");
    if (c.T <= 0.0) throw ConfigError("config key 'T': must be positive");

    double dt = c.effective_dt();
    double ratio = c.sigma / dt;
    if (std::abs(ratio - std::lround(ratio)) > 1e-9 || std::lround(ratio) < 1)
        throw ConfigError("config key 'dt': sigma/dt must be a positive integer");
    FiringModel model = build_model(c);
    if (c.route == Route::Pde && dt * model.p_hi >= 1.0)
        throw ConfigError("config key 'dt': dt * p_hi must be below 1 for the pde route");
    if (c.branch < 1) throw ConfigError("config key 'branch': index is 1-based");
    if (c.s_max != 0.0 && c.s_max <= c.sigma)
        throw ConfigError("config key 's_max': must exceed sigma");
    return c;
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "model = " << c.model_name;
    for (double p : c.model_params) os << ' ' << fmt(p);
    os << "\nsigma = " << fmt(c.sigma) << "\ninitial = ";
    switch (c.initial.kind) {
        case InitialSpec::Kind::Density:
            os << "density " << c.initial.density_name;
            for (double p : c.initial.density_params) os << ' ' << fmt(p);
            break;
        case InitialSpec::Kind::Steady:
            os << "steady " << c.initial.steady_index;
            break;
        case InitialSpec::Kind::Ramp:
            os << "ramp " << c.initial.ramp_target_index << ' ' << fmt(c.initial.ramp_delta);
            break;
    }
    os << "\nroute = "
       << (c.route == Route::Pde ? "pde" : (c.route == Route::Delay ? "delay" : "monotone"));
    os << "\nT = " << fmt(c.T);
    if (c.dt > 0.0) os << "\ndt = " << fmt(c.dt);
    if (c.s_max > 0.0) os << "\ns_max = " << fmt(c.s_max);
    if (c.branch_value)
        os << "\nbranch = value:" << fmt(*c.branch_value);
    else
        os << "\nbranch = " << c.branch;
    if (c.policy != PolicyMode::ContinuationThenJump)
        os << "\npolicy = "
           << (c.policy == PolicyMode::FixedBranch ? "fixed_branch" : "fail_on_ambiguity");
    if (c.snapshot_every > 0) os << "\nsnapshot_every = " << c.snapshot_every;
    os << "\n";
    return os.str();
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : preset_map()) out.push_back(k);
    return out;
}

std::string preset_text(const std::string& name) {
    auto it = preset_map().find(name);
    if (it == preset_map().end()) throw ConfigError("unknown preset '" + name + "'");
    return it->second;
}

ExperimentConfig preset(const std::string& name) { return parse_config(preset_text(name)); }

FiringModel build_model(const ExperimentConfig& c) {
    return builtin_model(c.model_name, c.model_params, c.sigma);
}

InitialDensity build_initial_density(const ExperimentConfig& c, const FiringModel& m) {
    switch (c.initial.kind) {
        case InitialSpec::Kind::Density:
            return make_density(c.initial.density_name, c.initial.density_params);
        case InitialSpec::Kind::Steady: {
            SteadyStateSet s = steady_states(m);
            if (c.initial.steady_index < 0 ||
                c.initial.steady_index >= static_cast<int>(s.roots.size()))
                throw ConfigError("initial steady: root index out of range");
            return steady_density(m, s.roots[c.initial.steady_index]);
        }
        case InitialSpec::Kind::Ramp:
            throw ConfigError("initial ramp: only valid with route = monotone");
    }
    throw ConfigError("initial: unreachable");
}

ExperimentResult run_experiment(const ExperimentConfig& c, const std::string& out_dir) {
    ExperimentResult res;
    res.config = c;
    res.model = build_model(c);
    const FiringModel& m = res.model;
    const double dt = c.effective_dt();

    res.steady = steady_states(m);

    BranchPolicy policy;
    policy.mode = c.policy;
    if (c.branch_value)
        policy.seed_value = *c.branch_value;
    else
        policy.seed_index = c.branch - 1;

    if (c.initial.kind == InitialSpec::Kind::Ramp) {
        if (c.route != Route::Monotone)
            throw ConfigError("initial ramp requires route = monotone");
        int idx = c.initial.ramp_target_index - 1;
        if (idx < 0 || idx >= static_cast<int>(res.steady.roots.size()))
            throw ConfigError("initial ramp: steady root index out of range");
        double n_star = res.steady.roots[idx];
        std::vector<double> hist = ramp_history(m, n_star, c.initial.ramp_delta, dt);
        BranchStructure br = analyze_branches(m);
        int b = br.branch_of(n_star);
        auto region = br.interval(b);
        res.trace = evolve_monotone(m, hist, region, c.T, dt);
        res.verification.pass = true;
    } else {
        InitialDensity n0 = build_initial_density(c, m);
        res.branches = initial_activities(m, n0);
        if (c.route == Route::Delay) {
            res.trace = evolve_activity(m, n0, c.T, dt, policy);
            res.verification.pass = true;
        } else if (c.route == Route::Pde) {
            double span = c.s_max > 0.0 ? c.s_max : m.sigma + std::min(20.0 / m.p_lo, 50.0);
            AgeGrid grid = AgeGrid::make(m.sigma, dt, span);
            int snap = c.snapshot_every;
            PdeRun run;
            if (c.initial.kind == InitialSpec::Kind::Steady) {
                // start on the scheme's own fixed point so the steady state
                // holds exactly under the discrete dynamics
                double n_star = res.steady.roots[c.initial.steady_index];
                DensityField f0 = discrete_steady_profile(m, n_star, grid);
                BranchPolicy p2 = policy;
                p2.seed_value = n_star;
                run = run_pde_from_field(m, f0, c.T, p2, snap);
            } else {
                run = run_pde(m, n0, grid, c.T, policy, snap);
            }
            res.trace = std::move(run.trace);
            res.snapshots = std::move(run.snapshots);
            res.snapshot_times = std::move(run.snapshot_times);
            res.max_mass_drift = run.max_mass_drift;
            if (!res.snapshots.empty())
                res.verification =
                    verify_solution(res.snapshots, res.snapshot_times, res.trace, m, 10.0 * dt);
            else
                res.verification.pass = true;
        } else {
            throw ConfigError("route = monotone requires initial = ramp");
        }
    }

    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        auto emit = [&](const std::string& name, const std::string& content) {
            std::string path = out_dir + "/" + name;
            std::ofstream f(path);
            if (!f) throw std::runtime_error("cannot write " + path);
            f << content;
            res.written_files.push_back(path);
        };
        {
            std::ostringstream os;
            write_trace_csv(res.trace, os);
            emit("trace.csv", os.str());
        }
        emit("steady_states.json", steady_to_json(res.steady));
        emit("initial_branches.json", branches_to_json(res.branches));
        emit("verification.json", verification_to_json(res.verification));
        emit("config.txt", serialize_config(c));
        nlohmann::json manifest;
        manifest["snapshot_times"] = res.snapshot_times;
        manifest["max_mass_drift"] = res.max_mass_drift;
        nlohmann::json jumps = nlohmann::json::array();
        for (const auto& j : res.trace.jumps)
            jumps.push_back({{"t", j.t}, {"before", j.before}, {"after", j.after}});
        manifest["jumps"] = jumps;
        for (size_t i = 0; i < res.snapshots.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof(name), "snapshot_%05zu.csv", i);
            std::ostringstream os;
            os << "s,n\n";
            const DensityField& f = res.snapshots[i];
            for (int j = 0; j < f.grid.n_cells; ++j) {
                char row[64];
                std::snprintf(row, sizeof(row), "%.12g,%.12g\n", f.grid.node(j),
                              f.values[j]);
                os << row;
            }
            emit(name, os.str());
        }
        emit("manifest.json", manifest.dump(2));
    }
    return res;
}

RouteComparison compare_routes(const ExperimentConfig& c, double horizon) {
    ExperimentConfig pde_cfg = c, delay_cfg = c;
    pde_cfg.route = Route::Pde;
    delay_cfg.route = Route::Delay;
    if (horizon > 0.0) {
        pde_cfg.T = horizon;
        delay_cfg.T = horizon;
    }
    ExperimentResult a = run_experiment(pde_cfg);
    ExperimentResult b = run_experiment(delay_cfg);
    RouteComparison out;
    const double dt = c.effective_dt();
    out.divergence_threshold = 10.0 * (dt + dt);
    int n = std::min(a.trace.size(), b.trace.size());
    for (int k = 0; k < n; ++k) {
        double d = std::abs(a.trace.values[k] - b.trace.values[k]);
        out.max_divergence = std::max(out.max_divergence, d);
        if (!out.first_divergence_time && d > out.divergence_threshold)
            out.first_divergence_time = k * dt;
    }
    for (const auto& j : a.trace.jumps) out.jump_times_pde.push_back(j.t);
    for (const auto& j : b.trace.jumps) out.jump_times_delay.push_back(j.t);
    return out;
}

std::string comparison_to_json(const RouteComparison& r) {
    nlohmann::json j;
    j["max_divergence"] = r.max_divergence;
    j["divergence_threshold"] = r.divergence_threshold;
    if (r.first_divergence_time)
        j["first_divergence_time"] = *r.first_divergence_time;
    else
        j["first_divergence_time"] = nullptr;
    j["jump_times_pde"] = r.jump_times_pde;
    j["jump_times_delay"] = r.jump_times_delay;
    return j.dump(2);
}

}  // namespace etm
