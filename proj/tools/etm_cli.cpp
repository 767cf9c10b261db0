#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "etm/harness.hpp"
#include "etm/periodic.hpp"
#include "json.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerification = 4;

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw etm::ConfigError("cannot read config file " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

struct CommonOpts {
    std::string config_path;
    std::string preset_name;
    std::string out_dir;
    double dt = 0.0;
    int branch = 0;
    std::string route;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "path to a key = value config file");
    cmd->add_option("--preset", o.preset_name, "preset name (see `preset --list`)");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--dt", o.dt, "override the time step");
    cmd->add_option("--branch", o.branch, "override the branch index (1-based)");
    cmd->add_option("--route", o.route, "override the route: pde | delay | monotone");
}

etm::ExperimentConfig load_config(const CommonOpts& o) {
    if (o.config_path.empty() == o.preset_name.empty())
        throw etm::ConfigError("exactly one of --config or --preset is required");
    etm::ExperimentConfig c = o.config_path.empty() ? etm::preset(o.preset_name)
                                                    : etm::parse_config(slurp(o.config_path));
    if (o.dt > 0.0) c.dt = o.dt;
    if (o.branch > 0) c.branch = o.branch;
    if (!o.route.empty()) {
        if (o.route == "pde")
            c.route = etm::Route::Pde;
        else if (o.route == "delay")
            c.route = etm::Route::Delay;
        else if (o.route == "monotone")
            c.route = etm::Route::Monotone;
        else
            throw etm::ConfigError("unknown route '" + o.route + "'");
    }
    // revalidate the assembled config
    return etm::parse_config(etm::serialize_config(c));
}

void emit(const std::string& out_dir, const std::string& name, const std::string& content) {
    if (out_dir.empty()) {
        std::cout << content << "\n";
        return;
    }
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir + "/" + name);
    f << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"elapsed-time neural network model: PDE and delay-equation simulator"};
    app.require_subcommand(1);

    CommonOpts steady_o, branches_o, run_o, compare_o, periodic_o, reconstruct_o;
    auto* cmd_steady = app.add_subcommand("steady", "steady states of the configured model");
    add_common(cmd_steady, steady_o);
    auto* cmd_branches =
        app.add_subcommand("branches", "admissible initial activities for the initial data");
    add_common(cmd_branches, branches_o);
    auto* cmd_run = app.add_subcommand("run", "run the configured experiment");
    add_common(cmd_run, run_o);
    auto* cmd_compare =
        app.add_subcommand("compare", "run pde and delay routes and report the divergence");
    add_common(cmd_compare, compare_o);

    auto* cmd_periodic =
        app.add_subcommand("periodic", "construct a periodic activity profile");
    add_common(cmd_periodic, periodic_o);
    std::string periodic_kind = "pc";
    double periodic_level = 0.0;
    double level_lo = 0.0, level_hi = 0.0;
    cmd_periodic->add_option("--kind", periodic_kind, "pc | two_sigma");
    cmd_periodic->add_option("--level", periodic_level, "psi level for the pc pair");
    cmd_periodic->add_option("--level-lo", level_lo, "calibration bracket, lower level");
    cmd_periodic->add_option("--level-hi", level_hi, "calibration bracket, upper level");

    auto* cmd_reconstruct = app.add_subcommand(
        "reconstruct", "initial density compatible with a steady activity history");
    add_common(cmd_reconstruct, reconstruct_o);
    int reconstruct_root = 1;
    cmd_reconstruct->add_option("--root", reconstruct_root,
                                "steady root (1-based) whose history is used");

    auto* cmd_preset = app.add_subcommand("preset", "list or show presets");
    bool list_presets = false;
    std::string show_preset;
    cmd_preset->add_flag("--list", list_presets, "list preset names");
    cmd_preset->add_option("--show", show_preset, "print a preset config document");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_preset->parsed()) {
            if (list_presets)
                for (const auto& n : etm::preset_names()) std::cout << n << "\n";
            if (!show_preset.empty()) std::cout << etm::preset_text(show_preset);
            return 0;
        }
        if (cmd_steady->parsed()) {
            auto c = load_config(steady_o);
            auto s = etm::steady_states(etm::build_model(c));
            emit(steady_o.out_dir, "steady_states.json", etm::steady_to_json(s));
            return 0;
        }
        if (cmd_branches->parsed()) {
            auto c = load_config(branches_o);
            auto m = etm::build_model(c);
            auto b = etm::initial_activities(m, etm::build_initial_density(c, m));
            emit(branches_o.out_dir, "initial_branches.json", etm::branches_to_json(b));
            return 0;
        }
        if (cmd_run->parsed()) {
            auto c = load_config(run_o);
            auto res = etm::run_experiment(c, run_o.out_dir);
            if (run_o.out_dir.empty()) {
                std::ostringstream os;
                etm::write_trace_csv(res.trace, os);
                std::cout << os.str();
            }
            if (!res.verification.pass) {
                std::cerr << "verification failed: "
                          << etm::verification_to_json(res.verification) << "\n";
                return kExitVerification;
            }
            return 0;
        }
        if (cmd_compare->parsed()) {
            auto c = load_config(compare_o);
            auto r = etm::compare_routes(c);
            emit(compare_o.out_dir, "route_comparison.json", etm::comparison_to_json(r));
            return 0;
        }
        if (cmd_periodic->parsed()) {
            auto c = load_config(periodic_o);
            auto m = etm::build_model(c);
            nlohmann::json j;
            etm::PeriodicProfile profile;
            if (periodic_kind == "pc") {
                auto pairs = etm::psi_level_pairs(m, periodic_level);
                auto r = etm::construct_piecewise_constant(m, pairs.front().first,
                                                           pairs.back().second);
                profile = r.profile;
                j["kind"] = "piecewise_constant";
                j["alpha"] = r.alpha;
                j["N1"] = profile.samples.front();
                j["N2"] = profile.samples.back();
            } else if (periodic_kind == "two_sigma") {
                auto r = etm::calibrate_mass(m, level_lo, level_hi, c.effective_dt());
                profile = r.result.profile;
                j["kind"] = "two_sigma";
                j["level"] = r.level;
                j["N_plus"] = r.result.mass.N_plus;
                j["N_minus"] = profile.samples.back();
                j["Q"] = r.result.mass.Q_value;
                j["iterations"] = r.result.iterations;
                j["contraction_ratio"] = r.result.contraction_ratio;
                j["psi_jump_mismatch"] = r.result.psi_jump_mismatch;
            } else {
                throw etm::ConfigError("unknown periodic kind '" + periodic_kind + "'");
            }
            j["period"] = profile.period;
            j["residual"] = profile.residual;
            j["jump_points"] = profile.jump_points;
            // one period in the trace CSV format
            etm::ActivityTrace tr;
            tr.dt = profile.dt;
            tr.sigma = c.sigma;
            auto br = etm::analyze_branches(m);
            for (int k = 0; k < profile.samples_per_period(); ++k) {
                double v = profile.samples[k];
                tr.values.push_back(v);
                tr.psi_values.push_back(etm::psi_eval(m, v));
                tr.branch_ids.push_back(br.branch_of(v));
            }
            for (double jp : profile.jump_points)
                if (jp < profile.period)
                    tr.jumps.push_back({jp, profile.value(jp - profile.dt), profile.value(jp)});
            std::ostringstream csv;
            etm::write_trace_csv(tr, csv);
            emit(periodic_o.out_dir, "profile.csv", csv.str());
            emit(periodic_o.out_dir, "profile.json", j.dump(2));
            return 0;
        }
        if (cmd_reconstruct->parsed()) {
            auto c = load_config(reconstruct_o);
            auto m = etm::build_model(c);
            auto s = etm::steady_states(m);
            if (reconstruct_root < 1 || reconstruct_root > static_cast<int>(s.roots.size()))
                throw etm::ConfigError("reconstruct: --root out of range");
            double n_star = s.roots[reconstruct_root - 1];
            double dt = c.effective_dt();
            int ms = static_cast<int>(std::lround(c.sigma / dt));
            std::vector<double> hist(ms + 1, n_star);
            auto grid = etm::AgeGrid::with_default_span(m, dt);
            auto field = etm::initial_from_activity(m, hist, dt, grid);
            std::ostringstream csv;
            csv << "s,n\n";
            for (int jx = 0; jx < field.grid.n_cells; ++jx) {
                char row[64];
                std::snprintf(row, sizeof(row), "%.12g,%.12g\n", field.grid.node(jx),
                              field.values[jx]);
                csv << row;
            }
            emit(reconstruct_o.out_dir, "density.csv", csv.str());
            return 0;
        }
    } catch (const etm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const etm::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
