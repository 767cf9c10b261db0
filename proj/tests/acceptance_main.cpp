// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "etm/harness.hpp"
#include "etm/periodic.hpp"
#include "etm/reconstruct.hpp"

using namespace etm;

namespace {

int g_failures = 0;

struct Check {
    std::ostringstream msg;
    bool ok = true;
    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            msg << (msg.str().empty() ? "" : "; ") << what;
        }
    }
};

void criterion(int id, const std::string& name, const std::function<void(Check&)>& body) {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.ok = false;
        c.msg << "exception: " << e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d. %s (%.2fs)%s%s\n", c.ok ? "PASS" : "FAIL", id, name.c_str(), secs,
                c.msg.str().empty() ? "" : " -- ", c.msg.str().c_str());
    if (!c.ok) ++g_failures;
}

std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof(b), "%.6g", v);
    return b;
}

void check_close(Check& c, double got, double want, double tol, const std::string& label) {
    c.expect(std::abs(got - want) <= tol,
             label + ": got " + fmt(got) + ", want " + fmt(want) + " +- " + fmt(tol));
}

FiringModel affine_model(double base, double slope, double sigma) {
    FiringModel m;
    m.phi = [base, slope](double u) { return base + slope * u; };
    m.dphi = [slope](double) { return slope; };
    m.sigma = sigma;
    m.p_lo = base;
    m.p_hi = base / (1.0 - slope);
    m.name = "affine";
    return m;
}

ActivityTrace run_preset_trace(const std::string& name, int branch) {
    ExperimentConfig c = preset(name);
    c.branch = branch;
    return run_experiment(c).trace;
}

}  // namespace

int main() {
    criterion(1, "steady states of the sigmoid network", [](Check& c) {
        auto t0 = std::chrono::steady_clock::now();
        auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
        auto s = steady_states(m);
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        c.expect(s.roots.size() == 3, "expected 3 roots");
        if (s.roots.size() == 3) {
            check_close(c, s.roots[0], 0.0410, 5e-4, "N*1");
            check_close(c, s.roots[1], 0.3650, 5e-4, "N*2");
            check_close(c, s.roots[2], 0.6118, 5e-4, "N*3");
        }
        c.expect(secs < 0.1, "runtime " + fmt(secs) + "s >= 0.1s");
    });

    criterion(2, "steady states of the remaining catalog models", [](Check& c) {
        auto m4 = builtin_model("double_gaussian", {8.0, 0.1, 8.0, 3.0}, 0.2);
        auto s4 = steady_states(m4);
        c.expect(s4.roots.size() == 3, "double_gaussian: expected 3 roots");
        if (s4.roots.size() == 3) {
            check_close(c, s4.roots[0], 1.4423, 5e-4, "N*1");
            check_close(c, s4.roots[1], 2.0695, 5e-4, "N*2");
            check_close(c, s4.roots[2], 3.0711, 5e-4, "N*3");
        }
        auto m31 = builtin_model("clamped_linear", {1.6, 1.0, 0.25}, 1.0);
        auto s31 = steady_states(m31);
        c.expect(s31.roots.size() == 1, "clamped_linear: expected a unique root");
        if (!s31.roots.empty()) check_close(c, s31.roots[0], 0.375, 1e-9, "N*");
        auto m32 = builtin_model("rational_shift", {10.0, 0.5}, 1.0);
        auto s32 = steady_states(m32);
        c.expect(s32.roots.size() == 1, "rational_shift: expected a unique root");
        if (!s32.roots.empty()) {
            check_close(c, s32.roots[0], 0.8186, 5e-4, "N*");
            c.expect(s32.psi_prime_signs[0] == -1, "psi'(N*) should be negative");
        }
    });

    criterion(3, "initial activity branches", [](Check& c) {
        auto ex1 = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
        auto b1 = initial_activities(ex1, make_density("plateau_exp", {0.5, 1.0}));
        c.expect(b1.roots.size() == 3, "plateau data: expected 3 branches");
        if (b1.roots.size() == 3) {
            check_close(c, b1.roots[0], 0.0281, 5e-4, "N0_1");
            check_close(c, b1.roots[1], 0.4089, 5e-4, "N0_2");
            check_close(c, b1.roots[2], 0.7114, 5e-4, "N0_3");
        }
        auto b2 = initial_activities(ex1, make_density("exp_shift", {0.5}));
        c.expect(b2.roots.size() == 3, "shifted-exp data: expected 3 branches");
        if (b2.roots.size() == 3) {
            check_close(c, b2.roots[0], 0.0423, 5e-4, "N0_1");
            check_close(c, b2.roots[1], 0.2887, 5e-4, "N0_2");
            check_close(c, b2.roots[2], 0.9958, 5e-4, "N0_3");
        }
        auto ex4 = builtin_model("double_gaussian", {8.0, 0.1, 8.0, 3.0}, 0.2);
        auto b4 = initial_activities(ex4, make_density("cos_exp", {}));
        c.expect(b4.roots.size() == 3, "cosine data: expected 3 branches");
        if (b4.roots.size() == 3) {
            check_close(c, b4.roots[0], 1.4976, 5e-4, "N0_1");
            check_close(c, b4.roots[1], 1.8163, 5e-4, "N0_2");
            check_close(c, b4.roots[2], 3.7037, 5e-4, "N0_3");
        }
    });

    criterion(4, "branch dynamics: convergence targets and single jumps", [](Check& c) {
        const double targets[3] = {0.0410, 0.3650, 0.6118};
        for (int b = 1; b <= 3; ++b) {
            auto tr = run_preset_trace("example1", b);
            check_close(c, tr.values.back(), targets[b - 1], 1e-2,
                        "example1 branch " + std::to_string(b) + " at T");
            c.expect(tr.jumps.empty(),
                     "example1 branch " + std::to_string(b) + " should not jump");
        }
        auto tr2 = run_preset_trace("example2", 3);
        c.expect(tr2.jumps.size() == 1, "example2 branch 3: expected exactly one jump, got " +
                                            std::to_string(tr2.jumps.size()));
        if (tr2.jumps.size() == 1) {
            c.expect(tr2.jumps[0].t > 0.0 && tr2.jumps[0].t < 0.5,
                     "example2 jump at t=" + fmt(tr2.jumps[0].t) + " outside (0, sigma)");
            auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
            double dpsi =
                std::abs(psi_eval(m, tr2.jumps[0].before) - psi_eval(m, tr2.jumps[0].after));
            c.expect(dpsi <= 1e-6, "example2 jump psi mismatch " + fmt(dpsi));
        }
        check_close(c, tr2.values.back(), 0.0410, 1e-2, "example2 branch 3 at T");

        auto tr4 = run_preset_trace("example4", 3);
        c.expect(tr4.jumps.size() == 1, "example4 branch 3: expected exactly one jump, got " +
                                            std::to_string(tr4.jumps.size()));
        if (tr4.jumps.size() == 1) {
            c.expect(tr4.jumps[0].t > 0.0 && tr4.jumps[0].t < 0.2,
                     "example4 jump at t=" + fmt(tr4.jumps[0].t) + " outside (0, sigma)");
            auto m = builtin_model("double_gaussian", {8.0, 0.1, 8.0, 3.0}, 0.2);
            double dpsi =
                std::abs(psi_eval(m, tr4.jumps[0].before) - psi_eval(m, tr4.jumps[0].after));
            c.expect(dpsi <= 1e-6, "example4 jump psi mismatch " + fmt(dpsi));
        }
        check_close(c, tr4.values.back(), 1.4423, 1e-2, "example4 branch 3 at T");
    });

    criterion(5, "sigma-periodic tail of the clamped-linear run", [](Check& c) {
        auto tr = run_preset_trace("example3_1", 1);
        const double dt = tr.dt;
        const int ms = static_cast<int>(std::lround(1.0 / dt));
        int lo = 20 * ms, hi = 30 * ms;
        double per = 0.0, level_dist = 0.0;
        for (int k = lo; k + ms <= hi; ++k)
            per = std::max(per, std::abs(tr.values[k + ms] - tr.values[k]));
        for (int k = lo; k <= hi; ++k)
            level_dist = std::max(level_dist,
                                  std::min(std::abs(tr.values[k] - 0.15625),
                                           std::abs(tr.values[k] - 0.625)));
        c.expect(per <= 10.0 * dt, "periodicity defect " + fmt(per));
        c.expect(level_dist <= 10.0 * dt, "distance to the two levels " + fmt(level_dist));
        auto m = builtin_model("clamped_linear", {1.6, 1.0, 0.25}, 1.0);
        auto r = construct_piecewise_constant(m, 0.15625, 0.625);
        c.expect(std::abs(r.alpha - 8.0 / 15.0) <= 1e-12,
                 "alpha " + fmt(r.alpha) + " != 8/15 within 1e-12");
    });

    criterion(6, "asymptotic periodicity with jumps of the rational model", [](Check& c) {
        auto tr = run_preset_trace("example3_2", 1);
        const double dt = tr.dt;
        const int ms = static_cast<int>(std::lround(1.0 / dt));
        int lo = 20 * ms, hi = 40 * ms;
        auto m = builtin_model("rational_shift", {10.0, 0.5}, 1.0);
        double pmin = 1e300, pmax = -1e300;
        for (int k = lo; k <= hi; ++k) {
            pmin = std::min(pmin, tr.psi_values[k]);
            pmax = std::max(pmax, tr.psi_values[k]);
        }
        c.expect(pmax - pmin >= 0.05,
                 "psi(N) range " + fmt(pmax - pmin) + " below 0.05: psi not oscillating");
        int jumps_in_window = 0;
        for (const auto& j : tr.jumps)
            if (j.t >= 20.0 && j.t <= 40.0) ++jumps_in_window;
        c.expect(jumps_in_window >= 10, "expected recurring jumps in the window");

        // autocorrelation peak away from lag sigma
        std::vector<double> x(tr.values.begin() + lo, tr.values.begin() + hi + 1);
        double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
        for (double& v : x) v -= mean;
        double denom = std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
        int best_lag = 0;
        double best = -1e300;
        for (int lag = ms / 2; lag <= 3 * ms; ++lag) {
            double acc = 0.0;
            for (size_t i = 0; i + lag < x.size(); ++i) acc += x[i] * x[i + lag];
            acc /= denom;
            if (acc > best) {
                best = acc;
                best_lag = lag;
            }
        }
        double period = best_lag * dt;
        c.expect(std::abs(period - 1.0) >= 0.02,
                 "autocorrelation peak at " + fmt(period) + " is too close to sigma");
    });

    criterion(7, "mass conservation on every preset, first-order in dt", [](Check& c) {
        for (const auto& name : preset_names()) {
            ExperimentConfig cfg = preset(name);
            ExperimentResult full = run_experiment(cfg);
            double dt = cfg.effective_dt();
            c.expect(full.max_mass_drift <= 10.0 * dt,
                     name + ": drift " + fmt(full.max_mass_drift));
            ExperimentConfig half = cfg;
            half.dt = dt / 2.0;
            ExperimentResult fine = run_experiment(half);
            c.expect(fine.max_mass_drift <= std::max(0.5 * full.max_mass_drift, 1e-10),
                     name + ": drift did not halve (" + fmt(full.max_mass_drift) + " -> " +
                         fmt(fine.max_mass_drift) + ")");
        }
    });

    criterion(8, "route equivalence within the frozen regression bounds", [](Check& c) {
        // C' constants frozen from the first measurement of this artifact
        struct Case {
            const char* preset;
            int branch;
            double c_prime;
        };
        const Case cases[] = {
            {"example1", 1, 0.01}, {"example1", 2, 0.5},  {"example1", 3, 1.5},
            {"example2", 1, 0.01}, {"example2", 2, 0.4},  {"example2", 3, 160.0},
            {"example4", 1, 2.5},  {"example4", 2, 6.0},  {"example4", 3, 1300.0},
        };
        for (const auto& k : cases) {
            ExperimentConfig cfg = preset(k.preset);
            cfg.branch = k.branch;
            double dt = cfg.effective_dt();
            auto r = compare_routes(cfg, 20.0 * cfg.sigma);
            double bound = k.c_prime * (dt + dt);
            c.expect(r.max_divergence <= bound,
                     std::string(k.preset) + " b" + std::to_string(k.branch) + ": divergence " +
                         fmt(r.max_divergence) + " > " + fmt(bound));
        }
        ExperimentConfig sc;
        sc.model_name = "sigmoid";
        sc.model_params = {9.0, 3.5};
        sc.sigma = 0.5;
        sc.initial.kind = InitialSpec::Kind::Steady;
        sc.initial.steady_index = 0;
        sc.T = 3.0;
        auto r = compare_routes(sc);
        c.expect(r.max_divergence <= 1e-10,
                 "steady data divergence " + fmt(r.max_divergence));
    });

    criterion(9, "window extrema are monotone outside the strongly excitatory regime",
              [](Check& c) {
        BranchPolicy policy;
        policy.seed_index = 0;
        auto run_check = [&](const FiringModel& m, const std::string& label) {
            auto tr = evolve_activity(m, make_density("exp_shift", {0.0}), 31.0 * m.sigma,
                                      m.sigma / 200, policy);
            auto we = window_extrema(tr, m.sigma);
            c.expect(we.maxima.size() >= 30, label + ": fewer than 30 windows");
            for (size_t k = 1; k < we.maxima.size(); ++k) {
                if (we.maxima[k] > we.maxima[k - 1] + 1e-8) {
                    c.expect(false, label + ": maxima increase at window " + std::to_string(k));
                    break;
                }
            }
            for (size_t k = 1; k < we.minima.size(); ++k) {
                if (we.minima[k] < we.minima[k - 1] - 1e-8) {
                    c.expect(false, label + ": minima decrease at window " + std::to_string(k));
                    break;
                }
            }
        };
        run_check(builtin_model("constant", {1.0}, 1.0), "constant rate");
        run_check(affine_model(1.0, 0.1, 1.0), "affine rate");
    });

    criterion(10, "monotone convergence to the middle equilibrium", [](Check& c) {
        auto run_check = [&](const FiringModel& m, double delta, const std::string& label) {
            double n2 = steady_states(m).roots[1];
            double dt = m.sigma / 200;
            auto hist = ramp_history(m, n2, delta, dt);
            auto br = analyze_branches(m);
            auto region = br.interval(br.branch_of(n2));
            auto tr = evolve_monotone(m, hist, region, 50.0 * m.sigma, dt);
            check_close(c, tr.values.back(), n2, 1e-3, label + " limit");
            double max_step = 0.0;
            bool monotone = true;
            for (int k = 1; k < tr.size(); ++k) {
                double d = tr.values[k] - tr.values[k - 1];
                if (d < -1e-12) monotone = false;
                max_step = std::max(max_step, d);
            }
            c.expect(monotone, label + ": trace not monotone");
            c.expect(max_step > 0.0, label + ": trace is flat");
            // strict increase away from the converged plateau
            for (int k = 1; k < tr.size(); ++k) {
                if (std::abs(tr.values[k] - tr.values.back()) > 1e-9 &&
                    tr.values[k] <= tr.values[k - 1]) {
                    c.expect(false, label + ": non-strict step before convergence");
                    break;
                }
            }
        };
        run_check(builtin_model("sigmoid", {9.0, 3.5}, 0.5), 0.015, "sigmoid");
        run_check(builtin_model("double_gaussian", {8.0, 0.1, 8.0, 3.0}, 0.2), 0.05,
                  "double_gaussian");
    });

    criterion(11, "two-sigma construction and mass calibration", [](Check& c) {
        auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.05);
        double dt = m.sigma / 400;
        auto [n_minus, n_plus] = anchor_pair_for_level(m, 0.98);
        auto r = construct_two_sigma(m, n_plus, n_minus, dt);
        c.expect(r.contraction_ratio < 0.5,
                 "contraction ratio " + fmt(r.contraction_ratio));
        c.expect(r.iterations <= 50, "iterations " + std::to_string(r.iterations));
        c.expect(r.psi_jump_mismatch <= 10.0 * dt,
                 "psi mismatch at sigma " + fmt(r.psi_jump_mismatch));
        int ms = static_cast<int>(std::lround(m.sigma / dt));
        bool strict = true;
        for (int j = 1; j < ms; ++j) {
            if (r.profile.samples[j] >= r.profile.samples[j - 1]) strict = false;
            if (r.profile.samples[ms + j] >= r.profile.samples[ms + j - 1]) strict = false;
        }
        c.expect(strict, "profile not strictly decreasing on the half-periods");

        auto cal = calibrate_mass(m, 0.90, 1.00, dt, 1e-6);
        c.expect(std::abs(cal.result.mass.Q_value - 1.0) <= 1e-6,
                 "|Q - 1| = " + fmt(std::abs(cal.result.mass.Q_value - 1.0)));
        c.expect(cal.result.profile.residual <= 10.0 * dt,
                 "calibrated profile residual " + fmt(cal.result.profile.residual));
    });

    criterion(12, "reconstruction round trips", [](Check& c) {
        // steady pair at 1e-10
        auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
        double n1 = steady_states(m).roots[0];
        double dt = m.sigma / 200;
        auto grid = AgeGrid::with_default_span(m, dt);
        std::vector<double> hist(201, n1);
        auto f = initial_from_activity(m, hist, dt, grid);
        ActivityTrace tr;
        tr.dt = dt;
        tr.sigma = m.sigma;
        tr.values.assign(1, n1);
        tr.psi_values.assign(1, psi_eval(m, n1));
        tr.branch_ids.assign(1, 0);
        auto rep = verify_solution({f}, {0.0}, tr, m, 1e-10);
        c.expect(rep.pass, "steady pair residuals " + fmt(rep.max_psi_residual) + " / " +
                               fmt(rep.max_mass_residual));

        // periodic profile of the clamped-linear model returns after one period
        auto m31 = builtin_model("clamped_linear", {1.6, 1.0, 0.25}, 1.0);
        double dt31 = 1.0 / 200;
        auto grid31 = AgeGrid::make(1.0, dt31, 51.0);
        auto r = construct_piecewise_constant(m31, 0.15625, 0.625, 200);
        auto f0 = density_from_periodic_activity(m31, r.profile, grid31);
        c.expect(std::abs(f0.mass() - 1.0) <= 10.0 * dt31,
                 "periodic density mass " + fmt(f0.mass()));
        BranchPolicy policy;
        policy.seed_value = r.profile.samples[0];
        auto advanced = run_pde_from_field(m31, f0, 1.0, policy, 200);
        double worst = 0.0;
        const DensityField& back = advanced.snapshots.back();
        for (int j = 0; j < grid31.n_cells; ++j)
            worst = std::max(worst, std::abs(back.values[j] - f0.values[j]));
        c.expect(worst <= 20.0 * dt31, "one-period return defect " + fmt(worst));
    });

    if (g_failures == 0)
        std::printf("acceptance: all criteria passed\n");
    else
        std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
