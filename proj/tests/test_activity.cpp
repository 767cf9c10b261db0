#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "etm/activity.hpp"
#include "test_oracles.hpp"

using namespace etm;

namespace {

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

// trapezoid residual of the mass identity over the trace, t >= sigma
double max_window_residual(const ActivityTrace& tr) {
    int ms = static_cast<int>(std::lround(tr.sigma / tr.dt));
    std::vector<double> cum(tr.size(), 0.0);
    for (int k = 1; k < tr.size(); ++k)
        cum[k] = cum[k - 1] + 0.5 * tr.dt * (tr.values[k - 1] + tr.values[k]);
    double worst = 0.0;
    for (int k = ms; k < tr.size(); ++k) {
        double window = cum[k] - cum[k - ms];
        worst = std::max(worst, std::abs(window + tr.psi_values[k] - 1.0));
    }
    return worst;
}

// longest strictly monotone run; returns {length_in_steps, value_span}
std::pair<int, double> longest_monotone_run(const ActivityTrace& tr) {
    int best = 0;
    double best_span = 0.0;
    int start = 0;
    auto flush = [&](int end) {
        if (end - start > best) {
            best = end - start;
            best_span = std::abs(tr.values[end] - tr.values[start]);
        }
    };
    int dir = 0;
    for (int k = 1; k < tr.size(); ++k) {
        double d = tr.values[k] - tr.values[k - 1];
        int nd = d > 0 ? 1 : (d < 0 ? -1 : 0);
        if (nd == 0 || (dir != 0 && nd != dir)) {
            flush(k - 1);
            start = k - 1;
        }
        dir = nd;
    }
    flush(tr.size() - 1);
    return {best, best_span};
}

}  // namespace

TEST_CASE("solve_psi_level: identity psi") {
    auto m = builtin_model("constant", {1.0}, 1.0);
    auto br = analyze_branches(m);
    BranchPolicy policy;
    for (double seed : {0.0, 0.5, 0.9}) {
        auto r = solve_psi_level(m, br, 0.3, seed, policy);
        CHECK(r.value == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(!r.jumped);
    }
}

TEST_CASE("solve_psi_level: three roots, continuation picks the seed branch") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 1.0);
    auto br = analyze_branches(m);
    REQUIRE(br.count() == 3);
    auto g = [&](double u) { return psi_eval(m, u) - 0.9; };
    auto ref = oracle::scan(g, 1e-6, 1.0);
    REQUIRE(ref.size() == 3);
    CHECK(ref[0] == doctest::Approx(0.036103).epsilon(1e-4));

    BranchPolicy policy;
    auto lo = solve_psi_level(m, br, 0.9, 0.04, policy);
    CHECK(lo.value == doctest::Approx(ref[0]).epsilon(1e-10));
    CHECK(!lo.jumped);
    auto hi = solve_psi_level(m, br, 0.9, 0.87, policy);
    CHECK(hi.value == doctest::Approx(ref[2]).epsilon(1e-10));
    auto mid = solve_psi_level(m, br, 0.9, 0.33, policy);
    CHECK(mid.value == doctest::Approx(ref[1]).epsilon(1e-10));
}

TEST_CASE("solve_psi_level: psi-preserving jump off the upper branch") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 1.0);
    auto br = analyze_branches(m);
    BranchPolicy policy;
    // level below the local minimum of psi: the upper branch loses the root
    double local_min_at = br.cuts[1];
    double psi_min = psi_eval(m, local_min_at);
    double level = psi_min - 0.02;
    auto r = solve_psi_level(m, br, level, 0.9, policy);
    CHECK(r.jumped);
    CHECK(r.branch_id == 0);
    auto direct = oracle::scan([&](double u) { return psi_eval(m, u) - level; }, 1e-6, 1.0);
    REQUIRE(direct.size() == 1);
    CHECK(r.value == doctest::Approx(direct[0]).epsilon(1e-10));
    REQUIRE(r.jump.has_value());
    CHECK(r.jump->before == doctest::Approx(local_min_at).epsilon(1e-8));
    CHECK(std::abs(psi_eval(m, r.jump->before) - psi_eval(m, r.jump->after)) <= 1e-6);
}

TEST_CASE("solve_psi_level: fatal when the level is globally unsolvable") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 1.0);
    auto br = analyze_branches(m);
    BranchPolicy policy;
    CHECK_THROWS_AS(solve_psi_level(m, br, 2.0, 0.04, policy), SolverError);
    CHECK_THROWS_AS(solve_psi_level(m, br, -0.5, 0.04, policy), SolverError);
}

TEST_CASE("solve_psi_level: fixed-branch policy refuses to jump") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 1.0);
    auto br = analyze_branches(m);
    BranchPolicy policy;
    policy.mode = PolicyMode::FixedBranch;
    double level = psi_eval(m, br.cuts[1]) - 0.02;
    CHECK_THROWS_AS(solve_psi_level(m, br, level, 0.9, policy), SolverError);
}

TEST_CASE("evolve_activity: steady history stays put") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
    auto s = steady_states(m);
    for (double n_star : s.roots) {
        BranchPolicy policy;
        policy.seed_value = n_star;
        auto tr = evolve_activity(m, steady_density(m, n_star), 10.0 * m.sigma,
                                  m.sigma / 200, policy);
        double worst = 0.0;
        for (double v : tr.values) worst = std::max(worst, std::abs(v - n_star));
        CHECK(worst <= 1e-6);
        CHECK(tr.jumps.empty());
    }
}

TEST_CASE("evolve_activity: branch 1 rises to the first equilibrium") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
    BranchPolicy policy;
    policy.seed_index = 0;
    auto tr = evolve_activity(m, make_density("plateau_exp", {0.5, 1.0}), 25.0,
                              m.sigma / 200, policy);
    int ms = 100;
    for (int k = 1; k <= ms; ++k) CHECK(tr.values[k] >= tr.values[k - 1] - 1e-12);
    CHECK(std::abs(tr.values.back() - 0.0410) <= 1e-2);
    CHECK(tr.jumps.empty());
    CHECK(max_window_residual(tr) <= 5.0 * tr.dt);
}

TEST_CASE("evolve_activity: upper branch of the tail-heavy data jumps once") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
    BranchPolicy policy;
    policy.seed_index = 2;
    auto tr =
        evolve_activity(m, make_density("exp_shift", {0.5}), 25.0, m.sigma / 200, policy);
    REQUIRE(tr.jumps.size() == 1);
    CHECK(tr.jumps[0].t > 0.0);
    CHECK(tr.jumps[0].t < m.sigma);
    CHECK(std::abs(psi_eval(m, tr.jumps[0].before) - psi_eval(m, tr.jumps[0].after)) <= 1e-6);
    CHECK(std::abs(tr.values.back() - 0.0410) <= 1e-2);

    // branch 1 of the same data converges without jumping
    BranchPolicy p1;
    p1.seed_index = 0;
    auto tr1 =
        evolve_activity(m, make_density("exp_shift", {0.5}), 25.0, m.sigma / 200, p1);
    CHECK(tr1.jumps.empty());
    CHECK(std::abs(tr1.values.back() - 0.0410) <= 1e-2);
}

TEST_CASE("evolve_activity: explicit seed must match an admissible branch") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
    BranchPolicy policy;
    policy.seed_value = 0.2;  // far from every root of the branch equation
    CHECK_THROWS_AS(
        evolve_activity(m, make_density("plateau_exp", {0.5, 1.0}), 1.0, 0.5 / 200, policy),
        std::invalid_argument);
}

TEST_CASE("evolve_activity: sigma/dt must be integral") {
    auto m = builtin_model("constant", {1.0}, 1.0);
    BranchPolicy policy;
    CHECK_THROWS_AS(evolve_activity(m, make_density("exp_shift", {0.0}), 5.0, 0.3, policy),
                    std::invalid_argument);
}

TEST_CASE("evolve_activity: integral residual halves with dt") {
    auto m = builtin_model("constant", {1.0}, 1.0);
    BranchPolicy policy;
    policy.seed_index = 0;
    auto d = make_density("exp_shift", {0.0});
    auto coarse = evolve_activity(m, d, 10.0, 1.0 / 100, policy);
    auto fine = evolve_activity(m, d, 10.0, 1.0 / 200, policy);
    double rc = max_window_residual(coarse);
    double rf = max_window_residual(fine);
    CHECK(rc <= 5.0 * coarse.dt);
    CHECK(rf <= std::max(0.5 * rc, 1e-12));
}

TEST_CASE("convergence and window extrema in non-strongly-excitatory regimes") {
    // phi == 1: steady state 0.5
    auto c1 = builtin_model("constant", {1.0}, 1.0);
    BranchPolicy policy;
    policy.seed_index = 0;
    auto tr = evolve_activity(c1, make_density("exp_shift", {0.0}), 50.0, 1.0 / 200, policy);
    CHECK(std::abs(tr.values.back() - 0.5) <= 1e-3);

    auto we = window_extrema(tr, 1.0);
    for (size_t k = 1; k < we.maxima.size(); ++k) {
        CHECK(we.maxima[k] <= we.maxima[k - 1] + 1e-8);
        CHECK(we.minima[k] >= we.minima[k - 1] - 1e-8);
    }

    // no strictly monotone run longer than sigma + 2 dt unless nearly constant
    auto [len, span] = longest_monotone_run(tr);
    if (span > 1e-6) CHECK(len * tr.dt <= 1.0 + 2.0 * tr.dt + 1e-12);

    // affine weakly excitatory model
    auto aff = affine_model(1.0, 0.1, 1.0);
    auto s = oracle::bisect(
        [&](double u) { return u + psi_eval(aff, u) - 1.0; }, 0.0, aff.p_hi);
    auto tra =
        evolve_activity(aff, make_density("exp_shift", {0.0}), 50.0, 1.0 / 200, policy);
    CHECK(std::abs(tra.values.back() - s) <= 1e-3);
    auto wea = window_extrema(tra, 1.0);
    for (size_t k = 1; k < wea.maxima.size(); ++k) {
        CHECK(wea.maxima[k] <= wea.maxima[k - 1] + 1e-8);
        CHECK(wea.minima[k] >= wea.minima[k - 1] - 1e-8);
    }
}

TEST_CASE("window_extrema on synthetic traces") {
    ActivityTrace tr;
    tr.dt = 0.01;
    tr.sigma = 0.1;
    SUBCASE("constant") {
        tr.values.assign(101, 0.7);
        auto we = window_extrema(tr, 0.1);
        for (double v : we.maxima) CHECK(v == 0.7);
        for (double v : we.minima) CHECK(v == 0.7);
    }
    SUBCASE("strictly decreasing") {
        for (int k = 0; k <= 100; ++k) tr.values.push_back(1.0 - 0.005 * k);
        auto we = window_extrema(tr, 0.1);
        for (size_t w = 0; w < we.maxima.size(); ++w)
            CHECK(we.maxima[w] == doctest::Approx(tr.values[w * 10]));
        for (size_t w = 1; w < we.maxima.size(); ++w) CHECK(we.maxima[w] < we.maxima[w - 1]);
    }
    SUBCASE("too short") {
        tr.values.assign(5, 1.0);
        CHECK_THROWS_AS(window_extrema(tr, 0.1), std::invalid_argument);
    }
}

TEST_CASE("evolve_monotone: constant steady history") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
    auto s = steady_states(m);
    double n2 = s.roots[1];  // psi' < 0 there
    int ms = 100;
    std::vector<double> hist(ms + 1, n2);
    auto br = analyze_branches(m);
    auto region = br.interval(br.branch_of(n2));
    auto tr = evolve_monotone(m, hist, region, 5.0, m.sigma / ms);
    for (double v : tr.values) CHECK(v == doctest::Approx(n2).epsilon(1e-10));
}

TEST_CASE("evolve_monotone: calibrated ramp rises to the middle equilibrium") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
    auto s = steady_states(m);
    double n2 = s.roots[1];
    double dt = m.sigma / 200;
    auto hist = ramp_history(m, n2, 0.015, dt);
    auto br = analyze_branches(m);
    auto region = br.interval(br.branch_of(n2));
    auto tr = evolve_monotone(m, hist, region, 25.0, dt);
    CHECK(std::abs(tr.values.back() - n2) <= 1e-3);
    double positive = 0.0;
    for (int k = 1; k < tr.size(); ++k) {
        double d = tr.values[k] - tr.values[k - 1];
        CHECK(d >= -1e-12);
        positive = std::max(positive, d);
    }
    CHECK(positive > 0.0);
    CHECK(tr.jumps.empty());
}

TEST_CASE("evolve_monotone: aborts when the trajectory leaves the psi region") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
    double dt = m.sigma / 200;
    auto hist = ramp_history(m, steady_states(m).roots[1], 0.015, dt);
    // region truncated short of the equilibrium: the increasing trajectory
    // must push psi below psi(0.36) and abort
    CHECK_THROWS_AS(evolve_monotone(m, hist, {0.30, 0.36}, 25.0, dt), SolverError);
}

TEST_CASE("evolve_monotone: precondition violations are rejected") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
    double dt = m.sigma / 200;
    int ms = 100;
    std::vector<double> bad(ms + 1, 0.3);  // violates the mass identity by ~0.1
    CHECK_THROWS_AS(evolve_monotone(m, bad, {0.13, 0.53}, 5.0, dt), std::invalid_argument);
}

TEST_CASE("ramp_history calibration") {
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
    double n2 = steady_states(m).roots[1];
    double dt = m.sigma / 200;
    auto h = ramp_history(m, n2, 0.015, dt);
    REQUIRE(h.size() == 201);
    CHECK(oracle::trap(h, dt) + psi_eval(m, h.back()) == doctest::Approx(1.0).epsilon(1e-12));
    for (size_t j = 1; j < h.size(); ++j) CHECK(h[j] > h[j - 1]);
    CHECK_THROWS_AS(ramp_history(m, n2, 0.5, dt), std::invalid_argument);
}

TEST_CASE("trace derivative cross-check against the delayed-difference formula") {
    // on smooth stretches dN/dt should match (N(t - sigma) - N(t)) / psi'(N),
    // the differentiated form of the window identity
    auto m = builtin_model("sigmoid", {9.0, 3.5}, 0.5);
    BranchPolicy policy;
    policy.seed_index = 1;
    double dt = m.sigma / 200;
    auto tr = evolve_activity(m, make_density("plateau_exp", {0.5, 1.0}), 10.0, dt, policy);
    int ms = 200;
    double worst = 0.0;
    for (int k = 2 * ms; k < tr.size() - 1; k += 7) {
        double lhs = (tr.values[k + 1] - tr.values[k - 1]) / (2.0 * dt);
        double dpsi = psi_prime(m, tr.values[k]).value;
        double rhs = (tr.values[k - ms] - tr.values[k]) / dpsi;
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    CHECK(worst <= 10.0 * dt);
}
