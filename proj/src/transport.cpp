#include "etm/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace etm {

DensityField init_density(const InitialDensity& n0, const AgeGrid& grid,
                          double* renorm_factor) {
    DensityField f;
    f.grid = grid;
    f.values.assign(grid.n_cells, 0.0);
    for (int j = 0; j < grid.n_cells - 1; ++j) {
        double v = n0.value(grid.node(j));
        if (v < 0.0) throw std::invalid_argument("init_density: negative sample");
        f.values[j] = v;
    }
    f.values[grid.n_cells - 1] = n0.tail(grid.n_cells * grid.ds) / grid.ds;
    double mass = f.mass();
    if (mass <= 0.0) throw std::invalid_argument("init_density: zero total mass");
    double factor = 1.0 / mass;
    for (double& v : f.values) v *= factor;
    if (renorm_factor) *renorm_factor = factor;
    return f;
}

BoundaryResult boundary_activity(const DensityField& field, const FiringModel& m,
                                 const BranchStructure& br, double seed,
                                 const BranchPolicy& policy,
                                 std::optional<double> delayed_input) {
    double tail = field.tail_mass();
    double step = std::max(1e-3, 5.0 * std::abs(seed) * field.grid.dt());
    LevelSolveResult r =
        solve_psi_level(m, br, tail, seed, policy, step, delayed_input, field.grid.dt());
    BoundaryResult out;
    out.value = r.value;
    out.branch_id = r.branch_id;
    out.jumped = r.jumped;
    out.jump = r.jump;
    return out;
}

BoundaryResult step_pde(DensityField& field, const FiringModel& m,
                        const BranchStructure& br, double n_prev,
                        const BranchPolicy& policy, bool exponential_decay) {
    const AgeGrid& g = field.grid;
    const double dt = g.dt();
    if (dt * m.p_hi >= 1.0 && !exponential_decay)
        throw GridError("step_pde: dt * p_hi must be below 1 for positivity");
    const int n = g.n_cells;
    const int js = g.refractory_nodes;
    std::vector<double>& v = field.values;

    // shifted tail without materializing the shift: nodes js-1 .. n-1
    long double acc = 0.0L;
    for (int j = js - 1; j < n; ++j) acc += v[j];
    const double shifted_tail = static_cast<double>(acc) * g.ds;

    // delayed inflow at the sigma interface estimates the tail rate
    double delayed = v[js - 1];
    double bstep = std::max(1e-3, 5.0 * std::abs(n_prev) * dt);
    LevelSolveResult r = solve_psi_level(m, br, shifted_tail, n_prev, policy, bstep,
                                         delayed, dt);
    const double n_new = r.value;

    // shift (lumped last node absorbs), then decay past sigma
    double lump = v[n - 2] + v[n - 1];
    for (int j = n - 2; j >= 1; --j) v[j] = v[j - 1];
    v[n - 1] = lump;
    double decay = exponential_decay ? std::exp(-dt * phi_eval(m, n_new))
                                     : 1.0 - dt * phi_eval(m, n_new);
    for (int j = js; j < n; ++j) v[j] *= decay;
    v[0] = n_new;

    BoundaryResult out;
    out.value = n_new;
    out.branch_id = r.branch_id;
    out.jumped = r.jumped;
    out.jump = r.jump;
    return out;
}

PdeRun run_pde(const FiringModel& m, const InitialDensity& n0, const AgeGrid& grid,
               double T, const BranchPolicy& policy, int snapshot_every,
               bool exponential_decay) {
    DensityField field = init_density(n0, grid);
    double seed;
    if (policy.seed_value) {
        seed = *policy.seed_value;
    } else {
        InitialBranchSet ib = initial_activities(m, n0);
        int idx = policy.seed_index.value_or(0);
        if (idx < 0 || idx >= static_cast<int>(ib.roots.size()))
            throw std::invalid_argument("run_pde: branch index out of range");
        seed = ib.roots[idx];
    }
    BranchPolicy p2 = policy;
    p2.seed_value = seed;
    return run_pde_from_field(m, field, T, p2, snapshot_every, exponential_decay);
}

PdeRun run_pde_from_field(const FiringModel& m, const DensityField& field0, double T,
                          const BranchPolicy& policy, int snapshot_every,
                          bool exponential_decay) {
    const AgeGrid& grid = field0.grid;
    if (grid.dt() * m.p_hi >= 1.0 && !exponential_decay)
        throw GridError("run_pde: dt * p_hi must be below 1");
    PdeRun run;
    DensityField field = field0;
    BranchStructure br = analyze_branches(m);
    const double dt = grid.dt();
    const int K = static_cast<int>(std::lround(T / dt));
    const double seed = policy.seed_value.value_or(field0.tail_mass() > 0.0
                                                       ? field0.values[0]
                                                       : 0.0);

    ActivityTrace& tr = run.trace;
    tr.dt = dt;
    tr.sigma = m.sigma;
    tr.values.resize(K + 1);
    tr.psi_values.resize(K + 1);
    tr.branch_ids.resize(K + 1);

    // t = 0: boundary solve on the initial field selects the branch; the
    // corner node keeps its sampled n0(0) value. A seed that already solves
    // the scheme's stepping equation (anchored steady profiles) is kept
    // as-is, avoiding a one-sample staggering artifact.
    BoundaryResult b0;
    long double acc0 = 0.0L;
    for (int j = grid.refractory_nodes - 1; j < grid.n_cells; ++j) acc0 += field.values[j];
    double shifted_tail0 = static_cast<double>(acc0) * grid.ds;
    if (policy.seed_value && std::abs(psi_eval(m, seed) - shifted_tail0) <= 1e-10) {
        b0.value = seed;
        b0.branch_id = br.branch_of(seed);
    } else {
        b0 = boundary_activity(field, m, br, seed, policy);
    }
    tr.values[0] = b0.value;
    tr.psi_values[0] = psi_eval(m, b0.value);
    tr.branch_ids[0] = b0.branch_id;
    run.mass_history.push_back(field.mass());

    auto snap = [&](int k) {
        if (snapshot_every > 0 && k % snapshot_every == 0) {
            run.snapshots.push_back(field);
            run.snapshot_times.push_back(k * dt);
        }
    };
    snap(0);
    for (int k = 1; k <= K; ++k) {
        BoundaryResult b;
        try {
            b = step_pde(field, m, br, tr.values[k - 1], policy, exponential_decay);
        } catch (SolverError& e) {
            throw SolverError(std::string(e.what()) + " at t=" + std::to_string(k * dt),
                              k * dt);
        }
        tr.values[k] = b.value;
        tr.psi_values[k] = psi_eval(m, b.value);
        tr.branch_ids[k] = b.branch_id;
        if (b.jumped && b.jump) {
            JumpRecord j = *b.jump;
            j.t = k * dt;
            tr.jumps.push_back(j);
        }
        run.mass_history.push_back(field.mass());
        snap(k);
    }
    for (double mm : run.mass_history)
        run.max_mass_drift = std::max(run.max_mass_drift, std::abs(mm - 1.0));
    return run;
}

DensityField discrete_steady_profile(const FiringModel& m, double n_star,
                                     const AgeGrid& grid, bool exponential_decay) {
    double resid = std::abs(m.sigma * n_star + psi_eval(m, n_star) - 1.0);
    if (resid > 1e-8)
        throw std::invalid_argument("discrete_steady_profile: N* is not a steady state");
    const double a = grid.dt() * phi_eval(m, n_star);
    const double decay = exponential_decay ? std::exp(-a) : 1.0 - a;
    DensityField f;
    f.grid = grid;
    f.values.assign(grid.n_cells, 0.0);
    const int js = grid.refractory_nodes;
    for (int j = 0; j < js; ++j) f.values[j] = n_star;
    double v = n_star;
    for (int j = js; j < grid.n_cells - 1; ++j) {
        v *= decay;
        f.values[j] = v;
    }
    // lumped node fixed point: x = (v_{n-2} + x) * decay
    f.values[grid.n_cells - 1] = f.values[grid.n_cells - 2] * decay / (1.0 - decay);
    return f;
}

}  // namespace etm
