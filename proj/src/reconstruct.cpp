#include "etm/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace etm {

namespace {

// linear interpolation on uniform samples over [0, span]
double lerp_at(const std::vector<double>& y, double h, double x) {
    double u = x / h;
    int j = static_cast<int>(u);
    if (j < 0) return y.front();
    if (j + 1 >= static_cast<int>(y.size())) return y.back();
    double w = u - j;
    return (1.0 - w) * y[j] + w * y[j + 1];
}

}  // namespace

DensityField initial_from_activity(const FiringModel& m, const std::vector<double>& history,
                                   double dt, const AgeGrid& grid) {
    const int ms = static_cast<int>(std::lround(m.sigma / dt));
    if (static_cast<int>(history.size()) != ms + 1)
        throw std::invalid_argument(
            "initial_from_activity: history must hold sigma/dt + 1 samples");
    double trap = 0.0;
    for (int j = 0; j < ms; ++j) trap += 0.5 * dt * (history[j] + history[j + 1]);
    double cond2 = trap + psi_eval(m, history[ms]) - 1.0;
    if (std::abs(cond2) > 1e-8)
        throw std::invalid_argument(
            "initial_from_activity: history violates int N + psi(N(sigma)) = 1 (residual " +
            std::to_string(cond2) + ")");

    // d psi(N)/dt: centered interior, one-sided second order at the ends
    std::vector<double> w(ms + 1), dw(ms + 1);
    for (int j = 0; j <= ms; ++j) w[j] = psi_eval(m, history[j]);
    for (int j = 1; j < ms; ++j) dw[j] = (w[j + 1] - w[j - 1]) / (2.0 * dt);
    dw[0] = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * dt);
    dw[ms] = (3.0 * w[ms] - 4.0 * w[ms - 1] + w[ms - 2]) / (2.0 * dt);

    // n_tilde(s) = N(sigma - s) + dw(sigma - s) on (0, sigma)
    std::vector<double> nt(ms + 1);
    for (int j = 0; j <= ms; ++j) {
        double v = history[ms - j] + dw[ms - j];
        if (v < -1e-8)
            throw std::invalid_argument(
                "initial_from_activity: N(sigma - s) + d psi(N)/dt goes negative; no "
                "nonnegative density is compatible with this history");
        nt[j] = v;
    }

    DensityField f;
    f.grid = grid;
    f.values.assign(grid.n_cells, 0.0);
    const int js = grid.refractory_nodes;
    double clipped = 0.0;
    for (int j = 0; j < js; ++j) {
        double v = lerp_at(nt, dt, grid.node(j));
        if (v < 0.0) {
            clipped += -v * grid.ds;
            v = 0.0;
        }
        f.values[j] = v;
    }
    const double n0 = history[0];
    const double rate = phi_eval(m, n0);
    const double tail_target = psi_eval(m, n0) + clipped;
    double tail_sum = 0.0;
    for (int j = js; j < grid.n_cells - 1; ++j) {
        f.values[j] = n0 * std::exp(-rate * (grid.node(j) - m.sigma));
        tail_sum += f.values[j] * grid.ds;
    }
    double remainder = (n0 / rate) * std::exp(-rate * (grid.s_max - m.sigma));
    f.values[grid.n_cells - 1] = remainder / grid.ds;
    tail_sum += remainder;
    double scale = tail_target / tail_sum;
    for (int j = js; j < grid.n_cells; ++j) f.values[j] *= scale;
    return f;
}

DensityField density_from_periodic_activity(const FiringModel& m, const PeriodicProfile& p,
                                            const AgeGrid& grid) {
    const double ds = grid.ds;
    const int n = grid.n_cells;
    const int js = grid.refractory_nodes;
    // node j holds what left the boundary during (-(j+1) ds, -j ds]; sample
    // the interval midpoint so jump images never sit on a bin edge
    auto n_at = [&](double u) { return p.value(u - 0.5 * ds); };

    // substituting u = s - s' turns the exponent into one cumulative
    // integral: E(s) = int_0^{s - sigma} phi(N(-u)) du
    const int per_steps = static_cast<int>(std::lround(p.period / ds));
    const int needed = (n - 1 - js) + per_steps + 1;
    std::vector<double> cum(needed + 1, 0.0);
    for (int k = 0; k < needed; ++k)
        cum[k + 1] = cum[k] + phi_eval(m, n_at(-(k * ds))) * ds;

    DensityField f;
    f.grid = grid;
    f.values.assign(n, 0.0);
    for (int j = 0; j < n - 1; ++j) {
        double expo = (j <= js) ? 0.0 : cum[j - js];
        f.values[j] = n_at(-grid.node(j)) * std::exp(-expo);
    }
    // lumped node: integrate one more period past s_max, then apply the
    // geometric factor of the periodic tail (the integrand gains exp(-I_P)
    // per period, I_P = full-period integral of phi(N))
    double ip = cum[per_steps];  // N periodic: first period equals any period
    double one_period = 0.0;
    for (int k = 0; k < per_steps; ++k) {
        int j = (n - 1) + k;
        one_period += n_at(-(j * ds)) * std::exp(-cum[j - js]) * ds;
    }
    f.values[n - 1] = one_period / (1.0 - std::exp(-ip)) / ds;
    // anchor the tail at the marching scheme's own equilibrium for the
    // boundary activity N(0), so the advanced field starts on the discrete
    // orbit instead of spiking off the continuum value
    double n0 = p.value(0.0);
    if (n0 > 0.0) {
        double target = psi_eval(m, n0) * (1.0 - phi_eval(m, n0) * ds);
        double scale = target / f.tail_mass();
        for (int j = js; j < n; ++j) f.values[j] *= scale;
    }
    return f;
}

VerificationReport verify_solution(const std::vector<DensityField>& snapshots,
                                   const std::vector<double>& snapshot_times,
                                   const ActivityTrace& trace, const FiringModel& m,
                                   double tol) {
    if (snapshots.size() != snapshot_times.size())
        throw std::invalid_argument("verify_solution: snapshots and times misaligned");
    VerificationReport rep;
    for (size_t i = 0; i < snapshots.size(); ++i) {
        int k = static_cast<int>(std::lround(snapshot_times[i] / trace.dt));
        if (k < 0 || k >= trace.size())
            throw std::invalid_argument("verify_solution: snapshot time outside the trace");
        double psi_res = std::abs(psi_eval(m, trace.values[k]) - snapshots[i].tail_mass());
        double mass_res = std::abs(snapshots[i].mass() - 1.0);
        rep.max_psi_residual = std::max(rep.max_psi_residual, psi_res);
        rep.max_mass_residual = std::max(rep.max_mass_residual, mass_res);
    }
    rep.pass = rep.max_psi_residual <= tol && rep.max_mass_residual <= tol;
    return rep;
}

std::string verification_to_json(const VerificationReport& r) {
    nlohmann::json j;
    j["max_psi_residual"] = r.max_psi_residual;
    j["max_mass_residual"] = r.max_mass_residual;
    j["pass"] = r.pass;
    return j.dump(2);
}

}  // namespace etm
