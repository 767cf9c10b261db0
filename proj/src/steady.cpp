#include "etm/steady.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "etm/rootscan.hpp"
#include "json.hpp"

namespace etm {

namespace {

std::vector<double> activity_roots(const FiringModel& m, double tail, int samples) {
    // roots of N - phi(N) * tail on [0, p_hi]
    std::vector<double> out;
    if (tail <= 0.0) {
        out.push_back(0.0);
        return out;
    }
    auto g = [&](double u) { return u - m.phi(u) * tail; };
    ScanOptions opts;
    opts.samples = samples;
    for (const auto& r : scan_roots(g, 0.0, m.p_hi, opts)) out.push_back(r.x);
    return out;
}

}  // namespace

SteadyStateSet steady_states(const FiringModel& m, int samples) {
    SteadyStateSet out;
    auto g = [&](double u) { return m.sigma * u + psi_eval(m, u) - 1.0; };
    ScanOptions opts;
    opts.samples = samples;
    auto roots = scan_roots(g, m.p_hi / samples, m.p_hi, opts);
    for (const auto& r : roots) {
        out.roots.push_back(r.x);
        out.residuals.push_back(std::abs(g(r.x)));
        if (r.tangent) {
            out.psi_prime_signs.push_back(0);
        } else {
            double d = psi_prime(m, r.x).value;
            out.psi_prime_signs.push_back(std::abs(d) <= 1e-8 ? 0 : (d > 0 ? 1 : -1));
        }
    }
    out.empty_warning = out.roots.empty();
    return out;
}

DensityField steady_profile(const FiringModel& m, double n_star, const AgeGrid& grid) {
    double resid = std::abs(m.sigma * n_star + psi_eval(m, n_star) - 1.0);
    if (resid > 1e-8)
        throw std::invalid_argument("steady_profile: N* is not a steady state (residual " +
                                    std::to_string(resid) + ")");
    double rate = phi_eval(m, n_star);
    double psi_star = psi_eval(m, n_star);
    DensityField f;
    f.grid = grid;
    f.values.assign(grid.n_cells, 0.0);
    const int js = grid.refractory_nodes;
    for (int j = 0; j < js; ++j) f.values[j] = n_star;
    double tail_sum = 0.0;
    for (int j = js; j < grid.n_cells - 1; ++j) {
        f.values[j] = n_star * std::exp(-rate * (grid.node(j) - m.sigma));
        tail_sum += f.values[j] * grid.ds;
    }
    // lumped node: analytic remainder of the exponential tail
    double remainder = (n_star / rate) * std::exp(-rate * (grid.s_max - m.sigma));
    f.values[grid.n_cells - 1] = remainder / grid.ds;
    tail_sum += remainder;
    // truncation correction: scale the tail so its grid mass is psi(N*)
    double scale = psi_star / tail_sum;
    for (int j = js; j < grid.n_cells; ++j) f.values[j] *= scale;
    return f;
}

InitialDensity steady_density(const FiringModel& m, double n_star) {
    double rate = phi_eval(m, n_star);
    double psi_star = psi_eval(m, n_star);
    double sigma = m.sigma;
    InitialDensity d;
    d.name = "steady";
    d.params = {n_star};
    d.value = [n_star, rate, sigma](double s) {
        return s < sigma ? n_star : n_star * std::exp(-rate * (s - sigma));
    };
    d.tail = [n_star, rate, sigma, psi_star](double x) {
        if (x < sigma) return n_star * (sigma - x) + psi_star;
        return psi_star * std::exp(-rate * (x - sigma));
    };
    d.total_mass = sigma * n_star + psi_star;
    return d;
}

InitialBranchSet initial_activities(const FiringModel& m, const InitialDensity& n0) {
    if (std::abs(n0.total_mass - 1.0) > 1e-8)
        throw std::invalid_argument("initial_activities: density mass " +
                                    std::to_string(n0.total_mass) + " is not 1");
    const double ds = m.sigma / 200.0;
    const double span = std::min(20.0 / m.p_lo, 50.0);
    const int n = static_cast<int>(std::lround((m.sigma + span) / ds));
    const int js = static_cast<int>(std::lround(m.sigma / ds));
    double rect_tail = 0.0, rect_mass = 0.0, v0 = n0.value(0.0);
    for (int j = 0; j < n; ++j) {
        double v = n0.value(j * ds);
        if (v < 0.0) throw std::invalid_argument("initial_activities: negative density");
        rect_mass += v;
        if (j >= js) rect_tail += v;
    }
    double remainder = n0.tail(n * ds);
    double tail = rect_tail * ds + remainder;
    double trap_mass = rect_mass * ds - 0.5 * ds * v0 + remainder;
    InitialBranchSet out;
    out.tail_mass = tail / trap_mass;
    out.roots = activity_roots(m, out.tail_mass, 4096);
    return out;
}

InitialBranchSet initial_activities(const FiringModel& m, const DensityField& n0) {
    if (std::abs(n0.mass() - 1.0) > 1e-8)
        throw std::invalid_argument("initial_activities: field mass is not 1");
    for (double v : n0.values)
        if (v < 0.0) throw std::invalid_argument("initial_activities: negative density");
    InitialBranchSet out;
    out.tail_mass = n0.tail_mass();
    out.roots = activity_roots(m, out.tail_mass, 4096);
    return out;
}

std::string steady_to_json(const SteadyStateSet& s) {
    nlohmann::json j;
    j["roots"] = s.roots;
    j["residuals"] = s.residuals;
    j["psi_prime_signs"] = s.psi_prime_signs;
    return j.dump(2);
}

std::string branches_to_json(const InitialBranchSet& b) {
    nlohmann::json j;
    j["roots"] = b.roots;
    j["tail_mass"] = b.tail_mass;
    return j.dump(2);
}

}  // namespace etm
