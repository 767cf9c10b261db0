#include "etm/activity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "etm/rootscan.hpp"

namespace etm {

namespace {

double psi(const FiringModel& m, double u) { return psi_eval(m, u); }

// bisection of psi(u) = level on a monotone bracket
double invert_on(const FiringModel& m, double level, double lo, double hi) {
    auto g = [&](double u) { return psi(m, u) - level; };
    return bisect(g, lo, hi, 1e-13);
}

}  // namespace

int BranchStructure::branch_of(double u) const {
    int b = 0;
    for (double c : cuts)
        if (u > c) ++b;
    return b;
}

std::pair<double, double> BranchStructure::interval(int b) const {
    double lo = (b == 0) ? 0.0 : cuts[b - 1];
    double hi = (b == count() - 1) ? p_hi : cuts[b];
    return {lo, hi};
}

BranchStructure analyze_branches(const FiringModel& m, int samples) {
    Regime reg = classify_regime(m, samples);
    BranchStructure br;
    br.cuts = reg.sign_changes;
    br.p_hi = m.p_hi;
    for (int b = 0; b <= static_cast<int>(br.cuts.size()); ++b) {
        double lo = (b == 0) ? 0.0 : br.cuts[b - 1];
        double hi = (b == static_cast<int>(br.cuts.size())) ? m.p_hi : br.cuts[b];
        double mid = 0.5 * (lo + hi);
        double d = psi_prime(m, mid).value;
        br.direction.push_back(std::abs(d) <= 1e-12 ? 0 : (d > 0 ? 1 : -1));
    }
    return br;
}

LevelSolveResult solve_psi_level(const FiringModel& m, const BranchStructure& br,
                                 double level, double seed, const BranchPolicy& policy,
                                 double bracket_step, std::optional<double> delayed_input,
                                 double dt) {
    LevelSolveResult res;
    double seed_c = std::clamp(seed, 0.0, br.p_hi);
    if (std::abs(psi(m, seed_c) - level) <= 1e-12 * std::max(1.0, std::abs(level))) {
        res.value = seed_c;
        res.branch_id = br.branch_of(seed_c);
        return res;
    }
    if (level <= 0.0) {
        if (level < -1e-12)
            throw SolverError("solve_psi_level: negative level " + std::to_string(level));
        res.value = 0.0;
        res.branch_id = 0;
        return res;
    }
    const int b = br.branch_of(seed_c);
    auto [blo, bhi] = br.interval(b);
    auto g = [&](double u) { return psi(m, u) - level; };

    // continuation: expanding bracket around the seed, capped at branch ends
    double delta = std::max(bracket_step, 1e-12);
    double lo = seed_c, hi = seed_c;
    double glo = g(lo), ghi = g(hi);
    for (int it = 0; it < 80; ++it) {
        bool at_ends = (lo <= blo && hi >= bhi);
        if (glo * ghi <= 0.0) break;
        if (at_ends) break;
        lo = std::max(blo, seed_c - delta);
        hi = std::min(bhi, seed_c + delta);
        glo = g(lo);
        ghi = g(hi);
        delta *= 2.0;
    }
    if (glo * ghi <= 0.0) {
        double root = (glo == 0.0) ? lo : (ghi == 0.0 ? hi : bisect(g, lo, hi, 1e-13));
        res.value = root;
        res.branch_id = b;
        res.tangent = std::abs(psi_prime(m, root).value) <= 1e-8;
        return res;
    }

    if (policy.mode == PolicyMode::FixedBranch)
        throw SolverError("solve_psi_level: level " + std::to_string(level) +
                          " left the fixed branch " + std::to_string(b));

    // jump: the branch lost solvability through the endpoint whose psi value
    // the level crossed
    double plo_v = psi(m, blo), phi_v = psi(m, bhi);
    double ext = (std::abs(plo_v - level) <= std::abs(phi_v - level)) ? blo : bhi;

    ScanOptions opts;
    opts.samples = 4096;
    std::vector<double> candidates;
    for (const auto& r : scan_roots(g, br.p_hi / opts.samples, br.p_hi, opts))
        if (br.branch_of(r.x) != b) candidates.push_back(r.x);
    if (candidates.empty())
        throw SolverError("solve_psi_level: level " + std::to_string(level) +
                          " unsolvable on (0, p_hi]");

    // prefer candidates whose branch stays solvable one step ahead
    if (delayed_input && dt > 0.0 && candidates.size() > 1) {
        std::vector<double> kept;
        for (double r : candidates) {
            double next_level = level + dt * (*delayed_input - r);
            auto [clo, chi] = br.interval(br.branch_of(r));
            double a = psi(m, clo), c = psi(m, chi);
            if (next_level >= std::min(a, c) - 1e-12 && next_level <= std::max(a, c) + 1e-12)
                kept.push_back(r);
        }
        if (!kept.empty()) candidates = kept;
    }
    if (policy.mode == PolicyMode::FailOnAmbiguity && candidates.size() > 1)
        throw SolverError("solve_psi_level: ambiguous jump target (" +
                          std::to_string(candidates.size()) + " candidates)");
    double target = *std::min_element(candidates.begin(), candidates.end());
    int tb = br.branch_of(target);

    // psi-matched jump record at the crossing level psi(ext)
    JumpRecord rec;
    rec.before = ext;
    double crossing = psi(m, ext);
    auto [tlo, thi] = br.interval(tb);
    auto g2 = [&](double u) { return psi(m, u) - crossing; };
    if (g2(tlo) * g2(thi) <= 0.0)
        rec.after = bisect(g2, tlo, thi, 1e-13);
    else
        rec.after = target;

    res.value = target;
    res.branch_id = tb;
    res.jumped = true;
    res.tangent = std::abs(psi_prime(m, target).value) <= 1e-8;
    res.jump = rec;
    return res;
}

ActivityTrace evolve_activity(const FiringModel& m, const InitialDensity& n0, double T,
                              double dt, const BranchPolicy& policy) {
    if (dt <= 0.0 || T <= 0.0) throw std::invalid_argument("evolve_activity: T, dt > 0");
    const int ms = static_cast<int>(std::lround(m.sigma / dt));
    if (ms < 1 || std::abs(ms * dt - m.sigma) > 1e-9 * m.sigma)
        throw std::invalid_argument("evolve_activity: sigma/dt must be a positive integer");
    if (std::abs(n0.total_mass - 1.0) > 1e-8)
        throw std::invalid_argument("evolve_activity: n0 is not a probability density");
    const int K = static_cast<int>(std::lround(T / dt));
    BranchStructure br = analyze_branches(m);

    // cumulative trapezoid of n0 at the delay grid
    std::vector<double> G(ms + 1, 0.0);
    {
        double prev = n0.value(0.0);
        for (int j = 1; j <= ms; ++j) {
            double cur = n0.value(j * dt);
            G[j] = G[j - 1] + 0.5 * dt * (prev + cur);
            prev = cur;
        }
    }

    // seed resolution
    double seed;
    if (policy.seed_value) {
        seed = *policy.seed_value;
        InitialBranchSet ib = initial_activities(m, n0);
        double best = 1e300;
        for (double r : ib.roots) best = std::min(best, std::abs(r - seed));
        if (best > 1e-2 * std::max(1.0, std::abs(seed)))
            throw std::invalid_argument(
                "evolve_activity: explicit seed does not match any initial branch");
    } else {
        InitialBranchSet ib = initial_activities(m, n0);
        int idx = policy.seed_index.value_or(0);
        if (idx < 0 || idx >= static_cast<int>(ib.roots.size()))
            throw std::invalid_argument("evolve_activity: branch index out of range");
        seed = ib.roots[idx];
    }

    ActivityTrace tr;
    tr.dt = dt;
    tr.sigma = m.sigma;
    tr.values.resize(K + 1);
    tr.psi_values.resize(K + 1);
    tr.branch_ids.resize(K + 1);

    // t = 0: snap the seed onto this route's own root at level 1 - G(sigma)
    double level0 = 1.0 - G[ms];
    LevelSolveResult r0 = solve_psi_level(m, br, level0, seed, policy);
    tr.values[0] = r0.value;
    tr.psi_values[0] = psi(m, r0.value);
    tr.branch_ids[0] = r0.branch_id;

    std::vector<double> I(K + 1, 0.0);  // running trapezoid of the trace
    for (int k = 1; k <= K; ++k) {
        double pred = I[k - 1] + dt * tr.values[k - 1];
        double level, delayed;
        if (k < ms) {
            level = 1.0 - pred - G[ms - k];
            delayed = n0.value((ms - k) * dt) / n0.total_mass;
        } else {
            level = 1.0 - (pred - I[k - ms]);
            delayed = tr.values[k - ms];
        }
        double step = std::max(1e-3, 5.0 * std::abs(tr.values[k - 1]) * dt);
        LevelSolveResult r;
        try {
            r = solve_psi_level(m, br, level, tr.values[k - 1], policy, step, delayed, dt);
        } catch (SolverError& e) {
            throw SolverError(std::string(e.what()) + " at t=" + std::to_string(k * dt),
                              k * dt);
        }
        tr.values[k] = r.value;
        tr.psi_values[k] = psi(m, r.value);
        tr.branch_ids[k] = r.branch_id;
        if (r.jumped && r.jump) {
            JumpRecord j = *r.jump;
            j.t = k * dt;
            tr.jumps.push_back(j);
        }
        I[k] = I[k - 1] + 0.5 * dt * (tr.values[k - 1] + tr.values[k]);
    }
    return tr;
}

ActivityTrace evolve_monotone(const FiringModel& m, const std::vector<double>& history,
                              std::pair<double, double> psi_region, double T, double dt) {
    const int ms = static_cast<int>(std::lround(m.sigma / dt));
    if (static_cast<int>(history.size()) != ms + 1)
        throw std::invalid_argument("evolve_monotone: history must hold sigma/dt + 1 samples");
    auto [rlo, rhi] = psi_region;
    if (!(rlo < rhi) || rlo <= 0.0)
        throw std::invalid_argument("evolve_monotone: bad psi region");
    for (int i = 0; i < 256; ++i) {
        double u = rlo + (rhi - rlo) * (i + 0.5) / 256;
        if (psi_prime(m, u).value >= 0.0)
            throw std::invalid_argument("evolve_monotone: psi' not negative on the region");
    }
    double trap = 0.0;
    for (int j = 0; j < ms; ++j) trap += 0.5 * dt * (history[j] + history[j + 1]);
    if (std::abs(trap + psi(m, history[ms]) - 1.0) > 1e-8)
        throw std::invalid_argument(
            "evolve_monotone: history violates the mass identity at t = sigma");
    bool increasing = history.back() >= history.front();
    for (int j = 0; j + 1 < ms; ++j) {
        bool ok = increasing ? history[j] <= history.back() + 1e-12
                             : history[j] >= history.back() - 1e-12;
        if (!ok)
            throw std::invalid_argument(
                "evolve_monotone: history violates the ordering condition");
    }

    const int K = static_cast<int>(std::lround(T / dt));
    ActivityTrace tr;
    tr.dt = dt;
    tr.sigma = m.sigma;
    tr.values.assign(K + 1, 0.0);
    std::copy(history.begin(), history.end(), tr.values.begin());

    const double v_lo = psi(m, rhi), v_hi = psi(m, rlo);  // psi decreasing
    auto invert = [&](double v, double t) {
        if (v < v_lo - 1e-12 || v > v_hi + 1e-12)
            throw SolverError("evolve_monotone: trajectory left the psi region", t);
        return invert_on(m, std::clamp(v, v_lo, v_hi), rlo, rhi);
    };

    double v = psi(m, tr.values[ms]);
    for (int k = ms; k < K; ++k) {
        double k1 = tr.values[k - ms] - tr.values[k];
        double n_half = invert(v + 0.5 * dt * k1, k * dt);
        double delayed_half = 0.5 * (tr.values[k - ms] + tr.values[k - ms + 1]);
        double k2 = delayed_half - n_half;
        v += dt * k2;
        tr.values[k + 1] = invert(v, (k + 1) * dt);
    }
    BranchStructure br = analyze_branches(m);
    tr.psi_values.resize(K + 1);
    tr.branch_ids.resize(K + 1);
    for (int k = 0; k <= K; ++k) {
        tr.psi_values[k] = psi(m, tr.values[k]);
        tr.branch_ids[k] = br.branch_of(tr.values[k]);
    }
    return tr;
}

WindowExtrema window_extrema(const ActivityTrace& trace, double sigma) {
    const int ms = static_cast<int>(std::lround(sigma / trace.dt));
    if (ms < 1 || trace.size() < 2 * ms + 1)
        throw std::invalid_argument("window_extrema: trace must cover at least 2 sigma");
    WindowExtrema out;
    int windows = (trace.size() - 1) / ms;
    for (int w = 0; w < windows; ++w) {
        double mx = trace.values[w * ms], mn = mx;
        for (int k = w * ms; k <= (w + 1) * ms; ++k) {
            mx = std::max(mx, trace.values[k]);
            mn = std::min(mn, trace.values[k]);
        }
        out.maxima.push_back(mx);
        out.minima.push_back(mn);
    }
    return out;
}

std::vector<double> ramp_history(const FiringModel& m, double n_star, double delta,
                                 double dt) {
    if (delta <= 0.0 || delta >= n_star)
        throw std::invalid_argument("ramp_history: need 0 < delta < N*");
    const int ms = static_cast<int>(std::lround(m.sigma / dt));
    double d = n_star - delta;
    double c = 2.0 * (1.0 - psi_eval(m, d)) / m.sigma - d;
    if (!(c > 0.0 && c < d)) {
        std::ostringstream os;
        os << "ramp_history: no increasing ramp into N*=" << n_star << " at delta=" << delta
           << " (endpoint " << c << ")";
        throw std::invalid_argument(os.str());
    }
    for (int i = 0; i <= 64; ++i) {
        double u = c + (n_star - c) * i / 64.0;
        if (psi_prime(m, u).value >= 0.0)
            throw std::invalid_argument("ramp_history: psi' not negative on [c, N*]");
    }
    std::vector<double> h(ms + 1);
    for (int j = 0; j <= ms; ++j) h[j] = c + (d - c) * j / ms;
    return h;
}

}  // namespace etm
