#include "etm/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "etm/activity.hpp"
#include "etm/rootscan.hpp"

namespace etm {

namespace {

double trap(const std::vector<double>& y, double h) {
    long double s = 0.0L;
    for (size_t j = 0; j + 1 < y.size(); ++j) s += 0.5L * (y[j] + y[j + 1]);
    return static_cast<double>(s) * h;
}

}  // namespace

double PeriodicProfile::value(double t) const {
    double u = std::fmod(t, period);
    if (u < 0.0) u += period;
    int j = static_cast<int>(u / dt);
    if (j >= samples_per_period()) j = samples_per_period() - 1;
    return samples[j];
}

LevelSet psi_level_set(const FiringModel& m, double level) {
    LevelSet out;
    BranchStructure br = analyze_branches(m);
    auto g = [&](double u) { return psi_eval(m, u) - level; };
    for (int b = 0; b < br.count(); ++b) {
        auto [lo, hi] = br.interval(b);
        if (br.direction[b] == 0) {
            if (std::abs(g(0.5 * (lo + hi))) <= 1e-10) out.band = {lo, hi};
            continue;
        }
        double glo = g(std::max(lo, 1e-300)), ghi = g(hi);
        if (glo == 0.0 && lo > 0.0)
            out.roots.push_back(lo);
        else if (glo * ghi <= 0.0)
            out.roots.push_back(bisect(g, std::max(lo, 1e-300), hi, 1e-13));
    }
    std::sort(out.roots.begin(), out.roots.end());
    out.roots.erase(std::unique(out.roots.begin(), out.roots.end(),
                                [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                    out.roots.end());
    return out;
}

std::vector<std::pair<double, double>> psi_level_pairs(const FiringModel& m, double level) {
    LevelSet ls = psi_level_set(m, level);
    if (ls.roots.size() < 2) {
        if (ls.band)
            throw std::invalid_argument(
                "psi_level_pairs: level lies on a flat band of psi; use the linear-band "
                "construction");
        throw std::invalid_argument("psi_level_pairs: fewer than two roots at this level");
    }
    std::vector<std::pair<double, double>> pairs;
    for (size_t i = 0; i < ls.roots.size(); ++i)
        for (size_t j = i + 1; j < ls.roots.size(); ++j)
            pairs.emplace_back(ls.roots[i], ls.roots[j]);
    return pairs;
}

double profile_mass_residual(const FiringModel& m, const PeriodicProfile& p, int n_checks) {
    const int n = p.samples_per_period();
    const int ms = static_cast<int>(std::lround(m.sigma / p.dt));
    auto sample = [&](int j) {
        int i = j % n;
        if (i < 0) i += n;
        return p.samples[i];
    };
    if (p.kind == ProfileKind::PiecewiseConstant) {
        // the sigma window of a sigma-periodic two-level profile is exact
        double alpha = p.jump_points.front();
        double n1 = p.samples.front(), n2 = p.samples.back();
        double window = alpha * n1 + (p.period - alpha) * n2;
        double worst = 0.0;
        for (double u : {n1, n2})
            worst = std::max(worst, std::abs(window + psi_eval(m, u) - 1.0));
        return worst;
    }
    double worst = 0.0;
    for (int c = 0; c < n_checks; ++c) {
        int k = ms + (c * std::max(1, (2 * n) / n_checks));
        // window integral over [t - sigma, t], rectangle on sample bins
        long double acc = 0.0L;
        for (int j = k - ms; j < k; ++j) acc += sample(j);
        double window = static_cast<double>(acc) * p.dt;
        double resid = std::abs(window + psi_eval(m, sample(k)) - 1.0);
        worst = std::max(worst, resid);
    }
    return worst;
}

PiecewiseConstantResult construct_piecewise_constant(const FiringModel& m, double N1,
                                                     double N2, int samples_per_period) {
    if (N1 == N2) throw std::invalid_argument("construct_piecewise_constant: N1 == N2");
    double psi1 = psi_eval(m, N1), psi2 = psi_eval(m, N2);
    if (std::abs(psi1 - psi2) > 1e-10)
        throw std::invalid_argument(
            "construct_piecewise_constant: psi(N1) != psi(N2) beyond 1e-10");
    const double sigma = m.sigma;
    double alpha = (sigma * N2 + psi1 - 1.0) / (N2 - N1);
    if (!(alpha > 0.0 && alpha < sigma)) {
        std::ostringstream os;
        os << "construct_piecewise_constant: alpha=" << alpha
           << " outside (0, sigma); the pair admits no periodic solution";
        throw std::invalid_argument(os.str());
    }
    PiecewiseConstantResult out;
    out.alpha = alpha;
    PeriodicProfile& p = out.profile;
    p.kind = ProfileKind::PiecewiseConstant;
    p.period = sigma;
    p.dt = sigma / samples_per_period;
    p.samples.resize(samples_per_period);
    for (int j = 0; j < samples_per_period; ++j)
        p.samples[j] = (j * p.dt < alpha) ? N1 : N2;
    p.jump_points = {alpha, sigma};
    // the window integral is alpha N1 + (sigma - alpha) N2 for every t, so
    // the residual reduces to the psi mismatch of the pair
    double window = alpha * N1 + (sigma - alpha) * N2;
    p.residual = std::max(std::abs(window + psi1 - 1.0), std::abs(window + psi2 - 1.0));
    return out;
}

PeriodicProfile construct_linear_band(const FiringModel& m, double a, double b, double C,
                                      const std::function<double(double)>& shape,
                                      std::optional<double> amplitude,
                                      int samples_per_period) {
    if (C <= 1.0)
        throw std::invalid_argument("construct_linear_band: requires C > 1");
    if (!(a < b))
        throw std::invalid_argument("construct_linear_band: empty band");
    for (int i = 0; i <= 64; ++i) {
        double u = a + (b - a) * i / 64.0;
        if (std::abs(m.phi(u) - C * u) > 1e-10)
            throw std::invalid_argument(
                "construct_linear_band: phi is not C*u on [a, b]");
    }
    const double sigma = m.sigma;
    const double mean = (1.0 - 1.0 / C) / sigma;
    if (!(a * sigma < 1.0 - 1.0 / C && 1.0 - 1.0 / C < b * sigma))
        throw std::invalid_argument(
            "construct_linear_band: a sigma < 1 - 1/C < b sigma fails");
    const double dt = sigma / samples_per_period;
    std::vector<double> sh(samples_per_period + 1);
    for (int j = 0; j <= samples_per_period; ++j) sh[j] = shape(j * dt);
    if (std::abs(trap(sh, dt)) > 1e-10)
        throw std::invalid_argument("construct_linear_band: shape is not zero-mean");
    double sup = 0.0;
    for (double v : sh) sup = std::max(sup, std::abs(v));
    double amp;
    if (amplitude) {
        amp = *amplitude;
    } else {
        amp = (sup == 0.0) ? 0.0 : 0.9 * std::min(b - mean, mean - a) / sup;
    }
    PeriodicProfile p;
    p.kind = ProfileKind::LinearBand;
    p.period = sigma;
    p.dt = dt;
    p.samples.resize(samples_per_period);
    for (int j = 0; j < samples_per_period; ++j) {
        double v = mean + amp * sh[j];
        if (v < a - 1e-12 || v > b + 1e-12)
            throw std::invalid_argument(
                "construct_linear_band: profile leaves the band [a, b]");
        p.samples[j] = v;
    }
    p.residual = profile_mass_residual(m, p, 1000);
    return p;
}

TwoSigmaResult construct_two_sigma(const FiringModel& m, double N_plus, double N_minus,
                                   double dt, double tol, int max_iter) {
    if (!(N_minus < N_plus))
        throw std::invalid_argument("construct_two_sigma: need N_minus < N_plus");
    if (std::abs(psi_eval(m, N_plus) - psi_eval(m, N_minus)) > 1e-10)
        throw std::invalid_argument("construct_two_sigma: psi(N+) != psi(N-)");
    BranchStructure br = analyze_branches(m);
    // the enclosed local minimum of psi
    std::vector<double> interior;
    for (double c : br.cuts)
        if (c > N_minus && c < N_plus) interior.push_back(c);
    if (interior.size() != 1)
        throw std::invalid_argument(
            "construct_two_sigma: the pair must enclose exactly one critical point of psi");
    const double n_under = interior[0];
    const int b_dec = br.branch_of(N_minus), b_inc = br.branch_of(N_plus);
    if (br.direction[b_dec] != -1 || br.direction[b_inc] != 1)
        throw std::invalid_argument(
            "construct_two_sigma: psi must decrease left and increase right of the minimum");
    auto [dec_lo, dec_hi] = br.interval(b_dec);
    auto [inc_lo, inc_hi] = br.interval(b_inc);

    const double sigma = m.sigma;
    const int ms = static_cast<int>(std::lround(sigma / dt));
    if (ms < 2 || std::abs(ms * dt - sigma) > 1e-9 * sigma)
        throw std::invalid_argument("construct_two_sigma: sigma/dt must be an integer >= 2");

    auto invert_dec = [&](double v, const char* who) {
        double v_min = psi_eval(m, dec_hi), v_max = psi_eval(m, std::max(dec_lo, 1e-12));
        if (v < v_min - 1e-12 || v > v_max + 1e-12)
            throw SolverError(std::string("construct_two_sigma: ") + who +
                              " left the decreasing psi piece");
        auto g = [&](double u) { return psi_eval(m, u) - std::clamp(v, v_min, v_max); };
        return bisect(g, std::max(dec_lo, 1e-12), dec_hi, 1e-13);
    };
    auto invert_inc = [&](double v, const char* who) {
        double v_min = psi_eval(m, inc_lo), v_max = psi_eval(m, inc_hi);
        if (v < v_min - 1e-12 || v > v_max + 1e-12)
            throw SolverError(std::string("construct_two_sigma: ") + who +
                              " left the increasing psi piece");
        auto g = [&](double u) { return psi_eval(m, u) - std::clamp(v, v_min, v_max); };
        return bisect(g, inc_lo, inc_hi, 1e-13);
    };

    // initial iterate: linear decrease from N_plus toward the midpoint
    std::vector<double> N(ms + 1), M(ms + 1), L(ms + 1);
    double n_end = 0.5 * (N_plus + n_under);
    for (int j = 0; j <= ms; ++j) N[j] = N_plus + (n_end - N_plus) * j / ms;

    TwoSigmaResult out;
    std::vector<double> dists;
    int stagnant = 0;
    for (int it = 0; it < max_iter; ++it) {
        // backward M on (sigma, 2 sigma], M(2 sigma) = N_minus
        M[ms] = N_minus;
        double v = psi_eval(m, N_minus);
        for (int j = ms; j >= 1; --j) {
            double k1 = N[j] - M[j];
            double m_half = invert_dec(v - 0.5 * dt * k1, "M");
            double k2 = 0.5 * (N[j] + N[j - 1]) - m_half;
            v -= dt * k2;
            M[j - 1] = invert_dec(v, "M");
        }
        // forward L on [2 sigma, 3 sigma], L(2 sigma) = N_plus
        L[0] = N_plus;
        v = psi_eval(m, N_plus);
        for (int j = 0; j < ms; ++j) {
            double k1 = M[j] - L[j];
            double l_half = invert_inc(v + 0.5 * dt * k1, "L");
            double k2 = 0.5 * (M[j] + M[j + 1]) - l_half;
            v += dt * k2;
            L[j + 1] = invert_inc(v, "L");
        }
        double dist = 0.0;
        for (int j = 0; j <= ms; ++j) dist = std::max(dist, std::abs(L[j] - N[j]));
        N = L;
        out.iterations = it + 1;
        if (!dists.empty() && dists.back() > 0.0) {
            double ratio = dist / dists.back();
            if (dist > 10.0 * tol)
                out.contraction_ratio = std::max(out.contraction_ratio, ratio);
            stagnant = (ratio >= 1.0) ? stagnant + 1 : 0;
            if (stagnant >= 3 && dist > 10.0 * tol)
                throw SolverError(
                    "construct_two_sigma: iteration is not contracting (sigma too large)");
        }
        dists.push_back(dist);
        out.fixed_point_distance = dist;
        if (dist <= tol) break;
    }
    if (out.fixed_point_distance > tol)
        throw SolverError("construct_two_sigma: no convergence within max_iter");

    out.psi_jump_mismatch = std::abs(psi_eval(m, N[ms]) - psi_eval(m, M[0]));
    out.mass.N_plus = N_plus;
    out.mass.Q_value = psi_eval(m, N_plus) + trap(M, dt);

    PeriodicProfile& p = out.profile;
    p.kind = ProfileKind::TwoSigma;
    p.period = 2.0 * sigma;
    p.dt = dt;
    p.samples.resize(2 * ms);
    for (int j = 0; j < ms; ++j) p.samples[j] = N[j];
    for (int j = 0; j < ms; ++j) p.samples[ms + j] = M[j];
    p.jump_points = {sigma, 2.0 * sigma};
    p.residual = profile_mass_residual(m, p, 1000);
    return out;
}

std::pair<double, double> anchor_pair_for_level(const FiringModel& m, double level) {
    BranchStructure br = analyze_branches(m);
    // local minima of psi: cut where the direction switches - to +
    std::vector<int> minima;
    for (int b = 0; b + 1 < br.count(); ++b)
        if (br.direction[b] == -1 && br.direction[b + 1] == 1) minima.push_back(b);
    if (minima.empty())
        throw std::invalid_argument("anchor_pair_for_level: psi has no local minimum");
    for (int ci : minima) {
        double nu = br.cuts[ci];
        if (level <= psi_eval(m, nu)) continue;
        auto [lo_d, hi_d] = br.interval(ci);
        auto [lo_i, hi_i] = br.interval(ci + 1);
        auto g = [&](double u) { return psi_eval(m, u) - level; };
        if (g(std::max(lo_d, 1e-12)) < 0.0 || g(hi_i) < 0.0) continue;
        double n_minus = bisect(g, std::max(lo_d, 1e-12), nu, 1e-13);
        double n_plus = bisect(g, nu, hi_i, 1e-13);
        return {n_minus, n_plus};
    }
    throw std::invalid_argument(
        "anchor_pair_for_level: level does not bracket any local minimum of psi");
}

CalibrationResult calibrate_mass(const FiringModel& m, double level_lo, double level_hi,
                                 double dt, double tol) {
    auto q_at = [&](double level) {
        auto [n_minus, n_plus] = anchor_pair_for_level(m, level);
        return construct_two_sigma(m, n_plus, n_minus, dt);
    };
    TwoSigmaResult r_lo = q_at(level_lo), r_hi = q_at(level_hi);
    double q_lo = r_lo.mass.Q_value - 1.0, q_hi = r_hi.mass.Q_value - 1.0;
    CalibrationResult out;
    if (std::abs(q_lo) <= tol) {
        out.result = r_lo;
        out.level = level_lo;
        return out;
    }
    if (std::abs(q_hi) <= tol) {
        out.result = r_hi;
        out.level = level_hi;
        return out;
    }
    if (q_lo * q_hi > 0.0)
        throw std::invalid_argument("calibrate_mass: bracket does not straddle Q = 1");
    double lo = level_lo, hi = level_hi;
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        TwoSigmaResult r = q_at(mid);
        ++out.bisection_steps;
        double q = r.mass.Q_value - 1.0;
        if (std::abs(q) <= tol || hi - lo < 1e-14) {
            out.result = r;
            out.level = mid;
            return out;
        }
        if ((q < 0.0) == (q_lo < 0.0))
            lo = mid;
        else
            hi = mid;
    }
    throw SolverError("calibrate_mass: bisection failed to reach tolerance");
}

}  // namespace etm
