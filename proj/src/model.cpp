#include "etm/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace etm {

namespace {

constexpr double kBoundSlack = 1e-12;

[[noreturn]] void fail(const std::string& msg) { throw ModelError(msg); }

bool near_kink(const FiringModel& m, double u) {
    for (double k : m.kinks)
        if (std::abs(u - k) <= 1e-12 * std::max(1.0, std::abs(k))) return true;
    return false;
}

// numeric sup/inf of phi on [lo, hi]: coarse grid then golden-section polish
double extremum(const std::function<double(double)>& f, double lo, double hi, bool maximize) {
    const int n = 4096;
    double best_x = lo, best = f(lo);
    for (int i = 1; i <= n; ++i) {
        double x = lo + (hi - lo) * i / n;
        double v = f(x);
        if (maximize ? v > best : v < best) {
            best = v;
            best_x = x;
        }
    }
    double a = std::max(lo, best_x - (hi - lo) / n);
    double b = std::min(hi, best_x + (hi - lo) / n);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
        bool move_left = maximize ? (fc > fd) : (fc < fd);
        if (move_left) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return maximize ? std::max(best, std::max(fc, fd)) : std::min(best, std::min(fc, fd));
}

int sign_category(const FiringModel& m, double u) {
    double d = psi_prime(m, u).value;
    if (std::abs(d) <= 1e-12) return 0;
    return d > 0.0 ? 1 : -1;
}

}  // namespace

double phi_eval(const FiringModel& m, double u) {
    if (u < 0.0) fail("phi_eval: negative activity u=" + std::to_string(u));
    double v = m.phi(u);
    if (v < m.p_lo - kBoundSlack || v > m.p_hi + kBoundSlack) {
        std::ostringstream os;
        os << "phi_eval: phi(" << u << ")=" << v << " violates bounds [" << m.p_lo << ", "
           << m.p_hi << "]";
        fail(os.str());
    }
    return v;
}

double psi_eval(const FiringModel& m, double u) {
    if (u == 0.0) return 0.0;
    return u / phi_eval(m, u);
}

PsiPrimeResult psi_prime(const FiringModel& m, double u) {
    if (u < 0.0 || u > m.p_hi + kBoundSlack)
        fail("psi_prime: u outside [0, p_hi]");
    PsiPrimeResult r;
    r.kink = near_kink(m, u);
    if (m.has_derivative() && !r.kink) {
        double p = phi_eval(m, u);
        r.value = (p - u * m.dphi(u)) / (p * p);
        return r;
    }
    // difference quotient of psi itself; right-hand at kinks and at u = 0
    r.finite_difference = true;
    double h = 1e-6 * std::max(1.0, std::abs(u));
    auto psi = [&](double x) { return x == 0.0 ? 0.0 : x / m.phi(x); };
    if (u < h || r.kink) {
        r.value = (psi(u + h) - psi(u)) / h;
    } else {
        r.value = (psi(u + h) - psi(u - h)) / (2.0 * h);
    }
    return r;
}

Regime classify_regime(const FiringModel& m, int samples) {
    if (samples < 64) fail("classify_regime: samples must be >= 64");
    Regime out;
    const double hi = m.p_hi;
    std::vector<double> us(samples);
    std::vector<int> cat(samples);
    for (int i = 0; i < samples; ++i) {
        us[i] = hi * (i + 1) / samples;
        cat[i] = sign_category(m, us[i]);
    }
    for (int i = 0; i + 1 < samples; ++i) {
        if (cat[i] != cat[i + 1]) {
            double a = us[i], b = us[i + 1];
            int ca = cat[i];
            while (b - a > 1e-10) {
                double mid = 0.5 * (a + b);
                if (sign_category(m, mid) == ca)
                    a = mid;
                else
                    b = mid;
            }
            out.sign_changes.push_back(0.5 * (a + b));
        }
    }
    if (!out.sign_changes.empty()) {
        out.tag = RegimeTag::StronglyExcitatory;
        return out;
    }
    bool increasing_somewhere = false;
    for (int i = 0; i + 1 < samples; ++i)
        if (m.phi(us[i + 1]) > m.phi(us[i]) + 1e-14) increasing_somewhere = true;
    if (m.phi(hi * 0.5 / samples) < m.phi(us[0]) - 1e-14) increasing_somewhere = true;
    out.tag = increasing_somewhere ? RegimeTag::WeaklyExcitatory : RegimeTag::Inhibitory;
    return out;
}

FiringModel builtin_model(const std::string& name, const std::vector<double>& params,
                          double sigma) {
    if (sigma <= 0.0) fail("builtin_model: sigma must be positive");
    auto want = [&](size_t k) {
        if (params.size() != k) {
            std::ostringstream os;
            os << "builtin_model: " << name << " expects " << k << " parameters, got "
               << params.size();
            fail(os.str());
        }
    };
    FiringModel m;
    m.sigma = sigma;
    m.name = name;
    m.params = params;
    if (name == "constant") {
        want(1);
        double c = params[0];
        if (c <= 0.0) fail("constant: rate must be positive");
        m.phi = [c](double) { return c; };
        m.dphi = [](double) { return 0.0; };
        m.p_lo = m.p_hi = c;
    } else if (name == "sigmoid") {
        want(2);
        double a = params[0], b = params[1];
        if (a <= 0.0) fail("sigmoid: slope must be positive");
        auto phi = [a, b](double u) { return 1.0 / (1.0 + std::exp(-a * u + b)); };
        m.phi = phi;
        m.dphi = [a, phi](double u) {
            double p = phi(u);
            return a * p * (1.0 - p);
        };
        m.p_lo = phi(0.0);
        m.p_hi = 1.0;
    } else if (name == "clamped_linear") {
        want(3);
        double C = params[0], hi = params[1], lo = params[2];
        if (C <= 0.0 || lo <= 0.0 || hi <= lo) fail("clamped_linear: need C>0, 0<lo<hi");
        m.phi = [C, hi, lo](double u) { return std::max(std::min(C * u, hi), lo); };
        // right-continuous derivative at the clamp points
        m.dphi = [C, hi, lo](double u) { return (C * u >= lo && C * u < hi) ? C : 0.0; };
        m.kinks = {lo / C, hi / C};
        m.p_lo = lo;
        m.p_hi = hi;
    } else if (name == "rational_shift") {
        want(2);
        double a = params[0], b = params[1];
        if (b <= 0.0 || a < 0.0) fail("rational_shift: need a>=0, b>0");
        m.phi = [a, b](double u) { return a * u * u / (u * u + 1.0) + b; };
        m.dphi = [a](double u) {
            double d = u * u + 1.0;
            return 2.0 * a * u / (d * d);
        };
        m.p_lo = b;
        m.p_hi = a + b;
    } else if (name == "double_gaussian") {
        want(4);
        double A1 = params[0], m1 = params[1], A2 = params[2], m2 = params[3];
        if (A1 <= 0.0 || A2 <= 0.0) fail("double_gaussian: amplitudes must be positive");
        auto phi = [A1, m1, A2, m2](double u) {
            double d1 = u - m1, d2 = u - m2;
            return A1 * std::exp(-d1 * d1) + A2 * std::exp(-d2 * d2);
        };
        m.phi = phi;
        m.dphi = [A1, m1, A2, m2](double u) {
            double d1 = u - m1, d2 = u - m2;
            return -2.0 * d1 * A1 * std::exp(-d1 * d1) - 2.0 * d2 * A2 * std::exp(-d2 * d2);
        };
        double span = std::max(m1, m2) + 6.0;
        m.p_hi = extremum(phi, 0.0, span, true);
        m.p_lo = extremum(phi, 0.0, m.p_hi, false);
        if (m.p_lo <= 0.0) fail("double_gaussian: parameters yield p_lo <= 0");
    } else {
        fail("builtin_model: unknown model name '" + name + "'");
    }
    return m;
}

}  // namespace etm
