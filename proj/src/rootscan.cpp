#include "etm/rootscan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace etm {

double bisect(const std::function<double(double)>& f, double a, double b, double tol) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw std::invalid_argument("bisect: no sign change on bracket");
    while (b - a > tol) {
        double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;  // bracket at rounding resolution
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if (fa * fm < 0.0) {
            b = mid;
            fb = fm;
        } else {
            a = mid;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

std::vector<RootInfo> scan_roots(const std::function<double(double)>& f, double lo,
                                 double hi, const ScanOptions& opts) {
    std::vector<RootInfo> roots;
    if (!(hi > lo)) return roots;
    const int n = std::max(opts.samples, 8);
    const double h = (hi - lo) / n;
    std::vector<double> xs(n + 1), ys(n + 1);
    for (int i = 0; i <= n; ++i) {
        xs[i] = (i == n) ? hi : lo + i * h;
        ys[i] = f(xs[i]);
    }
    auto push = [&](double x, bool tangent) {
        for (const auto& r : roots)
            if (std::abs(r.x - x) <= 1e-9 * std::max(1.0, std::abs(x))) return;
        roots.push_back({x, tangent});
    };
    for (int i = 0; i < n; ++i) {
        if (ys[i] == 0.0) {
            push(xs[i], false);
        } else if (ys[i] * ys[i + 1] < 0.0) {
            push(bisect(f, xs[i], xs[i + 1], opts.bisect_tol), false);
        }
    }
    if (ys[n] == 0.0) push(xs[n], false);
    // tangential roots: interior local minima of |f| that dip below tolerance
    // without changing sign
    for (int i = 1; i < n; ++i) {
        double a0 = std::abs(ys[i - 1]), a1 = std::abs(ys[i]), a2 = std::abs(ys[i + 1]);
        if (a1 <= a0 && a1 <= a2 && ys[i - 1] * ys[i + 1] > 0.0) {
            // golden-section refine |f| on [x_{i-1}, x_{i+1}]
            double a = xs[i - 1], b = xs[i + 1];
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            double c = b - gr * (b - a), d = a + gr * (b - a);
            double fc = std::abs(f(c)), fd = std::abs(f(d));
            for (int it = 0; it < 200 && (b - a) > opts.bisect_tol; ++it) {
                if (fc < fd) {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - gr * (b - a);
                    fc = std::abs(f(c));
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + gr * (b - a);
                    fd = std::abs(f(d));
                }
            }
            double xm = 0.5 * (a + b);
            if (std::abs(f(xm)) <= opts.tangency_tol) push(xm, true);
        }
    }
    std::sort(roots.begin(), roots.end(),
              [](const RootInfo& a, const RootInfo& b) { return a.x < b.x; });
    return roots;
}

}  // namespace etm
