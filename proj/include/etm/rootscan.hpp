#pragma once

#include <functional>
#include <vector>

namespace etm {

struct ScanOptions {
    int samples = 4096;
    double bisect_tol = 1e-12;    // bracket width at termination
    double tangency_tol = 1e-10;  // |f| threshold for a double root
};

struct RootInfo {
    double x = 0.0;
    bool tangent = false;  // located as a |f| minimum without a sign change
};

/// Bisection on [a, b] with f(a) f(b) <= 0; returns the midpoint once the
/// bracket is narrower than tol.
double bisect(const std::function<double(double)>& f, double a, double b,
              double tol = 1e-12);

/// Sign-change scan on [lo, hi] followed by bisection, plus detection of
/// tangential (double) roots at interior |f| minima below tangency_tol.
/// Roots are returned sorted and deduplicated.
std::vector<RootInfo> scan_roots(const std::function<double(double)>& f, double lo,
                                 double hi, const ScanOptions& opts = {});

}  // namespace etm
