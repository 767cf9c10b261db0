#pragma once

#include <functional>
#include <string>
#include <vector>

namespace etm {

/// Analytic initial density with closed-form tail integral so that grid
/// truncation never shifts branch roots.
struct InitialDensity {
    std::string name;
    std::vector<double> params;
    std::function<double(double)> value;  // n0(s)
    std::function<double(double)> tail;   // integral of n0 over [s, infinity)
    double total_mass = 1.0;

    double cum(double x) const { return total_mass - tail(x); }
};

/// Catalog: exp_shift(c): e^{-(s-c)} 1{s>c} | plateau_exp(h,c): h below c,
/// h e^{-(s-c)} past c | cos_exp(): (2/3)(1+cos s) e^{-s}.
InitialDensity make_density(const std::string& name, const std::vector<double>& params);

}  // namespace etm
