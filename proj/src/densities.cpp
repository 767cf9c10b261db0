#include "etm/densities.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace etm {

InitialDensity make_density(const std::string& name, const std::vector<double>& params) {
    auto want = [&](size_t k) {
        if (params.size() != k) {
            std::ostringstream os;
            os << "make_density: " << name << " expects " << k << " parameters, got "
               << params.size();
            throw std::invalid_argument(os.str());
        }
    };
    InitialDensity d;
    d.name = name;
    d.params = params;
    if (name == "exp_shift") {
        want(1);
        double c = params[0];
        if (c < 0.0) throw std::invalid_argument("exp_shift: shift must be >= 0");
        d.value = [c](double s) { return s > c ? std::exp(-(s - c)) : 0.0; };
        d.tail = [c](double x) { return x > c ? std::exp(-(x - c)) : 1.0; };
        d.total_mass = 1.0;
    } else if (name == "plateau_exp") {
        want(2);
        double h = params[0], c = params[1];
        if (h <= 0.0 || c < 0.0) throw std::invalid_argument("plateau_exp: need h>0, c>=0");
        d.value = [h, c](double s) { return s < c ? h : h * std::exp(-(s - c)); };
        d.tail = [h, c](double x) {
            return x < c ? h * (c - x) + h : h * std::exp(-(x - c));
        };
        d.total_mass = h * (c + 1.0);
    } else if (name == "cos_exp") {
        want(0);
        d.value = [](double s) { return (2.0 / 3.0) * (1.0 + std::cos(s)) * std::exp(-s); };
        d.tail = [](double x) {
            return (2.0 / 3.0) * std::exp(-x) * (1.0 + 0.5 * (std::cos(x) - std::sin(x)));
        };
        d.total_mass = 1.0;
    } else {
        throw std::invalid_argument("make_density: unknown density '" + name + "'");
    }
    return d;
}

}  // namespace etm
