#include "etm/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "etm/model.hpp"

namespace etm {

AgeGrid AgeGrid::make(double sigma, double ds, double s_max) {
    if (sigma <= 0.0 || ds <= 0.0) throw GridError("AgeGrid: sigma and ds must be positive");
    double ratio = sigma / ds;
    int m = static_cast<int>(std::lround(ratio));
    if (m < 1 || std::abs(m * ds - sigma) > 1e-9 * sigma)
        throw GridError("AgeGrid: sigma/ds must be a positive integer");
    if (s_max <= sigma + ds) throw GridError("AgeGrid: s_max must exceed sigma");
    AgeGrid g;
    g.sigma = sigma;
    g.ds = ds;
    g.refractory_nodes = m;
    int regular = static_cast<int>(std::ceil(s_max / ds - 1e-12));
    g.n_cells = regular + 1;
    g.s_max = regular * ds;
    return g;
}

AgeGrid AgeGrid::with_default_span(const FiringModel& m, double ds) {
    double span = std::min(20.0 / m.p_lo, 50.0);
    return make(m.sigma, ds, m.sigma + span);
}

double DensityField::mass() const {
    long double s = 0.0L;
    for (double v : values) s += v;
    return static_cast<double>(s) * grid.ds;
}

double DensityField::tail_mass() const {
    long double s = 0.0L;
    for (int j = grid.refractory_nodes; j < grid.n_cells; ++j) s += values[j];
    return static_cast<double>(s) * grid.ds;
}

}  // namespace etm
