#pragma once

#include <stdexcept>
#include <vector>

namespace etm {

struct FiringModel;

struct GridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uniform age grid with node values at s_j = j*ds and unit CFL (dt = ds).
/// The last node is a lumped absorber holding all mass beyond s_max (left
/// edge (n_cells-1)*ds) divided by ds; since the firing rate is
/// age-independent past sigma, lumping is exact for mass, tail and activity.
struct AgeGrid {
    double sigma = 0.0;
    double ds = 0.0;
    int refractory_nodes = 0;  // sigma / ds
    int n_cells = 0;           // nodes including the lumped one
    double s_max = 0.0;        // (n_cells - 1) * ds

    double dt() const { return ds; }
    double node(int j) const { return j * ds; }

    static AgeGrid make(double sigma, double ds, double s_max);
    /// s_max = sigma + min(20 / p_lo, 50); the cap keeps degenerate p_lo
    /// models (double Gaussian) at desk scale, which is safe because the
    /// lumped tail keeps activity and mass exact for any s_max > sigma.
    static AgeGrid with_default_span(const FiringModel& m, double ds);
};

struct DensityField {
    AgeGrid grid;
    std::vector<double> values;  // node densities; back() is the lumped node

    double mass() const;       // sum values * ds
    double tail_mass() const;  // sum over nodes s_j >= sigma, lumped included
};

}  // namespace etm
