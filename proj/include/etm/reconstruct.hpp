#pragma once

#include <string>
#include <vector>

#include "etm/grid.hpp"
#include "etm/model.hpp"
#include "etm/periodic.hpp"
#include "etm/trace.hpp"

namespace etm {

/// Compatible initial density from a prescribed activity on [0, sigma]:
/// n0(s) = N(sigma - s) + d(psi(N))/dt (sigma - s) below sigma, exponential
/// tail at rate phi(N(0)) past it (tail mass exactly psi(N(0)), so the total
/// is 1 and the t = 0 branch equation holds). Small negative parts of the
/// inner profile are clipped and the clipped mass folded into the tail.
DensityField initial_from_activity(const FiringModel& m, const std::vector<double>& history,
                                   double dt, const AgeGrid& grid);

/// Characteristics formula at t = 0 for a periodic activity:
/// n(0, s) = N(-s) exp(-int_sigma^s phi(N(s' - s)) ds'); the exponent is one
/// cumulative pass over the grid and the lumped node carries the exact
/// geometric remainder of the periodic tail.
DensityField density_from_periodic_activity(const FiringModel& m, const PeriodicProfile& p,
                                            const AgeGrid& grid);

struct VerificationReport {
    double max_psi_residual = 0.0;   // |psi(N(t)) - tail(n(t))|
    double max_mass_residual = 0.0;  // |mass(n(t)) - 1|
    bool pass = false;
};

VerificationReport verify_solution(const std::vector<DensityField>& snapshots,
                                   const std::vector<double>& snapshot_times,
                                   const ActivityTrace& trace, const FiringModel& m,
                                   double tol);

std::string verification_to_json(const VerificationReport& r);

}  // namespace etm
