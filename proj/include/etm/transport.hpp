#pragma once

#include <optional>
#include <vector>

#include "etm/activity.hpp"
#include "etm/densities.hpp"
#include "etm/grid.hpp"
#include "etm/model.hpp"
#include "etm/trace.hpp"

namespace etm {

/// Node sampling of n0 with the analytic remainder in the lumped node, then
/// renormalized so the grid mass is exactly 1. The applied factor is
/// returned through renorm_factor when requested.
DensityField init_density(const InitialDensity& n0, const AgeGrid& grid,
                          double* renorm_factor = nullptr);

struct BoundaryResult {
    double value = 0.0;
    int branch_id = 0;
    bool jumped = false;
    std::optional<JumpRecord> jump;
};

/// Solves N = phi(N) * tail(field), i.e. psi(N) = tail, with the shared
/// continuation-then-jump machinery.
BoundaryResult boundary_activity(const DensityField& field, const FiringModel& m,
                                 const BranchStructure& br, double seed,
                                 const BranchPolicy& policy,
                                 std::optional<double> delayed_input = std::nullopt);

/// One unit-CFL upwind step, in place. The shift is exact transport; the
/// boundary value solves against the shifted tail; the reaction factor
/// (1 - dt phi(N_new), or exp(-dt phi) behind the flag) then hits every node
/// past sigma including the lumped one. With the linear factor the grid mass
/// is conserved to solver tolerance.
BoundaryResult step_pde(DensityField& field, const FiringModel& m,
                        const BranchStructure& br, double n_prev,
                        const BranchPolicy& policy, bool exponential_decay = false);

struct PdeRun {
    ActivityTrace trace;
    std::vector<DensityField> snapshots;
    std::vector<double> snapshot_times;
    std::vector<double> mass_history;  // recorded every step
    double max_mass_drift = 0.0;       // max |mass - 1|
};

PdeRun run_pde(const FiringModel& m, const InitialDensity& n0, const AgeGrid& grid,
               double T, const BranchPolicy& policy, int snapshot_every = 0,
               bool exponential_decay = false);

/// Same march from an already-built field (scheme-exact steady starts,
/// reconstruction round trips). The field is used as-is, not renormalized.
PdeRun run_pde_from_field(const FiringModel& m, const DensityField& field0, double T,
                          const BranchPolicy& policy, int snapshot_every = 0,
                          bool exponential_decay = false);

/// Exact fixed point of step_pde anchored at a steady activity: plateau N*,
/// geometric tail with the scheme's own decay factor, lumped remainder. Its
/// shifted tail is exactly psi(N*), so the activity stays bit-stable at N*.
/// Grid mass is 1 - N* ds (not renormalized, by construction).
DensityField discrete_steady_profile(const FiringModel& m, double n_star,
                                     const AgeGrid& grid, bool exponential_decay = false);

}  // namespace etm
