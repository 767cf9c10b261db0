#pragma once

#include <string>
#include <vector>

#include "etm/densities.hpp"
#include "etm/grid.hpp"
#include "etm/model.hpp"

namespace etm {

/// Roots N* of sigma N + psi(N) = 1 on (0, p_hi], sorted increasing, each
/// with the sign of psi' there (0 for tangential/double roots).
struct SteadyStateSet {
    std::vector<double> roots;
    std::vector<int> psi_prime_signs;
    std::vector<double> residuals;
    bool empty_warning = false;  // set when the scan finds no sign change
};

SteadyStateSet steady_states(const FiringModel& m, int samples = 4096);

/// Steady density: plateau N* below sigma, exponential tail with rate
/// phi(N*) past it. The discrete tail nodes are scaled so the grid tail mass
/// equals psi(N*) exactly, which makes the discrete mass exactly 1 and the
/// boundary equation exact (truncation correction).
DensityField steady_profile(const FiringModel& m, double n_star, const AgeGrid& grid);

/// Analytic form of the steady density, usable wherever an InitialDensity is.
InitialDensity steady_density(const FiringModel& m, double n_star);

struct InitialBranchSet {
    std::vector<double> roots;  // all admissible N(0), sorted increasing
    double tail_mass = 0.0;     // integral of n0 over (sigma, infinity)
};

/// Branch equation N = phi(N) * tail. For analytic densities the tail is the
/// first-order node-rectangle sum on the default grid (ds = sigma/200)
/// normalized by the trapezoid mass; this reproduces the reference upwind
/// computation. For an already-discretized field the grid's native sums are
/// used directly.
InitialBranchSet initial_activities(const FiringModel& m, const InitialDensity& n0);
InitialBranchSet initial_activities(const FiringModel& m, const DensityField& n0);

std::string steady_to_json(const SteadyStateSet& s);
std::string branches_to_json(const InitialBranchSet& b);

}  // namespace etm
