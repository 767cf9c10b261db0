#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "etm/model.hpp"

namespace etm {

/// Solutions of psi(N) = level on (0, p_hi]. A flat stretch of psi at the
/// level (clamped-linear band) is reported as an interval instead of roots.
struct LevelSet {
    std::vector<double> roots;
    std::optional<std::pair<double, double>> band;
};

LevelSet psi_level_set(const FiringModel& m, double level);

/// All ordered pairs (N1 < N2) of distinct roots. Errors when fewer than two
/// roots exist and no band is present.
std::vector<std::pair<double, double>> psi_level_pairs(const FiringModel& m, double level);

enum class ProfileKind { PiecewiseConstant, LinearBand, TwoSigma };

struct PeriodicProfile {
    ProfileKind kind = ProfileKind::PiecewiseConstant;
    double period = 0.0;
    double dt = 0.0;               // sample spacing; period / dt samples
    std::vector<double> samples;   // N on [0, period), left endpoints
    std::vector<double> jump_points;
    double residual = 0.0;         // max |window integral + psi(N) - 1|

    double value(double t) const;  // periodic lookup (nearest sample bin)
    int samples_per_period() const { return static_cast<int>(samples.size()); }
};

/// Window residual of the extended profile against the mass identity,
/// evaluated at n_checks grid-aligned times.
double profile_mass_residual(const FiringModel& m, const PeriodicProfile& p,
                             int n_checks = 1000);

/// Two-level sigma-periodic profile: N1 on [0, alpha), N2 on [alpha, sigma)
/// with alpha from alpha N1 + (sigma - alpha) N2 + psi(N1) = 1; requires
/// psi(N1) = psi(N2) and alpha inside (0, sigma).
struct PiecewiseConstantResult {
    PeriodicProfile profile;
    double alpha = 0.0;
};
PiecewiseConstantResult construct_piecewise_constant(const FiringModel& m, double N1,
                                                     double N2,
                                                     int samples_per_period = 400);

/// Proposition-4.2 profile on a linear band phi = C u over [a, b]:
/// N(t) = (1/sigma)(1 - 1/C) + amplitude * shape(t) with zero-mean
/// sigma-periodic shape; auto amplitude takes 90% of the band margin.
PeriodicProfile construct_linear_band(const FiringModel& m, double a, double b, double C,
                                      const std::function<double(double)>& shape,
                                      std::optional<double> amplitude = std::nullopt,
                                      int samples_per_period = 400);

struct MassFunctional {
    double N_plus = 0.0;
    double Q_value = 0.0;
};

struct TwoSigmaResult {
    PeriodicProfile profile;  // 2 sigma of samples: L-half then M-half
    MassFunctional mass;
    int iterations = 0;
    double contraction_ratio = 0.0;   // max successive-distance ratio observed
    double psi_jump_mismatch = 0.0;   // |psi(N(sigma-)) - psi(N(sigma+))|
    double fixed_point_distance = 0.0;
};

/// Fixed-point construction of a 2 sigma-periodic, piecewise-decreasing
/// activity around a local minimum of psi: iterate T (backward M solve on
/// (sigma, 2 sigma] from N_minus, forward L solve on [2 sigma, 3 sigma)
/// from N_plus, both marched in v = psi with local inversion on the half's
/// monotone piece) until the sup distance of iterates is below tol.
TwoSigmaResult construct_two_sigma(const FiringModel& m, double N_plus, double N_minus,
                                   double dt, double tol = 1e-10, int max_iter = 200);

/// Anchor pair around the local minimum of psi at the given level.
std::pair<double, double> anchor_pair_for_level(const FiringModel& m, double level);

struct CalibrationResult {
    TwoSigmaResult result;
    double level = 0.0;
    int bisection_steps = 0;
};

/// Bisection on the anchor level until |Q - 1| <= tol; the bracket levels
/// must straddle Q = 1.
CalibrationResult calibrate_mass(const FiringModel& m, double level_lo, double level_hi,
                                 double dt, double tol = 1e-6);

}  // namespace etm
