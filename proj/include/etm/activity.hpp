#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "etm/densities.hpp"
#include "etm/model.hpp"
#include "etm/steady.hpp"
#include "etm/trace.hpp"

namespace etm {

/// Fatal loss of solvability: the level equation psi(N) = level has no root
/// anywhere on (0, p_hi].
struct SolverError : std::runtime_error {
    double t = -1.0;  // failing time when raised inside an evolution
    explicit SolverError(const std::string& msg, double t_ = -1.0)
        : std::runtime_error(msg), t(t_) {}
};

/// Monotone pieces of psi on (0, p_hi], delimited by the sign changes of
/// psi' (classify_regime). direction per piece: +1 increasing, -1
/// decreasing, 0 flat.
struct BranchStructure {
    std::vector<double> cuts;
    std::vector<int> direction;
    double p_hi = 0.0;

    int count() const { return static_cast<int>(direction.size()); }
    int branch_of(double u) const;
    std::pair<double, double> interval(int b) const;
};

BranchStructure analyze_branches(const FiringModel& m, int samples = 2048);

enum class PolicyMode { ContinuationThenJump, FixedBranch, FailOnAmbiguity };

struct BranchPolicy {
    PolicyMode mode = PolicyMode::ContinuationThenJump;
    std::optional<int> seed_index;     // 0-based index into InitialBranchSet
    std::optional<double> seed_value;  // explicit N(0)
    double jump_tolerance = 1e-6;
};

struct LevelSolveResult {
    double value = 0.0;
    int branch_id = 0;
    bool jumped = false;
    bool tangent = false;  // level met tangentially (psi' ~ 0 at the root)
    std::optional<JumpRecord> jump;
};

/// Root of psi(N) = level. Continuation first: expanding bracket around the
/// seed capped at the seed branch's ends. When the branch has no root, a
/// psi-preserving jump: global scan at the level, candidates outside the
/// seed branch, preferring one whose branch stays solvable one step ahead
/// (rate hint delayed_input - N), smallest root as tie-break. The jump
/// record pairs the escape endpoint with the root of psi = psi(endpoint) on
/// the target branch, so psi matches across the jump to solver tolerance.
LevelSolveResult solve_psi_level(const FiringModel& m, const BranchStructure& br,
                                 double level, double seed, const BranchPolicy& policy,
                                 double bracket_step = 1e-3,
                                 std::optional<double> delayed_input = std::nullopt,
                                 double dt = 0.0);

/// March the integral equation: level_k = 1 - window integral (running
/// trapezoid, previous value as predictor for the open endpoint) minus the
/// unexpired part of n0 before t = sigma; each step solves psi(N) = level.
ActivityTrace evolve_activity(const FiringModel& m, const InitialDensity& n0, double T,
                              double dt, const BranchPolicy& policy);

/// Explicit midpoint for d/dt psi(N) = N(t - sigma) - N(t) in the variable
/// v = psi(N), inverting on the declared psi-decreasing region each step.
/// history carries N on [0, sigma] (sigma/dt + 1 samples) and must satisfy
/// the trapezoid identity int_0^sigma N + psi(N(sigma)) = 1 within 1e-8.
ActivityTrace evolve_monotone(const FiringModel& m, const std::vector<double>& history,
                              std::pair<double, double> psi_region, double T, double dt);

struct WindowExtrema {
    std::vector<double> maxima;
    std::vector<double> minima;
};

/// Per-window extrema over I_k = [k sigma, (k+1) sigma].
WindowExtrema window_extrema(const ActivityTrace& trace, double sigma);

/// Strictly increasing linear history ending delta below the steady state
/// n_star, calibrated so the trapezoid identity holds exactly. Requires
/// psi' < 0 between the history minimum and n_star.
std::vector<double> ramp_history(const FiringModel& m, double n_star, double delta,
                                 double dt);

}  // namespace etm
