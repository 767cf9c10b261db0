#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace etm {

/// Firing-rate model: rate phi(u) modulated by the network activity u,
/// active only past the refractory age sigma. Immutable after construction;
/// all operations on it are pure.
struct FiringModel {
    std::function<double(double)> phi;
    std::function<double(double)> dphi;  // empty -> finite-difference fallback
    double sigma = 0.0;                  // refractory period, > 0
    double p_lo = 0.0;                   // inf phi on [0, p_hi], > 0
    double p_hi = 0.0;                   // sup phi; also bounds the activity
    std::string name = "custom";
    std::vector<double> params;
    std::vector<double> kinks;           // non-differentiable points of phi

    bool has_derivative() const { return static_cast<bool>(dphi); }
};

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double phi_eval(const FiringModel& m, double u);
double psi_eval(const FiringModel& m, double u);

struct PsiPrimeResult {
    double value = 0.0;
    bool finite_difference = false;  // analytic derivative unavailable
    bool kink = false;               // evaluated at a non-smooth point
};

/// psi'(u) = (phi(u) - u phi'(u)) / phi(u)^2, by the analytic derivative when
/// wired, otherwise central differences with h = 1e-6 * max(1, u). At u = 0 a
/// one-sided difference is used; at declared kinks the right-hand quotient.
PsiPrimeResult psi_prime(const FiringModel& m, double u);

enum class RegimeTag { Inhibitory, WeaklyExcitatory, StronglyExcitatory };

/// sign_changes holds the u-values where the sign category of psi'
/// (+ / 0 / -) changes, refined by bisection to width 1e-10. A model is
/// strongly excitatory exactly when this list is nonempty; flat stretches of
/// psi (clamped-linear band) count as category changes since the convergence
/// theory needs strict monotonicity of psi.
struct Regime {
    RegimeTag tag = RegimeTag::Inhibitory;
    std::vector<double> sign_changes;
};

Regime classify_regime(const FiringModel& m, int samples = 1024);

/// Catalog: constant(c) | sigmoid(a,b) | clamped_linear(C,hi,lo) |
/// rational_shift(a,b) | double_gaussian(A1,m1,A2,m2). All entries carry
/// analytic derivatives.
FiringModel builtin_model(const std::string& name, const std::vector<double>& params,
                          double sigma);

}  // namespace etm
