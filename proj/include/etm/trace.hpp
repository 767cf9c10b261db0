#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace etm {

/// A psi-preserving branch switch: before/after are the two ends of the
/// instantaneous jump (psi(before) == psi(after) up to solver tolerance),
/// recorded at the first time step past the crossing.
struct JumpRecord {
    double t = 0.0;
    double before = 0.0;
    double after = 0.0;
};

struct ActivityTrace {
    double dt = 0.0;
    double sigma = 0.0;
    std::vector<double> values;      // N(t_k), t_k = k dt
    std::vector<double> psi_values;  // psi(N(t_k))
    std::vector<int> branch_ids;
    std::vector<JumpRecord> jumps;

    int size() const { return static_cast<int>(values.size()); }
    double time(int k) const { return k * dt; }
    double duration() const { return values.empty() ? 0.0 : (size() - 1) * dt; }
};

/// CSV with header t,N,psiN,branch,jump; 12 significant digits.
void write_trace_csv(const ActivityTrace& trace, std::ostream& os);
void write_trace_csv(const ActivityTrace& trace, const std::string& path);

}  // namespace etm
