#include "etm/trace.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace etm {

namespace {

void format_row(std::ostream& os, double t, double n, double psi, int branch, int jump) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%d,%d\n", t, n, psi, branch, jump);
    os << buf;
}

}  // namespace

void write_trace_csv(const ActivityTrace& trace, std::ostream& os) {
    os << "t,N,psiN,branch,jump\n";
    std::vector<char> is_jump(trace.values.size(), 0);
    for (const auto& j : trace.jumps) {
        int k = static_cast<int>(j.t / trace.dt + 0.5);
        if (k >= 0 && k < trace.size()) is_jump[k] = 1;
    }
    for (int k = 0; k < trace.size(); ++k)
        format_row(os, trace.time(k), trace.values[k], trace.psi_values[k],
                   trace.branch_ids[k], is_jump[k]);
}

void write_trace_csv(const ActivityTrace& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    write_trace_csv(trace, f);
}

}  // namespace etm
