#pragma once

#include "gevrey/gevrey.hpp"

#include <cmath>
#include <complex>
#include <string>

namespace testing {

inline std::string instance_path(const std::string& name) { return std::string(GEVREY_INSTANCE_DIR) + "/" + name; }
inline gevrey::ProblemInstance inst_a() { return gevrey::load_instance(instance_path("inst_a.json")); }
inline gevrey::ProblemInstance inst_a0() { return gevrey::load_instance(instance_path("inst_a0.json")); }

/// Small grid used where the test only needs structure, not accuracy.
inline gevrey::ModeGrid small_grid(const gevrey::ProblemInstance& inst, int n = 33) {
    return gevrey::ModeGrid(inst.default_grid().m_max, n);
}

/// max over entries of |a - b| / max|b|.
template <class T>
double table_rel_diff(const T& a, const T& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        num = std::max(num, static_cast<double>(std::abs(a.data[i] - b.data[i])));
        den = std::max(den, static_cast<double>(std::abs(b.data[i])));
    }
    return den > 0 ? num / den : num;
}

} // namespace testing
