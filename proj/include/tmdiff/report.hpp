#ifndef TMDIFF_REPORT_HPP
#define TMDIFF_REPORT_HPP

#include <cmath>
#include <string>
#include <vector>

namespace tmdiff {

/// Outcome of one identity/oracle comparison: lhs against rhs at a relative
/// tolerance with an absolute floor.
struct OracleReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double abs_error = 0.0;
    double rel_error = 0.0;
    double tolerance = 0.0;
    double abs_floor = 0.0;
    bool pass = false;
    std::string provenance;

    static OracleReport compare(std::string name, double lhs, double rhs,
                                double rel_tol, double abs_floor = 1e-12,
                                std::string provenance = {}) {
        OracleReport r;
        r.name = std::move(name);
        r.lhs = lhs;
        r.rhs = rhs;
        r.abs_error = std::abs(lhs - rhs);
        const double scale = std::max(std::abs(lhs), std::abs(rhs));
        r.rel_error = scale > 0.0 ? r.abs_error / scale : 0.0;
        r.tolerance = rel_tol;
        r.abs_floor = abs_floor;
        r.pass = r.rel_error <= rel_tol || r.abs_error <= abs_floor;
        r.provenance = std::move(provenance);
        return r;
    }
};

inline bool all_pass(const std::vector<OracleReport>& reports) {
    for (const auto& r : reports)
        if (!r.pass) return false;
    return true;
}

} // namespace tmdiff

#endif
