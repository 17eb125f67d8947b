#pragma once

#include "podgp/errors.hpp"

#include <Eigen/Dense>

#include <string>

namespace podgp {

/// Locates t in a strictly increasing grid; returns (segment index i,
/// alpha in [0,1]) with t = (1-alpha)*times[i] + alpha*times[i+1].
/// Throws on t outside [times.first, times.last].
inline std::pair<Eigen::Index, double> segment_lookup(const Eigen::VectorXd& times, double t,
                                                      const char* what) {
    const Eigen::Index n = times.size();
    if (n < 1) throw validation_error(std::string(what) + ": empty time grid");
    const double span = std::max(1.0, std::abs(times(n - 1)) + std::abs(times(0)));
    const double tol = 1e-12 * span;
    if (t < times(0) - tol || t > times(n - 1) + tol)
        throw validation_error(std::string(what) + ": time " + std::to_string(t) +
                               " outside sampled range [" + std::to_string(times(0)) + ", " +
                               std::to_string(times(n - 1)) + "]");
    if (n == 1) return {0, 0.0};
    if (t <= times(0)) return {0, 0.0};
    if (t >= times(n - 1)) return {n - 2, 1.0};
    // binary search for the segment with times[i] <= t < times[i+1]
    Eigen::Index lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (times(mid) <= t)
            lo = mid;
        else
            hi = mid;
    }
    return {lo, (t - times(lo)) / (times(lo + 1) - times(lo))};
}

/// Linear interpolation of a time-indexed row matrix at t.
inline Eigen::VectorXd interp_rows(const Eigen::VectorXd& times, const Eigen::MatrixXd& rows,
                                   double t, const char* what) {
    const auto [i, alpha] = segment_lookup(times, t, what);
    if (rows.rows() == 1) return rows.row(0).transpose();
    return ((1.0 - alpha) * rows.row(i) + alpha * rows.row(i + 1)).transpose();
}

inline void require_strictly_increasing(const Eigen::VectorXd& times, const char* what) {
    for (Eigen::Index i = 1; i < times.size(); ++i)
        if (!(times(i) > times(i - 1)))
            throw validation_error(std::string(what) + ": timestamps not strictly increasing at index " +
                                   std::to_string(i));
}

} // namespace podgp
