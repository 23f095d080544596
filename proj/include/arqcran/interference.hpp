#pragma once

#include "arqcran/errors.hpp"

#include <array>
#include <string>
#include <utility>

namespace arqcran {

/// Two-state on-off interference chain. State 1 means the slot is
/// interfered with power i_power (linear scale); state 0 is clean.
struct InterferenceModel {
    double p01 = 0.0;  // P(0 -> 1)
    double p10 = 0.0;  // P(1 -> 0)
    double i_power = 0.0;

    std::array<std::array<double, 2>, 2> kernel() const {
        return {{{1.0 - p01, p01}, {p10, 1.0 - p10}}};
    }

    /// Stationary probability of the interfered state (the rate E).
    double on_fraction() const {
        const double s = p01 + p10;
        return s > 0.0 ? p01 / s : 0.0;
    }
};

/// Inverts the (rate, burstiness) parameterization: E is the stationary
/// fraction of interfered slots and B the mean length of an interference
/// burst, giving p10 = 1/B and p01 = E p10 / (1-E).
inline InterferenceModel from_rate_burstiness(double e, double b, double i_power) {
    if (e <= 0.0 || e >= 1.0)
        throw degenerate_chain_error(
            "from_rate_burstiness: rate must be strictly inside (0,1); for a clean "
            "channel set i_power = 0 instead");
    if (!(b >= 1.0))
        throw invalid_parameter_error("from_rate_burstiness: burstiness must be >= 1");
    if (i_power < 0.0)
        throw invalid_parameter_error("from_rate_burstiness: i_power must be >= 0");
    const double p10 = 1.0 / b;
    const double p01 = e * p10 / (1.0 - e);
    if (p01 > 1.0)
        throw infeasible_parameter_error(
            "from_rate_burstiness: (E=" + std::to_string(e) + ", B=" + std::to_string(b) +
            ") requires p01 = " + std::to_string(p01) + " > 1");
    return {p01, p10, i_power};
}

/// Recovers (rate, burstiness) from the transition probabilities; inverse
/// of from_rate_burstiness.
inline std::pair<double, double> rate_burstiness(const InterferenceModel& m) {
    if (m.p10 <= 0.0)
        throw degenerate_chain_error("rate_burstiness: p10 = 0 has no finite burstiness");
    return {m.p01 / (m.p01 + m.p10), 1.0 / m.p10};
}

}  // namespace arqcran
