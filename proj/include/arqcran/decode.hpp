#pragma once

#include "arqcran/errors.hpp"
#include "arqcran/fading.hpp"

#include <algorithm>
#include <utility>

namespace arqcran {

/// Link budget, all linear scale. dB inputs are converted exactly once at
/// configuration parse time. gamma = 0 models a link whose threshold sits
/// below the gain support (every slot decodes); sigma_q2 is a reserved
/// constant extra noise term at the central unit, 0 in this model.
struct LinkBudget {
    double p_tx = 1.0;
    double sigma2 = 1.0;
    double gamma = 1.0;
    double i_power = 0.0;
    double sigma_q2 = 0.0;

    void validate() const {
        if (!(p_tx > 0.0)) throw invalid_parameter_error("LinkBudget: p_tx must be > 0");
        if (!(sigma2 > 0.0)) throw invalid_parameter_error("LinkBudget: sigma2 must be > 0");
        if (!(gamma >= 0.0)) throw invalid_parameter_error("LinkBudget: gamma must be >= 0");
        if (!(i_power >= 0.0)) throw invalid_parameter_error("LinkBudget: i_power must be >= 0");
        if (!(sigma_q2 >= 0.0)) throw invalid_parameter_error("LinkBudget: sigma_q2 must be >= 0");
        const auto [g0, g1] = gain_thresholds_unchecked();
        if (!(g0 <= g1))
            throw invalid_parameter_error("LinkBudget: derived gain thresholds need g0 <= g1");
    }

    std::pair<double, double> gain_thresholds_unchecked() const {
        return {gamma * (sigma2 + sigma_q2) / p_tx, gamma * (sigma2 + i_power) / p_tx};
    }
};

/// Success flags of one slot's decode attempts. The base station sees the
/// interference; the central unit cancels it, so bs_ok implies cu_ok.
struct DecodeOutcome {
    bool bs_ok = false;
    bool cu_ok = false;

    bool operator==(const DecodeOutcome&) const = default;
};

/// Gain thresholds (g0, g1): a slot decodes at the central unit iff the
/// gain exceeds g0, and at the base station iff it exceeds g1 when
/// interfered (g0 when clean).
inline std::pair<double, double> gain_thresholds(const LinkBudget& lb) {
    lb.validate();
    return lb.gain_thresholds_unchecked();
}

/// How a bin that straddles a gain threshold is classified.
/// `conservative` counts it as failure (success needs the whole bin above
/// the threshold); `optimistic` counts it as success.
enum class edge_policy { conservative, optimistic };

/// Largest bin index whose gains do not all clear the threshold g, i.e.
/// decoding succeeds exactly for bins with index > returned value.
/// 0 means every bin decodes; q means none does. A threshold equal to a
/// bin edge belongs to the upper bin.
inline int bin_threshold(const ChannelModel& cm, double g,
                         edge_policy policy = edge_policy::conservative) {
    int h = 0;
    if (policy == edge_policy::conservative) {
        // bin b clears g iff its lower edge >= g
        while (h < cm.q && cm.edges[static_cast<std::size_t>(h)] < g) ++h;
    } else {
        // bin b fails g only if its upper edge <= g
        while (h < cm.q && cm.edges[static_cast<std::size_t>(h) + 1] <= g) ++h;
    }
    return h;
}

/// Threshold indices (h0, h1) for the pair of gain thresholds.
inline std::pair<int, int> threshold_indices(const ChannelModel& cm, double g0, double g1,
                                             edge_policy policy = edge_policy::conservative) {
    if (!(g0 <= g1)) throw invalid_parameter_error("threshold_indices: g0 must be <= g1");
    return {bin_threshold(cm, g0, policy), bin_threshold(cm, g1, policy)};
}

/// Decode outcome for channel bin h_idx (1..q) under interference bit psi.
inline DecodeOutcome decode(int h_idx, int psi, int h0, int h1) {
    DecodeOutcome out;
    out.cu_ok = h_idx > h0;
    out.bs_ok = psi != 0 ? h_idx > h1 : h_idx > h0;
    return out;
}

}  // namespace arqcran
