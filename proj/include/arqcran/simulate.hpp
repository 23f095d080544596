#pragma once

#include "arqcran/decode.hpp"
#include "arqcran/errors.hpp"
#include "arqcran/fading.hpp"
#include "arqcran/interference.hpp"
#include "arqcran/protocol.hpp"
#include "arqcran/rng.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

namespace arqcran {

/// Steady-state estimates from one simulation run. Standard errors come
/// from non-overlapping batch means; results are bit-exact for a fixed
/// seed. efficiency_stderr is NaN when some batch had no transmissions.
struct SimEstimate {
    double throughput_mean = 0.0;
    double throughput_stderr = 0.0;
    double efficiency_mean = std::numeric_limits<double>::quiet_NaN();
    double efficiency_stderr = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t slots = 0;
    std::uint64_t warmup = 0;
    std::uint64_t seed = 0;
};

struct SimOptions {
    edge_policy policy = edge_policy::conservative;
    int batches = 50;
    /// Track per-packet delivery counts and fail if any packet is ever
    /// delivered twice (test instrumentation; costs a little time).
    bool audit_delivery = false;
};

namespace detail {

class delivery_audit {
public:
    explicit delivery_audit(bool enabled) : enabled_(enabled) {}

    void observe(const StepTrace& tr) {
        if (!enabled_) return;
        for (int i = 0; i < tr.departed_before; ++i) ids_.pop_front();
        if (tr.admitted) ids_.push_back(next_id_++);
        if (tr.reward.delivered) {
            // window positions only shift through the head departures
            // already replayed above
            const auto id = ids_.at(static_cast<std::size_t>(tr.tx_index));
            if (delivered_.size() <= id) delivered_.resize(id + 1, 0);
            if (++delivered_[id] > 1)
                throw internal_invariant_error("simulation: packet delivered twice");
        }
        for (int i = 0; i < tr.departed_after; ++i) ids_.pop_front();
    }

private:
    bool enabled_;
    std::deque<std::size_t> ids_;
    std::size_t next_id_ = 0;
    std::vector<std::uint8_t> delivered_;
};

template <typename SlotOutcome>
SimEstimate run_slots(const ProtocolConfig& cfg, std::uint64_t seed, std::uint64_t slots,
                      std::uint64_t warmup, const SimOptions& opts, xoshiro256pp& rng,
                      SlotOutcome&& next_outcome) {
    if (opts.batches < 2) throw invalid_parameter_error("simulate: need at least 2 batches");
    if (slots < 10 * warmup || slots < static_cast<std::uint64_t>(opts.batches))
        throw invalid_parameter_error("simulate: slots must be >= 10*warmup and >= batches");

    ProtocolState phi = initial_state(cfg);
    delivery_audit audit(opts.audit_delivery);

    for (std::uint64_t k = 0; k < warmup; ++k) {
        const DecodeOutcome out = next_outcome();
        const bool arrival = rng.bernoulli(cfg.alpha);
        StepTrace tr = step_traced(phi, cfg, out, arrival);
        audit.observe(tr);
        phi = std::move(tr.state);
    }

    const std::uint64_t batch_len = slots / static_cast<std::uint64_t>(opts.batches);
    const auto batches = static_cast<std::size_t>(opts.batches);
    std::vector<double> del(batches, 0.0), tx(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::uint64_t k = 0; k < batch_len; ++k) {
            const DecodeOutcome out = next_outcome();
            const bool arrival = rng.bernoulli(cfg.alpha);
            StepTrace tr = step_traced(phi, cfg, out, arrival);
            audit.observe(tr);
            phi = std::move(tr.state);
            del[b] += tr.reward.delivered;
            tx[b] += tr.reward.transmitted;
        }
    }

    SimEstimate est;
    est.slots = batch_len * batches;
    est.warmup = warmup;
    est.seed = seed;
    double total_del = 0.0, total_tx = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
        total_del += del[b];
        total_tx += tx[b];
    }
    const auto n = static_cast<double>(est.slots);
    est.throughput_mean = total_del / n;

    auto batch_stderr = [&](auto value_of) {
        double mean = 0.0;
        for (std::size_t b = 0; b < batches; ++b) mean += value_of(b);
        mean /= static_cast<double>(batches);
        double var = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            const double d = value_of(b) - mean;
            var += d * d;
        }
        var /= static_cast<double>(batches - 1);
        return std::sqrt(var / static_cast<double>(batches));
    };
    est.throughput_stderr =
        batch_stderr([&](std::size_t b) { return del[b] / static_cast<double>(batch_len); });

    if (total_tx > 0.0) {
        est.efficiency_mean = total_del / total_tx;
        bool all_batches_tx = true;
        for (std::size_t b = 0; b < batches; ++b)
            if (tx[b] == 0.0) all_batches_tx = false;
        if (all_batches_tx)
            est.efficiency_stderr = batch_stderr([&](std::size_t b) { return del[b] / tx[b]; });
    }
    return est;
}

}  // namespace detail

/// Slot-by-slot simulation of the quantized model: channel bins are drawn
/// from the fading kernel, the interference bit from the on-off kernel,
/// arrivals as Bernoulli(alpha), and the slot is driven through the exact
/// same step function the analytic chain uses.
inline SimEstimate simulate_chain_sampled(const ChannelModel& cm, const InterferenceModel& im,
                                          const LinkBudget& lb, const ProtocolConfig& cfg,
                                          std::uint64_t seed, std::uint64_t slots,
                                          std::uint64_t warmup, const SimOptions& opts = {}) {
    cfg.validate();
    const auto [g0, g1] = gain_thresholds(lb);
    const auto [h0, h1] = threshold_indices(cm, g0, g1, opts.policy);

    // row CDFs for inverse-transform sampling of the channel kernel
    std::vector<double> cdf(static_cast<std::size_t>(cm.q) * cm.q);
    for (int i = 0; i < cm.q; ++i) {
        double acc = 0.0;
        for (int j = 0; j < cm.q; ++j) {
            acc += cm.transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            cdf[static_cast<std::size_t>(i * cm.q + j)] = acc;
        }
        cdf[static_cast<std::size_t>(i * cm.q + cm.q - 1)] = 1.0;
    }
    const auto psi_kernel = im.kernel();

    xoshiro256pp rng(seed);
    int h = 1 + static_cast<int>(rng.uniform() * cm.q);  // stationary: uniform bins
    if (h > cm.q) h = cm.q;
    int psi = rng.bernoulli(im.on_fraction()) ? 1 : 0;

    auto next_outcome = [&]() {
        const double u = rng.uniform();
        const double* row = &cdf[static_cast<std::size_t>((h - 1) * cm.q)];
        int j = 0;
        while (j + 1 < cm.q && u >= row[j]) ++j;
        h = j + 1;
        psi = rng.uniform() < psi_kernel[static_cast<std::size_t>(psi)][0] ? 0 : 1;
        return decode(h, psi, h0, h1);
    };
    return detail::run_slots(cfg, seed, slots, warmup, opts, rng, next_outcome);
}

/// Reference simulation with the unquantized gain process: a complex AR(1)
/// recursion with coefficient sqrt(rho) produces the exact correlated
/// exponential power gains, and the gain thresholds are applied directly.
/// Serves as the quantization-error probe: its gap to the chain-sampled
/// model shrinks as q grows.
inline SimEstimate simulate_continuous(double rho, const InterferenceModel& im,
                                       const LinkBudget& lb, const ProtocolConfig& cfg,
                                       std::uint64_t seed, std::uint64_t slots,
                                       std::uint64_t warmup, const SimOptions& opts = {}) {
    cfg.validate();
    if (rho < 0.0 || rho >= 1.0)
        throw invalid_parameter_error("simulate_continuous: rho must be in [0,1)");
    const auto [g0, g1] = gain_thresholds(lb);
    const auto psi_kernel = im.kernel();

    xoshiro256pp rng(seed);
    const double inv_sqrt2 = 0.70710678118654752440;
    std::complex<double> g(rng.normal() * inv_sqrt2, rng.normal() * inv_sqrt2);
    int psi = rng.bernoulli(im.on_fraction()) ? 1 : 0;
    const double ar = std::sqrt(rho);
    const double innov = std::sqrt(1.0 - rho);

    auto next_outcome = [&]() {
        const std::complex<double> w(rng.normal() * inv_sqrt2, rng.normal() * inv_sqrt2);
        g = ar * g + innov * w;
        psi = rng.uniform() < psi_kernel[static_cast<std::size_t>(psi)][0] ? 0 : 1;
        const double gain = std::norm(g);
        DecodeOutcome out;
        out.cu_ok = gain > g0;
        out.bs_ok = psi != 0 ? gain > g1 : gain > g0;
        return out;
    };
    return detail::run_slots(cfg, seed, slots, warmup, opts, rng, next_outcome);
}

}  // namespace arqcran
