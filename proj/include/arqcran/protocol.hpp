#pragma once

#include "arqcran/decode.hpp"
#include "arqcran/errors.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace arqcran {

enum class arq_protocol : std::uint8_t { stop_and_wait, go_back_n, selective_repeat };
enum class architecture : std::uint8_t { conventional, cran, hybrid };

inline const char* to_string(arq_protocol p) {
    switch (p) {
        case arq_protocol::stop_and_wait: return "sw";
        case arq_protocol::go_back_n: return "gbn";
        case arq_protocol::selective_repeat: return "sr";
    }
    return "?";
}

inline const char* to_string(architecture a) {
    switch (a) {
        case architecture::conventional: return "conventional";
        case architecture::cran: return "cran";
        case architecture::hybrid: return "hybrid";
    }
    return "?";
}

/// Static protocol parameters. delta is the feedback delay in slots for
/// decoding at the central unit; the conventional architecture resolves
/// feedback in the transmission slot and ignores delta entirely.
struct ProtocolConfig {
    arq_protocol protocol = arq_protocol::stop_and_wait;
    architecture arch = architecture::conventional;
    int delta = 1;
    int window = 1;
    int b_max = 1;
    double alpha = 0.5;

    void validate() const {
        if (delta < 1) throw invalid_parameter_error("ProtocolConfig: delta must be >= 1");
        if (window < 1) throw invalid_parameter_error("ProtocolConfig: window must be >= 1");
        if (b_max < 1) throw invalid_parameter_error("ProtocolConfig: b_max must be >= 1");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw invalid_parameter_error("ProtocolConfig: alpha must be in [0,1]");
        if (protocol == arq_protocol::stop_and_wait && window != 1)
            throw invalid_parameter_error("ProtocolConfig: stop-and-wait forces window = 1");
        if (delta > 200 || window > 200 || b_max > 200)
            throw invalid_parameter_error("ProtocolConfig: delta/window/b_max limited to 200");
    }
};

enum class entry_status : std::uint8_t { unsent, awaiting, acked };

/// One packet held by the sender. While awaiting, `age` counts slots since
/// the transmission and `fb_ok` is the feedback that will arrive when the
/// age reaches delta. `accepted` records that the receiver has taken the
/// packet; it is permanent for the entry's lifetime.
struct WindowEntry {
    entry_status status = entry_status::unsent;
    std::uint8_t age = 0;
    bool fb_ok = false;
    bool accepted = false;

    bool operator==(const WindowEntry&) const = default;
};

/// Sender state: packets not yet admitted to the window, plus the window
/// itself in transmission order (oldest first).
struct ProtocolState {
    int buffer = 0;
    std::vector<WindowEntry> window;

    bool operator==(const ProtocolState&) const = default;

    /// Injective byte encoding, the canonical state key. Layout:
    /// [buffer][entry count] then per entry [status][age][fb_ok][accepted].
    /// Non-awaiting entries always carry age = 0, fb_ok = 0.
    std::string canonical_key() const {
        std::string key;
        key.reserve(2 + 4 * window.size());
        key.push_back(static_cast<char>(buffer));
        key.push_back(static_cast<char>(window.size()));
        for (const auto& e : window) {
            key.push_back(static_cast<char>(e.status));
            key.push_back(static_cast<char>(e.age));
            key.push_back(static_cast<char>(e.fb_ok ? 1 : 0));
            key.push_back(static_cast<char>(e.accepted ? 1 : 0));
        }
        return key;
    }
};

/// Per-slot reward: delivered counts a packet accepted by the receiver in
/// this slot, transmitted counts a channel use.
struct RewardIncrement {
    int delivered = 0;
    int transmitted = 0;
};

/// step() result with the instrumentation used by trajectory audits.
struct StepTrace {
    ProtocolState state;
    RewardIncrement reward;
    int tx_index = -1;        // window position transmitted this slot, -1 if idle
    bool admitted = false;    // transmission was a fresh admission from the buffer
    bool accepted_now = false;
    int departed_before = 0;  // head entries sliding out in the feedback phase
    int departed_after = 0;   // head entries sliding out after transmission
};

inline ProtocolState initial_state(const ProtocolConfig& cfg) {
    cfg.validate();
    return {};
}

namespace detail {

inline void check_state(const ProtocolState& phi, const ProtocolConfig& cfg) {
    if (phi.buffer < 0 || phi.buffer > cfg.b_max)
        throw internal_invariant_error("ProtocolState: buffer out of range");
    if (static_cast<int>(phi.window.size()) > cfg.window)
        throw internal_invariant_error("ProtocolState: window occupancy exceeds W");
    for (std::size_t i = 0; i < phi.window.size(); ++i) {
        const auto& e = phi.window[i];
        if (e.status == entry_status::awaiting) {
            if (cfg.arch == architecture::conventional)
                throw internal_invariant_error(
                    "ProtocolState: awaiting entry under conventional architecture");
            if (e.age >= cfg.delta)
                throw internal_invariant_error("ProtocolState: awaiting age reached delta");
            for (std::size_t j = 0; j < i; ++j)
                if (phi.window[j].status == entry_status::awaiting &&
                    phi.window[j].age == e.age)
                    throw internal_invariant_error("ProtocolState: duplicate awaiting age");
        } else if (e.age != 0 || e.fb_ok) {
            throw internal_invariant_error("ProtocolState: non-awaiting entry carries age/fb");
        }
    }
}

inline int slide_acked_head(std::vector<WindowEntry>& w) {
    std::size_t n = 0;
    while (n < w.size() && w[n].status == entry_status::acked) ++n;
    if (n > 0) w.erase(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n));
    return static_cast<int>(n);
}

/// Phase 1: age the in-flight feedback and resolve the entry whose delay
/// expires this slot. A negative acknowledgment rewinds the failed entry
/// (go-back-n also rewinds everything behind it); the window then slides
/// over any acknowledged head so this slot's transmission sees the room.
inline int resolve_feedback_inplace(ProtocolState& phi, const ProtocolConfig& cfg) {
    if (cfg.arch == architecture::conventional) return 0;
    int resolve_idx = -1;
    for (std::size_t i = 0; i < phi.window.size(); ++i) {
        auto& e = phi.window[i];
        if (e.status != entry_status::awaiting) continue;
        ++e.age;
        if (e.age >= cfg.delta) resolve_idx = static_cast<int>(i);
    }
    if (resolve_idx >= 0) {
        auto& e = phi.window[static_cast<std::size_t>(resolve_idx)];
        if (e.fb_ok) {
            e = {entry_status::acked, 0, false, e.accepted};
        } else if (cfg.protocol == arq_protocol::go_back_n) {
            for (std::size_t j = static_cast<std::size_t>(resolve_idx); j < phi.window.size(); ++j)
                phi.window[j] = {entry_status::unsent, 0, false, phi.window[j].accepted};
        } else {
            e = {entry_status::unsent, 0, false, e.accepted};
        }
    }
    return slide_acked_head(phi.window);
}

}  // namespace detail

/// State after the feedback phase of the current slot; what the
/// transmission phase operates on.
inline ProtocolState resolve_feedback(const ProtocolState& phi, const ProtocolConfig& cfg) {
    ProtocolState next = phi;
    detail::resolve_feedback_inplace(next, cfg);
    return next;
}

/// Whether the terminal transmits in the current slot: after the feedback
/// phase there is either a pending (unsent) packet or room and supply for
/// a fresh one. Decides whether the slot consumes a decode outcome.
inline bool transmits(const ProtocolState& phi, const ProtocolConfig& cfg) {
    detail::check_state(phi, cfg);
    ProtocolState resolved = resolve_feedback(phi, cfg);
    for (const auto& e : resolved.window)
        if (e.status == entry_status::unsent) return true;
    return static_cast<int>(resolved.window.size()) < cfg.window && resolved.buffer > 0;
}

/// One slot of the protocol automaton. Phases, in fixed order:
///   1. feedback resolution (see resolve_feedback),
///   2. transmission: retransmit the oldest unsent entry, else admit a new
///      packet from the buffer if the window has room; decide receiver
///      acceptance and record the feedback the transmission will produce,
///   3. slide over acknowledged head entries, then apply the arrival.
/// The decode outcome is only consulted if the slot transmits. Acceptance:
/// selective repeat (and stop-and-wait) accept any first successful
/// decode; go-back-n additionally requires every entry ahead to have been
/// accepted already (out-of-order packets are discarded by the receiver).
inline StepTrace step_traced(const ProtocolState& phi, const ProtocolConfig& cfg,
                             DecodeOutcome outcome, bool arrival) {
    detail::check_state(phi, cfg);
    StepTrace tr;
    tr.state = phi;
    auto& w = tr.state.window;
    auto& buffer = tr.state.buffer;

    tr.departed_before = detail::resolve_feedback_inplace(tr.state, cfg);

    int tx = -1;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i].status == entry_status::unsent) {
            tx = static_cast<int>(i);
            break;
        }
    }
    if (tx < 0 && static_cast<int>(w.size()) < cfg.window && buffer > 0) {
        --buffer;
        w.push_back({entry_status::unsent, 0, false, false});
        tx = static_cast<int>(w.size()) - 1;
        tr.admitted = true;
    }

    if (tx >= 0) {
        tr.tx_index = tx;
        tr.reward.transmitted = 1;
        auto& e = w[static_cast<std::size_t>(tx)];

        bool arch_ok = false;
        switch (cfg.arch) {
            case architecture::conventional: arch_ok = outcome.bs_ok; break;
            case architecture::cran: arch_ok = outcome.cu_ok; break;
            case architecture::hybrid: arch_ok = outcome.bs_ok || outcome.cu_ok; break;
        }
        bool in_order = true;
        if (cfg.protocol == arq_protocol::go_back_n) {
            for (int j = 0; j < tx; ++j)
                if (!w[static_cast<std::size_t>(j)].accepted) {
                    in_order = false;
                    break;
                }
        }
        if (arch_ok && !e.accepted && in_order) {
            e.accepted = true;
            tr.accepted_now = true;
            tr.reward.delivered = 1;
        }

        if (cfg.arch == architecture::conventional) {
            e.status = outcome.bs_ok ? entry_status::acked : entry_status::unsent;
        } else if (cfg.arch == architecture::hybrid && outcome.bs_ok) {
            e.status = entry_status::acked;
        } else {
            e = {entry_status::awaiting, 0, outcome.cu_ok, e.accepted};
        }
    }

    tr.departed_after = detail::slide_acked_head(w);
    if (arrival && buffer < cfg.b_max) ++buffer;
    return tr;
}

inline std::pair<ProtocolState, RewardIncrement> step(const ProtocolState& phi,
                                                      const ProtocolConfig& cfg,
                                                      DecodeOutcome outcome, bool arrival) {
    StepTrace tr = step_traced(phi, cfg, outcome, arrival);
    return {std::move(tr.state), tr.reward};
}

}  // namespace arqcran
