#pragma once

#include "arqcran/decode.hpp"
#include "arqcran/errors.hpp"
#include "arqcran/fading.hpp"
#include "arqcran/interference.hpp"
#include "arqcran/protocol.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace arqcran {

/// Product state (channel bin, interference bit, protocol state), the
/// protocol part referenced through a deduplicated table.
struct SystemState {
    int h_idx = 1;
    int psi = 0;
    std::int32_t phi_id = 0;
};

/// Reachable product chain with a sparse row-stochastic kernel and the
/// deterministic per-state rewards.
struct Chain {
    int q = 1;
    std::vector<SystemState> states;          // BFS order from the initial state
    std::vector<ProtocolState> phi_table;     // deduplicated protocol states
    std::vector<std::size_t> row_ptr;         // CSR kernel
    std::vector<std::int32_t> cols;
    std::vector<double> probs;
    std::vector<double> c_thr;                // packets delivered in the state
    std::vector<double> c_tx;                 // 1 if the state transmits
    std::vector<std::int32_t> recurrent;      // bottom SCC, ascending state index
    std::size_t scc_count = 0;

    std::size_t size() const { return states.size(); }

    const ProtocolState& phi(std::size_t s) const {
        return phi_table[static_cast<std::size_t>(states[s].phi_id)];
    }

    std::string state_key(std::size_t s) const {
        std::string key = phi(s).canonical_key();
        key.push_back(static_cast<char>(states[s].h_idx));
        key.push_back(static_cast<char>(states[s].psi));
        return key;
    }
};

struct BuildOptions {
    edge_policy policy = edge_policy::conservative;
    std::size_t state_cap = 1'000'000;
};

struct StationaryResult {
    std::vector<double> pi;      // zero off the recurrent class
    double residual = 0.0;       // ||pi P - pi||_1 over the full kernel
    std::size_t iterations = 0;  // 0 when the direct solve was used
    /// L1 distance between the direct and power-iteration solutions when
    /// both were computed (cross-check mode on a small recurrent class).
    std::optional<double> agreement;
};

struct Metrics {
    double throughput = 0.0;
    double tx_fraction = 0.0;
    std::optional<double> efficiency;
};

namespace detail {

/// Iterative Tarjan SCC over the CSR graph. Returns the component id per
/// node; components are numbered in reverse topological order of discovery.
inline std::size_t tarjan_scc(const std::vector<std::size_t>& row_ptr,
                              const std::vector<std::int32_t>& cols,
                              std::vector<std::int32_t>& comp) {
    const std::size_t n = row_ptr.size() - 1;
    comp.assign(n, -1);
    std::vector<std::int32_t> index(n, -1), lowlink(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::int32_t> stack;
    std::vector<std::pair<std::int32_t, std::size_t>> call;  // node, next edge offset
    std::int32_t next_index = 0;
    std::size_t count = 0;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        call.emplace_back(static_cast<std::int32_t>(root), row_ptr[root]);
        while (!call.empty()) {
            auto& [v, edge] = call.back();
            if (index[static_cast<std::size_t>(v)] < 0) {
                index[static_cast<std::size_t>(v)] = lowlink[static_cast<std::size_t>(v)] =
                    next_index++;
                stack.push_back(v);
                on_stack[static_cast<std::size_t>(v)] = true;
            }
            bool descended = false;
            while (edge < row_ptr[static_cast<std::size_t>(v) + 1]) {
                const std::int32_t to = cols[edge];
                ++edge;
                if (index[static_cast<std::size_t>(to)] < 0) {
                    call.emplace_back(to, row_ptr[static_cast<std::size_t>(to)]);
                    descended = true;
                    break;
                }
                if (on_stack[static_cast<std::size_t>(to)])
                    lowlink[static_cast<std::size_t>(v)] = std::min(
                        lowlink[static_cast<std::size_t>(v)], index[static_cast<std::size_t>(to)]);
            }
            if (descended) continue;
            if (lowlink[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)]) {
                std::int32_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = false;
                    comp[static_cast<std::size_t>(w)] = static_cast<std::int32_t>(count);
                } while (w != v);
                ++count;
            }
            call.pop_back();
            if (!call.empty()) {
                const std::int32_t parent = call.back().first;
                lowlink[static_cast<std::size_t>(parent)] =
                    std::min(lowlink[static_cast<std::size_t>(parent)],
                             lowlink[static_cast<std::size_t>(v)]);
            }
        }
    }
    return count;
}

}  // namespace detail

/// Assembles the product chain by breadth-first reachability from
/// (h = 1, psi = 0, empty protocol state). Successor probabilities factor
/// as p_channel * p_interference * p_arrival; the protocol successor is a
/// deterministic function of the state's decode outcome and the arrival
/// branch. Rewards attach to the source state and are checked to be
/// identical across arrival branches. The unique bottom strongly connected
/// component is computed; more than one closed class is a model error.
inline Chain build_chain(const ChannelModel& cm, const InterferenceModel& im,
                         const LinkBudget& lb, const ProtocolConfig& cfg,
                         const BuildOptions& opts = {}) {
    cfg.validate();
    const auto [g0, g1] = gain_thresholds(lb);
    const auto [h0, h1] = threshold_indices(cm, g0, g1, opts.policy);
    const int q = cm.q;
    const double alpha = cfg.alpha;
    const auto psi_kernel = im.kernel();

    Chain chain;
    chain.q = q;

    // decode outcome per (h, psi)
    std::vector<DecodeOutcome> outcome_table(static_cast<std::size_t>(2 * q));
    for (int h = 1; h <= q; ++h)
        for (int psi = 0; psi < 2; ++psi)
            outcome_table[static_cast<std::size_t>((h - 1) * 2 + psi)] = decode(h, psi, h0, h1);

    // protocol-state table and memoized transitions keyed by
    // (phi_id, outcome class FF/FT/TT, arrival)
    std::unordered_map<std::string, std::int32_t> phi_ids;
    auto intern_phi = [&](const ProtocolState& phi) {
        const std::string key = phi.canonical_key();
        auto it = phi_ids.find(key);
        if (it != phi_ids.end()) return it->second;
        const auto id = static_cast<std::int32_t>(chain.phi_table.size());
        chain.phi_table.push_back(phi);
        phi_ids.emplace(key, id);
        return id;
    };
    struct PhiStep {
        std::int32_t next = -1;
        std::int8_t delivered = 0;
        std::int8_t transmitted = 0;
    };
    std::vector<std::array<PhiStep, 6>> phi_memo;
    auto outcome_class = [](DecodeOutcome o) {
        return (o.bs_ok ? 2 : 0) + (o.cu_ok ? 1 : 0);  // 0=FF, 1=FT, 3=TT (2 unreachable)
    };
    auto phi_step = [&](std::int32_t phi_id, DecodeOutcome out, bool arrival) -> PhiStep {
        const int cls = outcome_class(out) == 3 ? 2 : outcome_class(out);  // compact to 0..2
        const std::size_t slot = static_cast<std::size_t>(cls) * 2 + (arrival ? 1 : 0);
        if (static_cast<std::size_t>(phi_id) >= phi_memo.size())
            phi_memo.resize(chain.phi_table.size());
        PhiStep& cached = phi_memo[static_cast<std::size_t>(phi_id)][slot];
        if (cached.next >= 0) return cached;
        auto [next, reward] =
            step(chain.phi_table[static_cast<std::size_t>(phi_id)], cfg, out, arrival);
        PhiStep r;
        r.next = intern_phi(next);
        r.delivered = static_cast<std::int8_t>(reward.delivered);
        r.transmitted = static_cast<std::int8_t>(reward.transmitted);
        if (static_cast<std::size_t>(phi_id) >= phi_memo.size())
            phi_memo.resize(chain.phi_table.size());
        phi_memo[static_cast<std::size_t>(phi_id)][slot] = r;
        return r;
    };

    auto pack = [q](int h, int psi, std::int32_t phi_id) {
        return (static_cast<std::uint64_t>(phi_id) * 2 + static_cast<std::uint64_t>(psi)) *
                   static_cast<std::uint64_t>(q) +
               static_cast<std::uint64_t>(h - 1);
    };
    std::unordered_map<std::uint64_t, std::int32_t> state_ids;
    auto intern_state = [&](int h, int psi, std::int32_t phi_id) {
        const std::uint64_t key = pack(h, psi, phi_id);
        auto it = state_ids.find(key);
        if (it != state_ids.end()) return std::make_pair(it->second, false);
        if (chain.states.size() >= opts.state_cap)
            throw capacity_error("build_chain: state cap exceeded", opts.state_cap,
                                 chain.states.size() + 1);
        const auto id = static_cast<std::int32_t>(chain.states.size());
        chain.states.push_back({h, psi, phi_id});
        state_ids.emplace(key, id);
        return std::make_pair(id, true);
    };

    intern_state(1, 0, intern_phi(initial_state(cfg)));
    chain.row_ptr.push_back(0);

    for (std::size_t s = 0; s < chain.states.size(); ++s) {
        const SystemState cur = chain.states[s];
        const DecodeOutcome out =
            outcome_table[static_cast<std::size_t>((cur.h_idx - 1) * 2 + cur.psi)];
        const PhiStep s0 = phi_step(cur.phi_id, out, false);
        const PhiStep s1 = phi_step(cur.phi_id, out, true);
        if (s0.delivered != s1.delivered || s0.transmitted != s1.transmitted)
            throw internal_invariant_error(
                "build_chain: rewards differ across arrival branches");
        chain.c_thr.push_back(s0.delivered);
        chain.c_tx.push_back(s0.transmitted);

        const auto& h_row = cm.transition[static_cast<std::size_t>(cur.h_idx - 1)];
        auto emit_branch = [&](std::int32_t phi_next, double weight) {
            if (weight == 0.0) return;
            for (int h2 = 1; h2 <= q; ++h2) {
                const double ph = h_row[static_cast<std::size_t>(h2 - 1)];
                if (ph == 0.0) continue;
                for (int psi2 = 0; psi2 < 2; ++psi2) {
                    const double pp = psi_kernel[static_cast<std::size_t>(cur.psi)]
                                                [static_cast<std::size_t>(psi2)];
                    if (pp == 0.0) continue;
                    const auto [target, fresh] = intern_state(h2, psi2, phi_next);
                    (void)fresh;
                    chain.cols.push_back(target);
                    chain.probs.push_back(weight * ph * pp);
                }
            }
        };
        if (s0.next == s1.next) {
            emit_branch(s0.next, 1.0);
        } else {
            emit_branch(s0.next, 1.0 - alpha);
            emit_branch(s1.next, alpha);
        }
        chain.row_ptr.push_back(chain.cols.size());
    }

    std::vector<std::int32_t> comp;
    chain.scc_count = detail::tarjan_scc(chain.row_ptr, chain.cols, comp);
    std::vector<bool> has_exit(chain.scc_count, false);
    for (std::size_t s = 0; s < chain.size(); ++s)
        for (std::size_t e = chain.row_ptr[s]; e < chain.row_ptr[s + 1]; ++e)
            if (comp[static_cast<std::size_t>(chain.cols[e])] != comp[s])
                has_exit[static_cast<std::size_t>(comp[s])] = true;
    std::int32_t bottom = -1;
    for (std::size_t c = 0; c < chain.scc_count; ++c) {
        if (has_exit[c]) continue;
        if (bottom >= 0)
            throw model_error(
                "build_chain: multiple closed communicating classes; stationary metrics "
                "are undefined for this configuration");
        bottom = static_cast<std::int32_t>(c);
    }
    for (std::size_t s = 0; s < chain.size(); ++s)
        if (comp[s] == bottom) chain.recurrent.push_back(static_cast<std::int32_t>(s));
    return chain;
}

namespace detail {

struct SubKernel {
    std::vector<std::size_t> row_ptr;
    std::vector<std::int32_t> cols;  // local indices
    std::vector<double> probs;
    std::vector<std::int32_t> global;  // local -> global
};

inline SubKernel restrict_to_recurrent(const Chain& chain) {
    SubKernel sub;
    sub.global = chain.recurrent;
    std::unordered_map<std::int32_t, std::int32_t> local;
    local.reserve(sub.global.size());
    for (std::size_t i = 0; i < sub.global.size(); ++i)
        local.emplace(sub.global[i], static_cast<std::int32_t>(i));
    sub.row_ptr.push_back(0);
    for (std::int32_t g : sub.global) {
        for (std::size_t e = chain.row_ptr[static_cast<std::size_t>(g)];
             e < chain.row_ptr[static_cast<std::size_t>(g) + 1]; ++e) {
            // the class is closed, every target is recurrent
            sub.cols.push_back(local.at(chain.cols[e]));
            sub.probs.push_back(chain.probs[e]);
        }
        sub.row_ptr.push_back(sub.cols.size());
    }
    return sub;
}

inline std::vector<double> power_iteration(const SubKernel& sub, double tol,
                                           std::size_t max_iters, std::size_t& iters_out) {
    const std::size_t n = sub.global.size();
    std::vector<double> x(n, 1.0 / static_cast<double>(n)), y(n);
    // A 1e-3 lazy-walk mixing factor keeps the iteration convergent on
    // periodic kernels (deterministic protocol cycles produce them); the
    // stationary vector is unchanged and the residual is rescaled back.
    const double lam = 1e-3;
    const double target = tol * (1.0 - lam) * 0.5;
    std::size_t it = 0;
    for (; it < max_iters; ++it) {
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            const double xr = x[r] * (1.0 - lam);
            if (xr == 0.0) continue;
            for (std::size_t e = sub.row_ptr[r]; e < sub.row_ptr[r + 1]; ++e)
                y[static_cast<std::size_t>(sub.cols[e])] += xr * sub.probs[e];
        }
        double diff = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] += lam * x[i];
            diff += std::abs(y[i] - x[i]);
            sum += y[i];
        }
        for (double& v : y) v /= sum;
        x.swap(y);
        if (diff <= target) {
            ++it;
            break;
        }
    }
    iters_out = it;
    if (it >= max_iters) {
        double res = 0.0;
        for (std::size_t r = 0; r < n; ++r) y[r] = -x[r];
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t e = sub.row_ptr[r]; e < sub.row_ptr[r + 1]; ++e)
                y[static_cast<std::size_t>(sub.cols[e])] += x[r] * sub.probs[e];
        for (double v : y) res += std::abs(v);
        throw convergence_error("stationary_distribution: power iteration did not reach " +
                                    std::to_string(tol) + " within " +
                                    std::to_string(max_iters) + " iterations",
                                res, it);
    }
    return x;
}

inline std::vector<double> direct_solve(const SubKernel& sub) {
    const auto n = static_cast<Eigen::Index>(sub.global.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t r = 0; r < sub.global.size(); ++r)
        for (std::size_t e = sub.row_ptr[r]; e < sub.row_ptr[r + 1]; ++e)
            a(sub.cols[e], static_cast<Eigen::Index>(r)) += sub.probs[e];  // P^T
    a -= Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();  // replace one balance equation by sum(pi) = 1
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd x = a.partialPivLu().solve(b);
    std::vector<double> pi(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        pi[static_cast<std::size_t>(i)] = std::max(x(i), 0.0);
        sum += pi[static_cast<std::size_t>(i)];
    }
    for (double& v : pi) v /= sum;
    return pi;
}

}  // namespace detail

/// Stationary distribution supported on the bottom SCC. Recurrent classes
/// of at most 2000 states are solved directly; larger ones by power
/// iteration. With check_agreement the other method runs as well and the
/// L1 distance between the two solutions is reported.
inline StationaryResult stationary_distribution(const Chain& chain, double tol = 1e-12,
                                                std::size_t max_iters = 500'000,
                                                bool check_agreement = false) {
    if (chain.recurrent.empty())
        throw model_error("stationary_distribution: chain has no recurrent class");
    const detail::SubKernel sub = detail::restrict_to_recurrent(chain);
    const std::size_t n = sub.global.size();

    StationaryResult result;
    std::vector<double> pi_local;
    if (n <= 2000) {
        pi_local = detail::direct_solve(sub);
        if (check_agreement) {
            std::size_t iters = 0;
            const std::vector<double> pi_pow = detail::power_iteration(sub, tol, max_iters, iters);
            double dist = 0.0;
            for (std::size_t i = 0; i < n; ++i) dist += std::abs(pi_local[i] - pi_pow[i]);
            result.agreement = dist;
            result.iterations = iters;
        }
    } else {
        pi_local = detail::power_iteration(sub, tol, max_iters, result.iterations);
    }

    result.pi.assign(chain.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        result.pi[static_cast<std::size_t>(sub.global[i])] = pi_local[i];

    std::vector<double> flow(chain.size(), 0.0);
    for (std::size_t s = 0; s < chain.size(); ++s) {
        const double ps = result.pi[s];
        if (ps == 0.0) continue;
        for (std::size_t e = chain.row_ptr[s]; e < chain.row_ptr[s + 1]; ++e)
            flow[static_cast<std::size_t>(chain.cols[e])] += ps * chain.probs[e];
    }
    double residual = 0.0;
    for (std::size_t s = 0; s < chain.size(); ++s) residual += std::abs(flow[s] - result.pi[s]);
    result.residual = residual;
    if (residual > tol)
        throw convergence_error("stationary_distribution: residual above tolerance", residual,
                                result.iterations);
    return result;
}

/// Long-run throughput and efficiency as stationary-weighted rewards.
inline Metrics metrics(const Chain& chain, const StationaryResult& st) {
    Metrics m;
    for (std::size_t s = 0; s < chain.size(); ++s) {
        m.throughput += st.pi[s] * chain.c_thr[s];
        m.tx_fraction += st.pi[s] * chain.c_tx[s];
    }
    if (m.tx_fraction > 0.0) m.efficiency = m.throughput / m.tx_fraction;
    return m;
}

/// Text dump for differential testing: one line per state with its index,
/// canonical key (hex), rewards, and sparse kernel row.
inline void write_chain_dump(const Chain& chain, std::ostream& os) {
    os << "states " << chain.size() << " recurrent " << chain.recurrent.size() << " sccs "
       << chain.scc_count << "\n";
    char buf[64];
    for (std::size_t s = 0; s < chain.size(); ++s) {
        os << s << " ";
        for (unsigned char c : chain.state_key(s)) {
            std::snprintf(buf, sizeof buf, "%02x", c);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, " %g %g :", chain.c_thr[s], chain.c_tx[s]);
        os << buf;
        for (std::size_t e = chain.row_ptr[s]; e < chain.row_ptr[s + 1]; ++e) {
            std::snprintf(buf, sizeof buf, " %d:%.17g", chain.cols[e], chain.probs[e]);
            os << buf;
        }
        os << "\n";
    }
}

}  // namespace arqcran
