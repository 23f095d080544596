#pragma once

#include "arqcran/decode.hpp"
#include "arqcran/errors.hpp"
#include "arqcran/fading.hpp"
#include "arqcran/interference.hpp"
#include "arqcran/protocol.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

namespace arqcran {

/// One experiment point. dB quantities stay in dB here and are converted
/// to linear scale exactly once, in the accessors below.
struct ExperimentConfig {
    arq_protocol protocol = arq_protocol::stop_and_wait;
    architecture arch = architecture::cran;
    int q = 8;
    double rho = 0.3;
    double p_db = 30.0;
    double sigma2 = 1.0;
    double gamma_db = 10.0;
    double sir_db = 10.0;
    double e_int = 0.6;
    double b_int = 6.0;
    double alpha = 0.5;
    int b_max = 1;
    int delta = 5;
    int window = 5;            // defaults to delta (1 for stop-and-wait)
    bool window_explicit = false;
    edge_policy policy = edge_policy::conservative;
    std::uint64_t seed = 1;
    std::uint64_t mc_slots = 1'000'000;
    std::uint64_t mc_warmup = 10'000;

    std::vector<std::string> warnings;

    double p_tx() const { return std::pow(10.0, p_db / 10.0); }
    double gamma() const { return std::pow(10.0, gamma_db / 10.0); }
    double i_power() const { return p_tx() / std::pow(10.0, sir_db / 10.0); }

    LinkBudget link_budget() const {
        LinkBudget lb{p_tx(), sigma2, gamma(), i_power(), 0.0};
        lb.validate();
        return lb;
    }

    InterferenceModel interference() const { return from_rate_burstiness(e_int, b_int, i_power()); }

    ProtocolConfig protocol_config() const {
        ProtocolConfig cfg{protocol, arch, delta, window, b_max, alpha};
        cfg.validate();
        return cfg;
    }

    ChannelModel channel(double tol = 1e-8) const { return build_fsmc(q, rho, tol); }
};

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline arq_protocol parse_protocol(const std::string& s) {
    const std::string v = lower(s);
    if (v == "sw" || v == "stop-and-wait") return arq_protocol::stop_and_wait;
    if (v == "gbn" || v == "go-back-n") return arq_protocol::go_back_n;
    if (v == "sr" || v == "selective-repeat") return arq_protocol::selective_repeat;
    throw config_error("unknown protocol '" + s + "' (expected sw, gbn or sr)");
}

inline architecture parse_architecture(const std::string& s) {
    const std::string v = lower(s);
    if (v == "conventional") return architecture::conventional;
    if (v == "cran" || v == "c-ran") return architecture::cran;
    if (v == "hybrid") return architecture::hybrid;
    throw config_error("unknown architecture '" + s +
                       "' (expected conventional, cran or hybrid)");
}

inline edge_policy parse_policy(const std::string& s) {
    const std::string v = lower(s);
    if (v == "conservative") return edge_policy::conservative;
    if (v == "optimistic") return edge_policy::optimistic;
    throw config_error("unknown threshold_edge_policy '" + s +
                       "' (expected conservative or optimistic)");
}

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "protocol", "architecture", "q",     "rho",   "p_db",  "sigma2",
        "gamma_db", "sir_db",       "e_int", "b_int", "alpha", "b_max",
        "delta",    "window",       "threshold_edge_policy",   "seed",
        "mc_slots", "mc_warmup"};
    return keys;
}

inline void apply_key(ExperimentConfig& cfg, const std::string& key, const nlohmann::json& v) {
    auto num = [&](const char* name) {
        if (!v.is_number())
            throw config_error(std::string("field '") + name + "' must be a number");
        return v.get<double>();
    };
    auto integer = [&](const char* name) {
        const double d = num(name);
        if (d != std::floor(d))
            throw config_error(std::string("field '") + name + "' must be an integer");
        return static_cast<long long>(d);
    };
    auto str = [&](const char* name) {
        if (!v.is_string())
            throw config_error(std::string("field '") + name + "' must be a string");
        return v.get<std::string>();
    };

    if (key == "protocol") cfg.protocol = parse_protocol(str("protocol"));
    else if (key == "architecture") cfg.arch = parse_architecture(str("architecture"));
    else if (key == "q") cfg.q = static_cast<int>(integer("q"));
    else if (key == "rho") cfg.rho = num("rho");
    else if (key == "p_db") cfg.p_db = num("p_db");
    else if (key == "sigma2") cfg.sigma2 = num("sigma2");
    else if (key == "gamma_db") cfg.gamma_db = num("gamma_db");
    else if (key == "sir_db") cfg.sir_db = num("sir_db");
    else if (key == "e_int") cfg.e_int = num("e_int");
    else if (key == "b_int") cfg.b_int = num("b_int");
    else if (key == "alpha") cfg.alpha = num("alpha");
    else if (key == "b_max") cfg.b_max = static_cast<int>(integer("b_max"));
    else if (key == "delta") cfg.delta = static_cast<int>(integer("delta"));
    else if (key == "window") {
        cfg.window = static_cast<int>(integer("window"));
        cfg.window_explicit = true;
    } else if (key == "threshold_edge_policy") cfg.policy = parse_policy(str(key.c_str()));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(integer("seed"));
    else if (key == "mc_slots") cfg.mc_slots = static_cast<std::uint64_t>(integer("mc_slots"));
    else if (key == "mc_warmup") cfg.mc_warmup = static_cast<std::uint64_t>(integer("mc_warmup"));
    else throw config_error("unknown configuration field '" + key + "'");
}

}  // namespace detail

/// Validates and finalizes a config whose raw fields are already set:
/// applies the window default (delta, or 1 for stop-and-wait), runs the
/// module-level feasibility checks, and collects warnings.
inline void finalize_config(ExperimentConfig& cfg) {
    if (!cfg.window_explicit)
        cfg.window = cfg.protocol == arq_protocol::stop_and_wait ? 1 : cfg.delta;
    if (cfg.q < 1) throw config_error("q must be >= 1");
    if (cfg.rho < 0.0 || cfg.rho >= 1.0) throw config_error("rho must be in [0,1)");
    if (!(cfg.sigma2 > 0.0)) throw config_error("sigma2 must be > 0");
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw config_error("alpha must be in [0,1]");
    if (cfg.b_max < 1) throw config_error("b_max must be >= 1");
    if (cfg.delta < 1)
        throw config_error(
            "delta must be >= 1: feedback from the central unit arrives at least one "
            "slot after the transmission");
    if (cfg.mc_warmup < 1) throw config_error("mc_warmup must be >= 1");
    if (cfg.arch == architecture::conventional && cfg.delta != 1)
        cfg.warnings.push_back(
            "delta is ignored under the conventional architecture (feedback is "
            "resolved in the transmission slot)");
    try {
        cfg.protocol_config();
        cfg.link_budget();
        cfg.interference();
    } catch (const config_error&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
    }
}

/// Parses a JSON configuration document. Only `protocol` and
/// `architecture` are required; everything else falls back to the standard
/// evaluation defaults. Unknown fields are rejected by name. Environment
/// variables ARQCRAN_<FIELD> (upper-cased field name) override document
/// values.
inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("configuration is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw config_error("configuration document must be a JSON object");

    ExperimentConfig cfg;
    bool have_protocol = false, have_arch = false;
    for (const auto& [key, value] : doc.items()) {
        detail::apply_key(cfg, key, value);
        if (key == "protocol") have_protocol = true;
        if (key == "architecture") have_arch = true;
    }
    if (!have_protocol) throw config_error("missing required field 'protocol'");
    if (!have_arch) throw config_error("missing required field 'architecture'");

    for (const std::string& key : detail::known_keys()) {
        std::string env_name = "ARQCRAN_" + key;
        std::transform(env_name.begin(), env_name.end(), env_name.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        if (const char* env = std::getenv(env_name.c_str())) {
            nlohmann::json v = nlohmann::json::parse(env, nullptr, false);
            if (v.is_discarded()) v = std::string(env);  // bare strings allowed
            detail::apply_key(cfg, key, v);
        }
    }

    finalize_config(cfg);
    return cfg;
}

}  // namespace arqcran
