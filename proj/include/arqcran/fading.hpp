#pragma once

#include "arqcran/errors.hpp"
#include "arqcran/math.hpp"
#include "arqcran/rng.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace arqcran {

/// Quantized correlated Rayleigh fading channel: the unit-mean exponential
/// power gain is partitioned into q equal-probability bins and the
/// slot-to-slot dynamics are a q-state Markov chain.
struct ChannelModel {
    int q = 1;
    double rho = 0.0;
    /// q+1 bin boundaries on the power gain, edges[0] = 0, edges[q] = inf.
    std::vector<double> edges;
    /// Row-stochastic q x q transition matrix, row-major.
    std::vector<std::vector<double>> transition;
};

/// Equal-probability bin edges of the unit-mean exponential distribution:
/// edges[i] = -ln(1 - i/q), so each bin carries mass exactly 1/q.
inline std::vector<double> exp_bin_edges(int q) {
    if (q < 1) throw invalid_parameter_error("exp_bin_edges: q must be >= 1");
    std::vector<double> edges(static_cast<std::size_t>(q) + 1);
    for (int i = 0; i < q; ++i)
        edges[static_cast<std::size_t>(i)] = -std::log1p(-static_cast<double>(i) / q);
    edges[static_cast<std::size_t>(q)] = std::numeric_limits<double>::infinity();
    return edges;
}

/// Joint density of the power gains of two unit-power complex Gaussians
/// whose powers have correlation rho:
///   f(x,y) = exp(-(x+y)/(1-rho)) I0(2 sqrt(rho x y)/(1-rho)) / (1-rho).
/// Evaluated in exponentially scaled form; the combined exponent is
/// always <= 0, so the value never overflows for any rho < 1.
inline double bivariate_exp_density(double x, double y, double rho) {
    if (x < 0.0 || y < 0.0)
        throw invalid_parameter_error("bivariate_exp_density: gains must be nonnegative");
    if (rho < 0.0 || rho >= 1.0)
        throw invalid_parameter_error("bivariate_exp_density: rho must be in [0,1)");
    const double c = 1.0 - rho;
    if (rho == 0.0) return std::exp(-(x + y));
    const double a = 2.0 * std::sqrt(rho * x * y) / c;
    return std::exp(a - (x + y) / c) * math::bessel_i0_scaled(a) / c;
}

/// One pair of successive power gains: squared magnitudes of two complex
/// Gaussians with complex correlation sqrt(rho), giving power correlation
/// rho and unit-mean exponential marginals. Oracle for build_fsmc.
inline std::pair<double, double> sample_gain_pair(double rho, xoshiro256pp& rng) {
    if (rho < 0.0 || rho >= 1.0)
        throw invalid_parameter_error("sample_gain_pair: rho must be in [0,1)");
    const double inv_sqrt2 = 0.70710678118654752440;
    const std::complex<double> z0(rng.normal() * inv_sqrt2, rng.normal() * inv_sqrt2);
    const std::complex<double> w(rng.normal() * inv_sqrt2, rng.normal() * inv_sqrt2);
    const std::complex<double> z1 = std::sqrt(rho) * z0 + std::sqrt(1.0 - rho) * w;
    return {std::norm(z0), std::norm(z1)};
}

/// Builds the fading sub-chain. Each transition probability is
///   p(h'|h) = q * integral of the bivariate density over bin h x bin h',
/// computed by adaptive quadrature to absolute accuracy tol per entry.
/// Infinite bin limits are truncated where the exponential tail mass drops
/// below tol/10; the remainder is absorbed by the row renormalization,
/// whose correction is checked to stay within q*tol.
inline ChannelModel build_fsmc(int q, double rho, double tol = 1e-8) {
    if (q < 1) throw invalid_parameter_error("build_fsmc: q must be >= 1");
    if (rho < 0.0 || rho >= 1.0)
        throw invalid_parameter_error("build_fsmc: rho must be in [0,1)");
    if (!(tol > 0.0)) throw invalid_parameter_error("build_fsmc: tol must be positive");

    ChannelModel cm;
    cm.q = q;
    cm.rho = rho;
    cm.edges = exp_bin_edges(q);
    cm.transition.assign(static_cast<std::size_t>(q),
                         std::vector<double>(static_cast<std::size_t>(q), 0.0));
    if (q == 1) {
        cm.transition[0][0] = 1.0;
        return cm;
    }

    const double cutoff = std::log(10.0 / tol);
    const double entry_budget = tol / (2.0 * q);  // absolute, before the q factor
    auto density = [rho](double x, double y) { return bivariate_exp_density(x, y, rho); };

    for (int i = 0; i < q; ++i) {
        const double ax = cm.edges[static_cast<std::size_t>(i)];
        const double bx = std::min(cm.edges[static_cast<std::size_t>(i) + 1], cutoff);
        for (int j = 0; j < q; ++j) {
            const double ay = cm.edges[static_cast<std::size_t>(j)];
            const double by = std::min(cm.edges[static_cast<std::size_t>(j) + 1], cutoff);
            const auto r = math::integrate_box(density, ax, bx, ay, by);
            if (!(r.error <= entry_budget) || !std::isfinite(r.value))
                throw numeric_failure_error(
                    "build_fsmc: quadrature failed for bin pair (" + std::to_string(i + 1) +
                        "," + std::to_string(j + 1) + "), error estimate " +
                        std::to_string(r.error),
                    i + 1, j + 1);
            cm.transition[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                q * r.value;
        }
    }

    for (int i = 0; i < q; ++i) {
        auto& row = cm.transition[static_cast<std::size_t>(i)];
        double sum = 0.0;
        for (double p : row) sum += p;
        if (std::abs(sum - 1.0) > q * tol)
            throw numeric_failure_error(
                "build_fsmc: row " + std::to_string(i + 1) +
                    " renormalization correction exceeds budget: |sum-1| = " +
                    std::to_string(std::abs(sum - 1.0)),
                i + 1, -1);
        for (double& p : row) p /= sum;
    }
    return cm;
}

}  // namespace arqcran
