#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <utility>

namespace arqcran::math {

/// Exponentially scaled modified Bessel function e^{-z} I0(z), z >= 0.
/// Plain I0 overflows around z ~ 700 while the scaled form stays in
/// [0, 1]; the power series is used below the crossover and the standard
/// asymptotic expansion above it.
inline double bessel_i0_scaled(double z) {
    if (z < 0.0) z = -z;
    if (z < 35.0) {
        const double q = 0.25 * z * z;
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= q / (static_cast<double>(k) * k);
            sum += term;
            if (term < sum * 1e-18) break;
        }
        return std::exp(-z) * sum;
    }
    // I0(z) ~ e^z / sqrt(2 pi z) * sum a_k / z^k with
    // a_k = ((2k-1)!!)^2 / (k! 8^k).
    const double inv = 1.0 / z;
    double coeff = 1.0;
    double sum = 1.0;
    double zk = 1.0;
    for (int k = 1; k <= 10; ++k) {
        const double odd = 2.0 * k - 1.0;
        coeff *= odd * odd / (8.0 * k);
        zk *= inv;
        sum += coeff * zk;
    }
    return sum / std::sqrt(6.283185307179586476925286766559 * z);
}

struct quadrature_result {
    double value;
    double error;
};

/// Adaptive 1D integration (Gauss-Kronrod 15) with an absolute error
/// estimate.
template <typename F>
quadrature_result integrate(F&& f, double a, double b) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        std::forward<F>(f), a, b, 14, 1e-13, &err);
    return {v, err};
}

/// Adaptive 2D integration over an axis-aligned box by nesting two
/// Gauss-Kronrod rules. The inner tolerance is driven well below the
/// outer one so the inner error does not disturb the outer estimate.
template <typename F>
quadrature_result integrate_box(F&& f, double ax, double bx, double ay, double by) {
    double outer_err = 0.0;
    double inner_err_max = 0.0;
    auto outer = [&](double x) {
        double ie = 0.0;
        const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            [&](double y) { return f(x, y); }, ay, by, 14, 1e-13, &ie);
        if (ie > inner_err_max) inner_err_max = ie;
        return v;
    };
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        outer, ax, bx, 14, 1e-12, &outer_err);
    return {v, outer_err + inner_err_max * (bx - ax)};
}

}  // namespace arqcran::math
