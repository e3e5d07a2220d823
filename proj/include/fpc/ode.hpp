#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "fpc/error.hpp"

namespace fpc {

struct OdeOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double initial_step = 0.0;
    long max_steps = 50'000'000;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
};

// Dormand-Prince 5(4) with PI step control for y' = f(y) on a dense state.
template <class Rhs>
Eigen::MatrixXd integrate_dopri5(Rhs&& f, Eigen::MatrixXd y, double t_end,
                                 const OdeOptions& opt = {}, OdeStats* stats = nullptr)
{
    if (!(t_end >= 0.0)) throw InvalidInput("integration time must be nonnegative");
    if (t_end == 0.0) return y;

    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                     a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                     a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                     b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                     e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    OdeStats local;
    Eigen::MatrixXd k1 = f(y), k2, k3, k4, k5, k6, k7, ynew, err;
    local.evaluations = 1;

    double h = opt.initial_step;
    if (h <= 0.0) {
        double scale_norm = 0.0, deriv_norm = 0.0;
        for (Eigen::Index c = 0; c < y.cols(); ++c)
            for (Eigen::Index r = 0; r < y.rows(); ++r) {
                double sc = opt.atol + opt.rtol * std::abs(y(r, c));
                scale_norm = std::max(scale_norm, std::abs(y(r, c)) / sc);
                deriv_norm = std::max(deriv_norm, std::abs(k1(r, c)) / sc);
            }
        h = (scale_norm < 1e-5 || deriv_norm < 1e-5) ? 1e-6 : 0.01 * scale_norm / deriv_norm;
        h = std::min(h, t_end);
    }

    double t = 0.0;
    double prev_err = 1e-4;
    bool last_rejected = false;
    long steps = 0;
    while (t < t_end) {
        if (++steps > opt.max_steps)
            throw NumericalError("integrator exceeded " + std::to_string(opt.max_steps) +
                                 " steps at t=" + std::to_string(t));
        if (t + h > t_end) h = t_end - t;
        k2 = f(y + h * (a21 * k1));
        k3 = f(y + h * (a31 * k1 + a32 * k2));
        k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = f(ynew);
        local.evaluations += 6;
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double sq = 0.0;
        for (Eigen::Index c = 0; c < y.cols(); ++c)
            for (Eigen::Index r = 0; r < y.rows(); ++r) {
                double sc = opt.atol + opt.rtol * std::max(std::abs(y(r, c)), std::abs(ynew(r, c)));
                double q = err(r, c) / sc;
                sq += q * q;
            }
        double en = std::sqrt(sq / static_cast<double>(y.size()));
        if (!std::isfinite(en)) throw NumericalError("integrator produced non-finite values");

        if (en <= 1.0) {
            t += h;
            y.swap(ynew);
            k1.swap(k7);
            ++local.accepted;
            double fac = en == 0.0 ? 5.0
                                   : 0.9 * std::pow(en, -0.7 / 5.0) * std::pow(prev_err, 0.4 / 5.0);
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
            prev_err = std::max(en, 1e-4);
            h *= fac;
            last_rejected = false;
        } else {
            ++local.rejected;
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            last_rejected = true;
        }
        if (h < 1e-14 * std::max(1.0, t_end))
            throw NumericalError("integrator step size underflow at t=" + std::to_string(t));
    }
    if (stats) *stats = local;
    return y;
}

}  // namespace fpc
