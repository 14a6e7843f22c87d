// SPDX-License-Identifier: Apache-2.0
// Central-difference helpers shared by the gradient tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

namespace aoil::test {

/// Max elementwise |analytic − fd| / max(|fd|, floor) over `values`, where fd
/// perturbs each entry by ±step and evaluates `loss`.
inline double max_relative_error(std::span<double> values, std::span<const double> analytic,
                                 const std::function<double()>& loss, double step = 1e-5,
                                 double floor = 1e-8) {
    double worst = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + step;
        const double up = loss();
        values[i] = saved - step;
        const double down = loss();
        values[i] = saved;
        const double fd = (up - down) / (2.0 * step);
        worst = std::max(worst, std::abs(analytic[i] - fd) / std::max(std::abs(fd), floor));
    }
    return worst;
}

inline double min_abs(std::span<const double> v) {
    double m = INFINITY;
    for (double x : v) m = std::min(m, std::abs(x));
    return m;
}

}  // namespace aoil::test
