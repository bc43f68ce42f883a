#pragma once

#include <cmath>
#include <optional>
#include <span>

#include <boost/math/distributions/students_t.hpp>

namespace psiotrl::stats {

struct Summary {
    double mean = 0.0;
    std::optional<double> half_width;  // empty when fewer than two samples
    std::size_t count = 0;
};

inline double mean(std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

/// Unbiased sample standard deviation.
inline double stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Two-sided Student-t quantile t_{1-(1-level)/2, dof}.
inline double t_critical(double level, std::size_t dof) {
    boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, 1.0 - (1.0 - level) / 2.0);
}

/// Sample mean and the half-width of the two-sided Student-t interval.
inline Summary summarize(std::span<const double> xs, double level = 0.95) {
    Summary s;
    s.count = xs.size();
    s.mean = mean(xs);
    if (xs.size() >= 2) {
        const double n = static_cast<double>(xs.size());
        s.half_width = t_critical(level, xs.size() - 1) * stddev(xs) / std::sqrt(n);
    }
    return s;
}

}  // namespace psiotrl::stats
