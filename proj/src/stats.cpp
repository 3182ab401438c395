#include "sentinel/stats.hpp"

#include "sentinel/common.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sentinel::stats {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double t_two_sided_p(double t, double dof) {
    if (!(dof > 0)) throw ValidationError("t test needs positive degrees of freedom");
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(dof);
    return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))), 0.0, 1.0);
}

double f_upper_p(double f, double d1, double d2) {
    if (!(d1 > 0) || !(d2 > 0)) throw ValidationError("F test needs positive degrees of freedom");
    if (std::isnan(f)) return 1.0;
    if (std::isinf(f)) return 0.0;
    if (f <= 0) return 1.0;
    boost::math::fisher_f dist(d1, d2);
    return std::clamp(boost::math::cdf(boost::math::complement(dist, f)), 0.0, 1.0);
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace sentinel::stats
