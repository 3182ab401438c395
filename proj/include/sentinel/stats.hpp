#pragma once

#include <span>
#include <vector>

namespace sentinel::stats {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom. Infinite t gives 0.
double t_two_sided_p(double t, double dof);

/// P(F >= f) for Fisher's F(d1, d2).
double f_upper_p(double f, double d1, double d2);

double mean(std::span<const double> v);

} // namespace sentinel::stats
