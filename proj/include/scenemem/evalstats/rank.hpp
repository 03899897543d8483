#pragma once

#include <span>
#include <vector>

namespace scenemem::evalstats {

// 1-based fractional ranks: tied values share the mean of the positions they
// occupy, so the ranks always sum to n(n+1)/2.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank correlation: Pearson correlation of the average-rank
// transforms of a and b.
//
// Throws std::invalid_argument when the lengths differ, n < 2, any value is
// NaN, or either input is constant (the coefficient is undefined there and a
// silent 0 would hide broken pipelines).
double srcc(std::span<const double> a, std::span<const double> b);

// Pearson product-moment correlation; same error contract as srcc.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace scenemem::evalstats
