#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fldplus/metric/summary.hpp"

namespace fldplus::metric {

struct CurvePoint {
  std::size_t size = 0;
  double mean = 0;
  double std = 0;               // sample std over repeats, 0 for one repeat
  bool disjoint = false;        // repeats drew non-overlapping subsets
  std::vector<double> scores;   // one FLD+ per repeat
};

// FLD+ of random subsets of the generated log-likelihoods against a fixed real
// summary. Subsets of one size are disjoint when size * repeats fits in the
// set, otherwise each repeat draws its own permutation.
std::vector<CurvePoint> sample_efficiency_curve(const LogLikelihoodSummary& real,
                                                std::span<const double> gen_ll,
                                                std::span<const std::size_t> sizes,
                                                std::size_t repeats, std::uint64_t seed);

}  // namespace fldplus::metric
