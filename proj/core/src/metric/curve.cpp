#include "fldplus/metric/curve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fldplus/error.hpp"
#include "fldplus/hash.hpp"

namespace fldplus::metric {

namespace {

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with explicit draws; std::shuffle's algorithm is unspecified
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(idx[i - 1], idx[pick(rng)]);
  }
  return idx;
}

}  // namespace

std::vector<CurvePoint> sample_efficiency_curve(const LogLikelihoodSummary& real,
                                                std::span<const double> gen_ll,
                                                std::span<const std::size_t> sizes,
                                                std::size_t repeats, std::uint64_t seed) {
  if (repeats == 0) fail(ErrorCode::kInvalidArgument, "repeats must be positive");
  if (sizes.empty()) fail(ErrorCode::kInvalidArgument, "no subsample sizes given");
  const std::size_t n = gen_ll.size();
  std::vector<CurvePoint> out;
  for (std::size_t size : sizes) {
    if (size == 0) fail(ErrorCode::kInvalidArgument, "subsample size must be positive");
    if (size > n) {
      fail(ErrorCode::kInsufficientData, "subsample size " + std::to_string(size) +
                                             " exceeds the " + std::to_string(n) +
                                             " generated samples");
    }
    CurvePoint pt;
    pt.size = size;
    pt.disjoint = size * repeats <= n;
    const std::string tag = "curve/" + std::to_string(size);
    std::vector<std::size_t> shared;
    if (pt.disjoint) shared = permutation(n, derive_seed(seed, tag));
    std::vector<double> subset(size);
    for (std::size_t r = 0; r < repeats; ++r) {
      std::vector<std::size_t> own;
      const std::size_t* idx = nullptr;
      if (pt.disjoint) {
        idx = shared.data() + r * size;
      } else {
        own = permutation(n, derive_seed(seed, tag + "/" + std::to_string(r)));
        idx = own.data();
      }
      // ascending index order keeps the reduction independent of the draw order
      std::vector<std::size_t> rows(idx, idx + size);
      std::sort(rows.begin(), rows.end());
      for (std::size_t i = 0; i < size; ++i) subset[i] = gen_ll[rows[i]];
      pt.scores.push_back(fld_plus(real, summarize_values(subset)));
    }
    pt.mean = std::accumulate(pt.scores.begin(), pt.scores.end(), 0.0) /
              static_cast<double>(repeats);
    if (repeats > 1) {
      double ss = 0;
      for (double s : pt.scores) ss += (s - pt.mean) * (s - pt.mean);
      pt.std = std::sqrt(ss / static_cast<double>(repeats - 1));
    }
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace fldplus::metric
