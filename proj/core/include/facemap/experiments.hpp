#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "facemap/types.hpp"

namespace facemap {

struct SensitivityPoint {
  std::int64_t p = 0;
  double mean_accuracy = 0.0;
};

/// Mean accuracy as a function of the number of fit pairs p, plus the
/// smallest swept p whose accuracy stays within drop_threshold of the
/// full-fit accuracy.
struct SensitivityCurve {
  std::vector<SensitivityPoint> points;  // sorted by p ascending
  double full_accuracy = 0.0;
  std::optional<std::int64_t> p_for_drop;
  double drop_threshold = 0.01;
  std::vector<std::string> warnings;
};

struct RankPoint {
  int k = 0;
  double mean_accuracy = 0.0;
};

/// Accuracy under rank-truncated maps plus the variance-explained profile of
/// the full-data fitted map.
struct RankCurve {
  std::vector<RankPoint> points;                       // sorted by k ascending
  std::vector<std::pair<int, double>> variance_points; // (k, variance explained)
};

/// Sweeps num_points values of p uniformly over [1, m], where m is the number
/// of matched training pairs available to every fold. Each (p, fold) subset
/// is drawn from a seed derived from (seed, p, fold), so one seed reproduces
/// the whole curve bit for bit while subsets still differ across points and
/// folds. `repetitions` averages several independent draws per p.
SensitivityCurve sensitivity_sweep(const EmbeddingSet& source, const EmbeddingSet& target,
                                   const PairProtocol& protocol, const EvalConfig& config,
                                   int num_points, std::uint64_t seed,
                                   double drop_threshold = 0.01, int repetitions = 1,
                                   int jobs = 1);

/// Evaluates the protocol once per requested rank with the fitted map
/// truncated to rank k, and reports variance explained at each k from the
/// map fitted on all matched pairs of the whole protocol.
RankCurve rank_sweep(const EmbeddingSet& source, const EmbeddingSet& target,
                     const PairProtocol& protocol, const EvalConfig& config,
                     std::span<const int> ranks, int jobs = 1);

}  // namespace facemap
