#pragma once

#include <optional>
#include <span>
#include <vector>

#include "facemap/types.hpp"

namespace facemap {

struct ScoredPair {
  VerificationPair pair;
  double distance = 0.0;
};

struct ThresholdResult {
  double tau = 0.0;
  double train_accuracy = 0.0;
  /// Set when the input carried only one label; tau is then the degenerate
  /// all-accept or all-reject cut and callers should surface a warning.
  bool single_class = false;
};

/// Finds the cosine-distance threshold maximizing training accuracy under the
/// decision rule "same iff distance <= tau". Candidates are the midpoints of
/// adjacent distinct distances plus one sentinel beyond each extreme; among
/// equally accurate candidates the smallest wins, which makes the result
/// deterministic and invariant to infinitesimal distance perturbations.
ThresholdResult find_threshold(std::span<const ScoredPair> scored);

/// Fraction of pairs whose decision (distance <= tau) agrees with the label.
double accuracy_at(std::span<const ScoredPair> scored, double tau);

/// Cross-validated verification of a (possibly mapped) embedding pair.
///
/// For each fold f:
///   1. the map is fit on the matched pairs of all folds != f (source
///      embedding of pair.a against target embedding of pair.b), honoring
///      config.pairs_subsample for the fit only;
///   2. every pair of folds != f is scored with the mapped cosine distance
///      and the threshold is searched over all of those scores;
///   3. test accuracy is measured on fold f at that threshold.
///
/// Identity mode skips the fit and requires equal dimensions. Subsampling
/// never shrinks the threshold-search set, only the fit set. Folds are
/// independent; jobs > 1 evaluates them concurrently with results identical
/// to sequential execution.
EvaluationReport evaluate(const EmbeddingSet& source, const EmbeddingSet& target,
                          const PairProtocol& protocol, const EvalConfig& config, int jobs = 1);

struct CrossCell {
  EvaluationReport report;
  /// Identity-map accuracy for off-diagonal cells with equal dimensions;
  /// shows what comparing raw spaces directly would score.
  std::optional<EvaluationReport> identity_baseline;
};

struct CrossMatrix {
  std::vector<std::string> system_tags;
  std::vector<std::vector<CrossCell>> cells;  // cells[from][to]
};

/// Full cross-system table: cell (i, j) evaluates system i mapped into
/// system j. Diagonal cells use the identity map (native accuracy).
CrossMatrix cross_matrix(std::span<const EmbeddingSet> systems, const PairProtocol& protocol,
                         const EvalConfig& config, int jobs = 1);

}  // namespace facemap
