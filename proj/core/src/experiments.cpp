#include "facemap/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <thread>

#include "facemap/linalg.hpp"
#include "facemap/metrics.hpp"
#include "facemap/protocol.hpp"
#include "facemap/rng.hpp"

namespace facemap {

namespace {

// Same slot-based pool as the protocol module; sweep points are independent
// and their seeds are per-point, so parallel order cannot leak into results.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(n, jobs > 1 ? static_cast<std::size_t>(jobs) : 1);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Matched training pairs available to every fold's fit: the total matched
// count minus the largest per-fold matched count.
std::int64_t min_training_matched(const PairProtocol& protocol) {
  std::int64_t total = 0;
  std::int64_t largest = 0;
  for (const Fold& fold : protocol.folds()) {
    std::int64_t matched = 0;
    for (const VerificationPair& pair : fold) {
      if (pair.label == PairLabel::kSame) ++matched;
    }
    total += matched;
    largest = std::max(largest, matched);
  }
  return total - largest;
}

}  // namespace

SensitivityCurve sensitivity_sweep(const EmbeddingSet& source, const EmbeddingSet& target,
                                   const PairProtocol& protocol, const EvalConfig& config,
                                   int num_points, std::uint64_t seed, double drop_threshold,
                                   int repetitions, int jobs) {
  if (num_points < 2) throw ProtocolError("sensitivity sweep needs at least 2 points");
  if (repetitions < 1) throw ProtocolError("repetitions must be positive");
  const std::int64_t m = min_training_matched(protocol);
  if (m < 1) throw ProtocolError("protocol has no matched training pairs to sweep over");

  SensitivityCurve curve;
  curve.drop_threshold = drop_threshold;

  // p values uniform over [1, m], rounded to integers and deduplicated.
  std::vector<std::int64_t> ps;
  ps.reserve(num_points);
  for (int i = 0; i < num_points; ++i) {
    const double fraction = static_cast<double>(i) / static_cast<double>(num_points - 1);
    std::int64_t p = static_cast<std::int64_t>(
        std::llround(1.0 + fraction * static_cast<double>(m - 1)));
    if (p > m) {
      curve.warnings.push_back("p = " + std::to_string(p) + " clamped to m = " +
                               std::to_string(m));
      p = m;
    }
    p = std::max<std::int64_t>(1, p);
    ps.push_back(p);
  }
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());

  EvalConfig full_config = config;
  full_config.pairs_subsample.reset();
  curve.full_accuracy = evaluate(source, target, protocol, full_config, jobs).mean_accuracy;

  curve.points.resize(ps.size());
  parallel_for(ps.size(), jobs, [&](std::size_t i) {
    const std::int64_t p = ps[i];
    double sum = 0.0;
    for (int rep = 0; rep < repetitions; ++rep) {
      EvalConfig point_config = config;
      const std::uint64_t rep_seed =
          repetitions == 1 ? seed : derive_seed(seed, "repetition", static_cast<std::uint64_t>(rep));
      point_config.pairs_subsample = SubsampleSpec{p, rep_seed};
      sum += evaluate(source, target, protocol, point_config, 1).mean_accuracy;
    }
    curve.points[i] = {p, sum / static_cast<double>(repetitions)};
  });

  for (const SensitivityPoint& point : curve.points) {
    if (point.mean_accuracy >= curve.full_accuracy - drop_threshold) {
      curve.p_for_drop = point.p;
      break;
    }
  }
  return curve;
}

RankCurve rank_sweep(const EmbeddingSet& source, const EmbeddingSet& target,
                     const PairProtocol& protocol, const EvalConfig& config,
                     std::span<const int> ranks, int jobs) {
  if (ranks.empty()) throw ProtocolError("rank sweep needs at least one rank");
  const int max_rank = std::min(source.dim(), target.dim());
  std::vector<int> ks(ranks.begin(), ranks.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (const int k : ks) {
    if (k < 1 || k > max_rank) {
      throw ProtocolError("rank " + std::to_string(k) + " outside [1, " +
                          std::to_string(max_rank) + "]");
    }
  }

  RankCurve curve;
  curve.points.resize(ks.size());
  parallel_for(ks.size(), jobs, [&](std::size_t i) {
    EvalConfig point_config = config;
    point_config.mapping_mode = MappingMode::kTruncatedRank;
    point_config.rank = ks[i];
    curve.points[i] = {ks[i], evaluate(source, target, protocol, point_config, 1).mean_accuracy};
  });

  // Variance profile of the map fitted on every matched pair in the protocol.
  std::vector<const VerificationPair*> matched;
  for (const Fold& fold : protocol.folds()) {
    for (const VerificationPair& pair : fold) {
      if (pair.label == PairLabel::kSame) matched.push_back(&pair);
    }
  }
  if (matched.empty()) throw ProtocolError("protocol has no matched pairs to fit");
  Matrix s(static_cast<Eigen::Index>(matched.size()), source.dim());
  Matrix t(static_cast<Eigen::Index>(matched.size()), target.dim());
  for (std::size_t r = 0; r < matched.size(); ++r) {
    Vector sv = source.at(matched[r]->a);
    Vector tv = target.at(matched[r]->b);
    if (config.normalize_before_fit) {
      sv = l2_normalize(sv);
      tv = l2_normalize(tv);
    }
    s.row(r) = sv.transpose();
    t.row(r) = tv.transpose();
  }
  const LinearMap full_map = ridge_fit(s, t, config.lambda);
  const SvdDecomposition dec = svd(full_map.matrix);
  curve.variance_points.reserve(ks.size());
  for (const int k : ks) curve.variance_points.emplace_back(k, variance_explained(dec, k));
  return curve;
}

}  // namespace facemap
