#include "facemap/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <utility>

#include "facemap/linalg.hpp"
#include "facemap/metrics.hpp"
#include "facemap/rng.hpp"

namespace facemap {

namespace {

struct RawThreshold {
  double tau = 0.0;
  double accuracy = 0.0;
  bool single_class = false;
};

RawThreshold find_threshold_raw(std::span<const double> dist, std::span<const char> same) {
  const std::size_t n = dist.size();
  if (n == 0) throw ProtocolError("threshold search requires at least one scored pair");
  for (const double d : dist) {
    if (!std::isfinite(d)) throw NumericalError("scored distances must be finite");
  }

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
  });
  std::vector<double> d(n);
  std::vector<char> s(n);
  std::size_t total_same = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = dist[order[i]];
    s[i] = same[order[i]];
    total_same += static_cast<std::size_t>(s[i]);
  }
  const std::size_t total_diff = n - total_same;

  const double lo = d.front();
  const double hi = d.back();
  const double eps = std::max(1e-9, 1e-6 * (hi - lo));
  double below = lo - eps;
  if (below >= lo) below = std::nextafter(lo, -std::numeric_limits<double>::infinity());
  double above = hi + eps;
  if (above <= hi) above = std::nextafter(hi, std::numeric_limits<double>::infinity());

  std::vector<double> candidates;
  candidates.reserve(n + 1);
  candidates.push_back(below);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (d[i] != d[i + 1]) candidates.push_back(d[i] + (d[i + 1] - d[i]) / 2.0);
  }
  candidates.push_back(above);

  // Candidates ascend, so one pointer pass counts "distance <= tau" honestly
  // even when a midpoint rounds onto a neighboring distance.
  std::size_t k = 0;
  std::size_t same_below = 0;
  double best_accuracy = -1.0;
  double best_tau = below;
  for (const double tau : candidates) {
    while (k < n && d[k] <= tau) {
      same_below += static_cast<std::size_t>(s[k]);
      ++k;
    }
    const std::size_t correct = same_below + (total_diff - (k - same_below));
    const double accuracy = static_cast<double>(correct) / static_cast<double>(n);
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      best_tau = tau;
    }
  }
  return {best_tau, best_accuracy, total_same == 0 || total_diff == 0};
}

double accuracy_raw(std::span<const double> dist, std::span<const char> same, double tau) {
  const std::size_t n = dist.size();
  if (n == 0) throw ProtocolError("accuracy requires at least one scored pair");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(dist[i])) throw NumericalError("scored distances must be finite");
    correct += static_cast<std::size_t>((dist[i] <= tau) == static_cast<bool>(same[i]));
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

// Runs body(0..n-1) on up to `jobs` threads. Results must be written to
// per-index slots; the lowest-index exception is rethrown, matching what a
// sequential run would report.
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

struct FlatPair {
  int fold = 0;
  std::uint32_t src_col = 0;
  std::uint32_t tgt_col = 0;
  bool same = false;
  const VerificationPair* ref = nullptr;
};

void validate_config(const EvalConfig& config, int source_dim, int target_dim) {
  if (config.lambda < 0.0) throw ProtocolError("lambda must be nonnegative");
  if (config.mapping_mode == MappingMode::kIdentity && source_dim != target_dim) {
    throw ProtocolError("identity mapping requires equal dimensions, got " +
                        std::to_string(source_dim) + " and " + std::to_string(target_dim));
  }
  if (config.mapping_mode == MappingMode::kTruncatedRank) {
    const int max_rank = std::min(source_dim, target_dim);
    if (config.rank < 1 || config.rank > max_rank) {
      throw ProtocolError("truncation rank " + std::to_string(config.rank) + " outside [1, " +
                          std::to_string(max_rank) + "]");
    }
  }
  if (config.pairs_subsample && config.pairs_subsample->count < 0) {
    throw ProtocolError("subsample count must be nonnegative");
  }
}

}  // namespace

ThresholdResult find_threshold(std::span<const ScoredPair> scored) {
  std::vector<double> dist(scored.size());
  std::vector<char> same(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    dist[i] = scored[i].distance;
    same[i] = scored[i].pair.label == PairLabel::kSame;
  }
  const RawThreshold raw = find_threshold_raw(dist, same);
  return {raw.tau, raw.accuracy, raw.single_class};
}

double accuracy_at(std::span<const ScoredPair> scored, double tau) {
  std::vector<double> dist(scored.size());
  std::vector<char> same(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    dist[i] = scored[i].distance;
    same[i] = scored[i].pair.label == PairLabel::kSame;
  }
  return accuracy_raw(dist, same, tau);
}

EvaluationReport evaluate(const EmbeddingSet& source, const EmbeddingSet& target,
                          const PairProtocol& protocol, const EvalConfig& config, int jobs) {
  validate_config(config, source.dim(), target.dim());
  const int source_dim = source.dim();
  const int target_dim = target.dim();
  const bool fitting = config.mapping_mode != MappingMode::kIdentity;

  // Resolve every id once and compact the entities actually referenced into
  // column-major matrices; all folds score against these shared blocks.
  std::vector<std::int32_t> src_col_of(source.size(), -1);
  std::vector<std::int32_t> tgt_col_of(target.size(), -1);
  std::vector<std::uint32_t> src_rows;
  std::vector<std::uint32_t> tgt_rows;
  std::vector<FlatPair> flat;
  flat.reserve(protocol.total_pairs());
  const int n_folds = static_cast<int>(protocol.n_folds());
  for (int f = 0; f < n_folds; ++f) {
    for (const VerificationPair& pair : protocol.folds()[f]) {
      const std::size_t si = source.index_of(pair.a);
      const std::size_t ti = target.index_of(pair.b);
      if (src_col_of[si] < 0) {
        src_col_of[si] = static_cast<std::int32_t>(src_rows.size());
        src_rows.push_back(static_cast<std::uint32_t>(si));
      }
      if (tgt_col_of[ti] < 0) {
        tgt_col_of[ti] = static_cast<std::int32_t>(tgt_rows.size());
        tgt_rows.push_back(static_cast<std::uint32_t>(ti));
      }
      flat.push_back({f, static_cast<std::uint32_t>(src_col_of[si]),
                      static_cast<std::uint32_t>(tgt_col_of[ti]),
                      pair.label == PairLabel::kSame, &pair});
    }
  }
  if (flat.empty()) throw ProtocolError("pair protocol contains no pairs");

  Matrix xs(source_dim, static_cast<Eigen::Index>(src_rows.size()));
  for (std::size_t c = 0; c < src_rows.size(); ++c) xs.col(c) = source.vector_at(src_rows[c]);
  Matrix yt(target_dim, static_cast<Eigen::Index>(tgt_rows.size()));
  for (std::size_t c = 0; c < tgt_rows.size(); ++c) yt.col(c) = target.vector_at(tgt_rows[c]);
  Vector ynorm(yt.cols());
  for (Eigen::Index c = 0; c < yt.cols(); ++c) ynorm[c] = yt.col(c).norm();

  std::vector<FoldResult> fold_results(n_folds);
  std::vector<std::vector<std::string>> fold_warnings(n_folds);

  const auto run_fold = [&](std::size_t fold_index) {
    const int f = static_cast<int>(fold_index);

    LinearMap map;
    if (fitting) {
      std::vector<std::uint32_t> fit;
      for (std::size_t i = 0; i < flat.size(); ++i) {
        if (flat[i].fold != f && flat[i].same) fit.push_back(static_cast<std::uint32_t>(i));
      }
      if (config.pairs_subsample) {
        const SubsampleSpec& sub = *config.pairs_subsample;
        if (static_cast<std::size_t>(sub.count) > fit.size()) {
          throw ProtocolError("subsample count " + std::to_string(sub.count) + " exceeds the " +
                              std::to_string(fit.size()) + " matched training pairs of fold " +
                              std::to_string(f));
        }
        Rng rng(derive_seed(sub.seed, "subsample", static_cast<std::uint64_t>(sub.count),
                            static_cast<std::uint64_t>(f)));
        for (std::size_t i = 0; i < static_cast<std::size_t>(sub.count); ++i) {
          const std::size_t j = i + rng.next_below(fit.size() - i);
          std::swap(fit[i], fit[j]);
        }
        fit.resize(static_cast<std::size_t>(sub.count));
        // Ascending order keeps the full-count subsample identical to the
        // unsampled fit, row for row.
        std::sort(fit.begin(), fit.end());
      }
      if (fit.empty()) {
        throw ProtocolError("no matched pairs available to fit the map for fold " +
                            std::to_string(f));
      }

      Matrix s(static_cast<Eigen::Index>(fit.size()), source_dim);
      Matrix t(static_cast<Eigen::Index>(fit.size()), target_dim);
      for (std::size_t r = 0; r < fit.size(); ++r) {
        const FlatPair& fp = flat[fit[r]];
        if (config.normalize_before_fit) {
          const double ns = xs.col(fp.src_col).norm();
          const double nt = yt.col(fp.tgt_col).norm();
          if (ns < kDegenerateNorm || nt < kDegenerateNorm) {
            throw DegenerateVectorError("cannot normalize fit pair ('" + fp.ref->a + "', '" +
                                        fp.ref->b + "'): near-zero embedding");
          }
          s.row(r) = xs.col(fp.src_col).transpose() / ns;
          t.row(r) = yt.col(fp.tgt_col).transpose() / nt;
        } else {
          s.row(r) = xs.col(fp.src_col).transpose();
          t.row(r) = yt.col(fp.tgt_col).transpose();
        }
      }
      map = ridge_fit(s, t, config.lambda);
      if (config.mapping_mode == MappingMode::kTruncatedRank) {
        map = truncate_rank(map, config.rank);
      }
    }

    Matrix mapped_storage;
    const Matrix* mapped = &xs;
    if (fitting) {
      mapped_storage = map.matrix.transpose() * xs;
      mapped = &mapped_storage;
    }
    Vector unorm(mapped->cols());
    for (Eigen::Index c = 0; c < mapped->cols(); ++c) unorm[c] = mapped->col(c).norm();

    const auto score = [&](const FlatPair& fp) {
      const double nu = unorm[fp.src_col];
      const double ny = ynorm[fp.tgt_col];
      if (nu < kDegenerateNorm) {
        throw DegenerateVectorError("mapped source embedding is numerically zero for pair ('" +
                                    fp.ref->a + "', '" + fp.ref->b + "')");
      }
      if (ny < kDegenerateNorm) {
        throw DegenerateVectorError("target embedding is numerically zero for pair ('" +
                                    fp.ref->a + "', '" + fp.ref->b + "')");
      }
      return detail::cosine_from_parts(mapped->col(fp.src_col).dot(yt.col(fp.tgt_col)), nu, ny);
    };

    std::vector<double> train_dist, test_dist;
    std::vector<char> train_same, test_same;
    train_dist.reserve(flat.size());
    train_same.reserve(flat.size());
    for (const FlatPair& fp : flat) {
      const double dist = score(fp);
      if (fp.fold == f) {
        test_dist.push_back(dist);
        test_same.push_back(fp.same);
      } else {
        train_dist.push_back(dist);
        train_same.push_back(fp.same);
      }
    }

    const RawThreshold th = find_threshold_raw(train_dist, train_same);
    if (th.single_class) {
      fold_warnings[fold_index].push_back(
          "fold " + std::to_string(f) +
          ": training scores contain a single class; threshold is degenerate");
    }
    fold_results[fold_index] = {f, th.tau, th.accuracy, accuracy_raw(test_dist, test_same, th.tau)};
  };

  parallel_for(static_cast<std::size_t>(n_folds), jobs, run_fold);

  EvaluationReport report;
  report.per_fold = std::move(fold_results);
  double sum = 0.0;
  for (const FoldResult& fr : report.per_fold) sum += fr.test_accuracy;
  report.mean_accuracy = sum / static_cast<double>(n_folds);
  double ss = 0.0;
  for (const FoldResult& fr : report.per_fold) {
    const double delta = fr.test_accuracy - report.mean_accuracy;
    ss += delta * delta;
  }
  report.std_accuracy = std::sqrt(ss / static_cast<double>(n_folds));
  report.config = config;
  report.source_tag = source.system_tag();
  report.target_tag = target.system_tag();
  for (const auto& warnings : fold_warnings) {
    report.warnings.insert(report.warnings.end(), warnings.begin(), warnings.end());
  }
  return report;
}

CrossMatrix cross_matrix(std::span<const EmbeddingSet> systems, const PairProtocol& protocol,
                         const EvalConfig& config, int jobs) {
  if (systems.size() < 2) throw ProtocolError("cross matrix requires at least two systems");
  const std::size_t n = systems.size();

  CrossMatrix out;
  out.system_tags.reserve(n);
  for (const EmbeddingSet& sys : systems) out.system_tags.push_back(sys.system_tag());
  out.cells.assign(n, std::vector<CrossCell>(n));

  parallel_for(n * n, jobs, [&](std::size_t idx) {
    const std::size_t i = idx / n;
    const std::size_t j = idx % n;
    CrossCell& cell = out.cells[i][j];
    if (i == j) {
      EvalConfig native = config;
      native.mapping_mode = MappingMode::kIdentity;
      cell.report = evaluate(systems[i], systems[j], protocol, native, 1);
      return;
    }
    cell.report = evaluate(systems[i], systems[j], protocol, config, 1);
    if (config.mapping_mode != MappingMode::kIdentity) {
      if (systems[i].dim() == systems[j].dim()) {
        EvalConfig baseline = config;
        baseline.mapping_mode = MappingMode::kIdentity;
        cell.identity_baseline = evaluate(systems[i], systems[j], protocol, baseline, 1);
      } else {
        cell.report.warnings.push_back("identity baseline skipped: dimension mismatch between '" +
                                       systems[i].system_tag() + "' and '" +
                                       systems[j].system_tag() + "'");
      }
    }
  });
  return out;
}

}  // namespace facemap
