#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "facemap/errors.hpp"

namespace facemap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using EntityId = std::string;

/// A labeled collection of fixed-dimension embeddings keyed by entity id
/// (a person, an image, or a video). Entries keep insertion order so files
/// and reports derived from a set are reproducible. Fill once, then share
/// read-only; the type is not synchronized for concurrent insertion.
class EmbeddingSet {
 public:
  EmbeddingSet(int dim, std::string system_tag);

  /// Adds one entry. The vector must have length dim(), be finite, and the
  /// id must not already be present.
  void insert(const EntityId& id, Vector v);

  bool contains(const EntityId& id) const { return index_.count(id) != 0; }

  /// Looks an entity up, throwing ProtocolError naming the id when absent.
  const Vector& at(const EntityId& id) const;
  std::size_t index_of(const EntityId& id) const;

  int dim() const { return dim_; }
  const std::string& system_tag() const { return tag_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  const std::vector<EntityId>& ids() const { return ids_; }
  const Vector& vector_at(std::size_t index) const { return vectors_[index]; }

 private:
  int dim_;
  std::string tag_;
  std::vector<EntityId> ids_;
  std::vector<Vector> vectors_;
  std::unordered_map<EntityId, std::size_t> index_;
};

enum class PairLabel : std::uint8_t { kSame, kDifferent };

struct VerificationPair {
  EntityId a;
  EntityId b;
  PairLabel label = PairLabel::kSame;
};

using Fold = std::vector<VerificationPair>;

/// Fold-partitioned verification pairs (the pairs.txt role). Requires at
/// least two folds, and any (a, b, label) triple may appear in exactly one
/// fold. Ids are opaque; they are resolved against embedding sets only when
/// an evaluation runs.
class PairProtocol {
 public:
  explicit PairProtocol(std::vector<Fold> folds);

  const std::vector<Fold>& folds() const { return folds_; }
  std::size_t n_folds() const { return folds_.size(); }

  std::size_t total_pairs() const;
  std::size_t matched_pairs() const;

 private:
  std::vector<Fold> folds_;
};

/// A source-to-target linear map plus fit metadata. The map acts on row
/// vectors from the right: a source embedding x maps to matrix^T * x.
struct LinearMap {
  Matrix matrix;  // source_dim x target_dim
  double lambda = 0.0;
  std::int64_t n_pairs_used = 0;
  std::string source_tag;
  std::string target_tag;

  int source_dim() const { return static_cast<int>(matrix.rows()); }
  int target_dim() const { return static_cast<int>(matrix.cols()); }

  static LinearMap identity(int dim);

  /// Checks dims > 0 and finite entries.
  void validate() const;
};

struct FoldResult {
  int fold_index = 0;
  double threshold = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

enum class MappingMode : std::uint8_t { kFitted, kIdentity, kTruncatedRank };

/// Draw `count` fit pairs uniformly without replacement from the training
/// folds' matched pairs. The per-fold subset is derived deterministically
/// from (seed, count, fold index), so one seed reproduces every subset.
struct SubsampleSpec {
  std::int64_t count = 0;
  std::uint64_t seed = 0;
};

struct EvalConfig {
  double lambda = 1.0;
  MappingMode mapping_mode = MappingMode::kFitted;
  int rank = 0;  // only read in TruncatedRank mode
  std::optional<SubsampleSpec> pairs_subsample;  // nullopt: all matched pairs
  bool normalize_before_fit = true;
};

struct EvaluationReport {
  std::vector<FoldResult> per_fold;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  EvalConfig config;
  std::string source_tag;
  std::string target_tag;
  std::vector<std::string> warnings;
};

struct SyntheticSystemSpec {
  int out_dim = 64;
  /// Scale of the per-image latent jitter. The jitter direction is shared
  /// across systems, so the same "photo" perturbs every system coherently.
  double noise_sigma = 0.05;
  /// Optional per-system observation noise added after the transform.
  double output_noise_sigma = 0.0;
};

struct SyntheticSystem {
  Matrix transform;  // out_dim x latent_dim
  double noise_sigma = 0.0;
  double output_noise_sigma = 0.0;

  int out_dim() const { return static_cast<int>(transform.rows()); }
};

/// Ground-truth latent identities plus per-system linear transforms. Every
/// derived quantity (jitter, protocols, embeddings) is seeded from `seed`,
/// so a world is fully determined by its generation arguments.
struct SyntheticWorld {
  int n_identities = 0;
  int latent_dim = 0;
  int images_per_identity = 0;
  std::uint64_t seed = 0;
  Matrix latents;  // n_identities x latent_dim, unit rows
  std::vector<SyntheticSystem> systems;
};

}  // namespace facemap
