#include "facemap/types.hpp"

#include <set>
#include <tuple>
#include <utility>

namespace facemap {

EmbeddingSet::EmbeddingSet(int dim, std::string system_tag)
    : dim_(dim), tag_(std::move(system_tag)) {
  if (dim <= 0) throw ProtocolError("embedding dimension must be positive, got " + std::to_string(dim));
}

void EmbeddingSet::insert(const EntityId& id, Vector v) {
  if (v.size() != dim_) {
    throw ProtocolError("vector for entity '" + id + "' has length " + std::to_string(v.size()) +
                        ", expected " + std::to_string(dim_));
  }
  if (!v.allFinite()) {
    throw ProtocolError("vector for entity '" + id + "' contains non-finite values");
  }
  if (!index_.emplace(id, ids_.size()).second) {
    throw ProtocolError("duplicate entity id '" + id + "' in embedding set '" + tag_ + "'");
  }
  ids_.push_back(id);
  vectors_.push_back(std::move(v));
}

const Vector& EmbeddingSet::at(const EntityId& id) const {
  return vectors_[index_of(id)];
}

std::size_t EmbeddingSet::index_of(const EntityId& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) {
    throw ProtocolError("entity id '" + id + "' not found in embedding set '" + tag_ + "'");
  }
  return it->second;
}

PairProtocol::PairProtocol(std::vector<Fold> folds) : folds_(std::move(folds)) {
  if (folds_.size() < 2) {
    throw ProtocolError("pair protocol requires at least 2 folds, got " +
                        std::to_string(folds_.size()));
  }
  std::set<std::tuple<EntityId, EntityId, PairLabel>> seen;
  for (const Fold& fold : folds_) {
    for (const VerificationPair& pair : fold) {
      if (!seen.emplace(pair.a, pair.b, pair.label).second) {
        throw ProtocolError("pair ('" + pair.a + "', '" + pair.b +
                            "') appears in more than one fold");
      }
    }
  }
}

std::size_t PairProtocol::total_pairs() const {
  std::size_t n = 0;
  for (const Fold& fold : folds_) n += fold.size();
  return n;
}

std::size_t PairProtocol::matched_pairs() const {
  std::size_t n = 0;
  for (const Fold& fold : folds_) {
    for (const VerificationPair& pair : fold) {
      if (pair.label == PairLabel::kSame) ++n;
    }
  }
  return n;
}

LinearMap LinearMap::identity(int dim) {
  if (dim <= 0) throw ProtocolError("identity map dimension must be positive");
  LinearMap map;
  map.matrix = Matrix::Identity(dim, dim);
  map.lambda = 0.0;
  map.n_pairs_used = 0;
  return map;
}

void LinearMap::validate() const {
  if (matrix.rows() <= 0 || matrix.cols() <= 0) {
    throw ProtocolError("linear map must have positive dimensions");
  }
  if (!matrix.allFinite()) {
    throw NumericalError("linear map contains non-finite entries");
  }
}

}  // namespace facemap
