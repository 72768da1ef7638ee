#pragma once

#include <cstdint>
#include <span>

#include "facemap/types.hpp"

namespace facemap {

/// Entity id for image `image` (1-based in the id string) of identity
/// `identity`, e.g. synthetic_entity_id(42, 0) == "id00042/0001".
EntityId synthetic_entity_id(int identity, int image);

/// Ground truth for desk-scale experiments: unit latent identity vectors and
/// one random linear transform per system, all derived deterministically
/// from the seed. Transform entries are N(0, 1/latent_dim).
SyntheticWorld generate_world(int n_identities, int latent_dim, int images_per_identity,
                              std::span<const SyntheticSystemSpec> systems, std::uint64_t seed);

/// Embeddings of every (identity, image) through one system:
///   l2_normalize(A * l2_normalize(z + sigma * eta))
/// where eta is the per-image jitter shared across systems. Optional
/// output-space noise is added before the final normalization.
EmbeddingSet emit_embeddings(const SyntheticWorld& world, int system_index);

/// Fold protocol over the world's images: subject-disjoint folds, matched
/// pairs joining two images of one identity, mismatched pairs joining two
/// identities of the same fold, no pair drawn twice.
PairProtocol generate_protocol(const SyntheticWorld& world, int n_folds, int matched_per_fold,
                               int mismatched_per_fold, std::uint64_t seed);

}  // namespace facemap
