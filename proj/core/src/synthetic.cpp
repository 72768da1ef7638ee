#include "facemap/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <unordered_set>
#include <vector>

#include "facemap/metrics.hpp"
#include "facemap/rng.hpp"

namespace facemap {

namespace {

Vector normal_vector(Rng& rng, int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.next_normal();
  return v;
}

// Packs a pair of (identity, image) slots into one deduplication key.
std::uint64_t pair_key(std::uint64_t id_a, std::uint64_t img_a, std::uint64_t id_b,
                       std::uint64_t img_b) {
  return (((id_a << 8) | img_a) << 32) | ((id_b << 8) | img_b);
}

}  // namespace

EntityId synthetic_entity_id(int identity, int image) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "id%05d/%04d", identity, image + 1);
  return buf;
}

SyntheticWorld generate_world(int n_identities, int latent_dim, int images_per_identity,
                              std::span<const SyntheticSystemSpec> systems, std::uint64_t seed) {
  if (n_identities < 1 || latent_dim < 1 || images_per_identity < 1) {
    throw ProtocolError("synthetic world counts must be positive");
  }
  if (systems.empty()) throw ProtocolError("synthetic world needs at least one system");
  for (const SyntheticSystemSpec& spec : systems) {
    if (spec.out_dim < latent_dim) {
      throw ProtocolError("system out_dim " + std::to_string(spec.out_dim) +
                          " must be >= latent_dim " + std::to_string(latent_dim));
    }
    if (spec.noise_sigma < 0.0 || spec.output_noise_sigma < 0.0) {
      throw ProtocolError("noise sigma must be nonnegative");
    }
  }

  SyntheticWorld world;
  world.n_identities = n_identities;
  world.latent_dim = latent_dim;
  world.images_per_identity = images_per_identity;
  world.seed = seed;

  world.latents.resize(n_identities, latent_dim);
  for (int i = 0; i < n_identities; ++i) {
    Rng rng(derive_seed(seed, "latent", static_cast<std::uint64_t>(i)));
    Vector z = normal_vector(rng, latent_dim);
    while (z.norm() < 1e-12) z = normal_vector(rng, latent_dim);
    world.latents.row(i) = l2_normalize(z).transpose();
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
  world.systems.reserve(systems.size());
  for (std::size_t s = 0; s < systems.size(); ++s) {
    Rng rng(derive_seed(seed, "transform", s));
    SyntheticSystem sys;
    sys.noise_sigma = systems[s].noise_sigma;
    sys.output_noise_sigma = systems[s].output_noise_sigma;
    sys.transform.resize(systems[s].out_dim, latent_dim);
    for (int r = 0; r < systems[s].out_dim; ++r) {
      for (int c = 0; c < latent_dim; ++c) sys.transform(r, c) = rng.next_normal() * scale;
    }
    world.systems.push_back(std::move(sys));
  }
  return world;
}

EmbeddingSet emit_embeddings(const SyntheticWorld& world, int system_index) {
  if (system_index < 0 || system_index >= static_cast<int>(world.systems.size())) {
    throw ProtocolError("system index " + std::to_string(system_index) + " outside [0, " +
                        std::to_string(world.systems.size()) + ")");
  }
  const SyntheticSystem& sys = world.systems[system_index];
  EmbeddingSet set(sys.out_dim(), "synth" + std::to_string(system_index));

  for (int i = 0; i < world.n_identities; ++i) {
    const Vector z = world.latents.row(i).transpose();
    for (int j = 0; j < world.images_per_identity; ++j) {
      // The jitter stream depends only on (identity, image), so every system
      // sees the same perturbation of the same photo.
      Rng jitter_rng(derive_seed(world.seed, "jitter", static_cast<std::uint64_t>(i),
                                 static_cast<std::uint64_t>(j)));
      Vector latent = z;
      if (sys.noise_sigma > 0.0) {
        latent += sys.noise_sigma * normal_vector(jitter_rng, world.latent_dim);
      }
      Vector out = sys.transform * l2_normalize(latent);
      if (sys.output_noise_sigma > 0.0) {
        const std::uint64_t image_slot =
            static_cast<std::uint64_t>(i) * world.images_per_identity + j;
        Rng obs_rng(derive_seed(world.seed, "observation", static_cast<std::uint64_t>(system_index),
                                image_slot));
        out += sys.output_noise_sigma * normal_vector(obs_rng, sys.out_dim());
      }
      set.insert(synthetic_entity_id(i, j), l2_normalize(out));
    }
  }
  return set;
}

PairProtocol generate_protocol(const SyntheticWorld& world, int n_folds, int matched_per_fold,
                               int mismatched_per_fold, std::uint64_t seed) {
  if (n_folds < 2) throw ProtocolError("protocol needs at least 2 folds");
  if (matched_per_fold < 1 || mismatched_per_fold < 1) {
    throw ProtocolError("pairs per fold must be positive");
  }
  const int imgs = world.images_per_identity;

  // Subject-disjoint folds: identities are permuted once and split into
  // nearly equal chunks.
  std::vector<int> identity_order(world.n_identities);
  for (int i = 0; i < world.n_identities; ++i) identity_order[i] = i;
  {
    Rng rng(derive_seed(seed, "fold-assignment"));
    for (std::size_t i = 0; i + 1 < identity_order.size(); ++i) {
      const std::size_t j = i + rng.next_below(identity_order.size() - i);
      std::swap(identity_order[i], identity_order[j]);
    }
  }

  const int base = world.n_identities / n_folds;
  const int extra = world.n_identities % n_folds;

  std::vector<Fold> folds;
  folds.reserve(n_folds);
  int cursor = 0;
  for (int f = 0; f < n_folds; ++f) {
    const int count = base + (f < extra ? 1 : 0);
    const std::vector<int> fold_ids(identity_order.begin() + cursor,
                                    identity_order.begin() + cursor + count);
    cursor += count;

    const std::int64_t matched_capacity =
        static_cast<std::int64_t>(count) * imgs * (imgs - 1) / 2;
    if (matched_capacity < matched_per_fold) {
      throw ProtocolError("fold " + std::to_string(f) + " offers only " +
                          std::to_string(matched_capacity) + " distinct matched pairs (" +
                          std::to_string(count) + " identities x C(" + std::to_string(imgs) +
                          ",2)); " + std::to_string(matched_per_fold) + " requested");
    }
    const std::int64_t mismatched_capacity =
        static_cast<std::int64_t>(count) * (count - 1) / 2 * imgs * imgs;
    if (mismatched_capacity < mismatched_per_fold) {
      throw ProtocolError("fold " + std::to_string(f) + " offers only " +
                          std::to_string(mismatched_capacity) + " distinct mismatched pairs; " +
                          std::to_string(mismatched_per_fold) + " requested");
    }

    Rng rng(derive_seed(seed, "fold-pairs", static_cast<std::uint64_t>(f)));
    Fold fold;
    fold.reserve(static_cast<std::size_t>(matched_per_fold) + mismatched_per_fold);
    std::unordered_set<std::uint64_t> seen;

    std::int64_t attempts = 0;
    const std::int64_t max_attempts =
        1000LL * (matched_per_fold + mismatched_per_fold) + 1000;
    while (static_cast<int>(fold.size()) < matched_per_fold) {
      if (++attempts > max_attempts) {
        throw ProtocolError("could not draw " + std::to_string(matched_per_fold) +
                            " distinct matched pairs for fold " + std::to_string(f));
      }
      const int identity = fold_ids[rng.next_below(fold_ids.size())];
      const int a = static_cast<int>(rng.next_below(imgs));
      int b = static_cast<int>(rng.next_below(imgs - 1));
      if (b >= a) ++b;
      const int lo = std::min(a, b);
      const int hi = std::max(a, b);
      if (!seen.insert(pair_key(identity, lo, identity, hi)).second) continue;
      fold.push_back({synthetic_entity_id(identity, lo), synthetic_entity_id(identity, hi),
                      PairLabel::kSame});
    }

    attempts = 0;
    while (static_cast<int>(fold.size()) < matched_per_fold + mismatched_per_fold) {
      if (++attempts > max_attempts) {
        throw ProtocolError("could not draw " + std::to_string(mismatched_per_fold) +
                            " distinct mismatched pairs for fold " + std::to_string(f));
      }
      const std::size_t first = rng.next_below(fold_ids.size());
      std::size_t second = rng.next_below(fold_ids.size() - 1);
      if (second >= first) ++second;
      int id_a = fold_ids[first];
      int id_b = fold_ids[second];
      int img_a = static_cast<int>(rng.next_below(imgs));
      int img_b = static_cast<int>(rng.next_below(imgs));
      if (id_a > id_b) {
        std::swap(id_a, id_b);
        std::swap(img_a, img_b);
      }
      if (!seen.insert(pair_key(id_a, img_a, id_b, img_b)).second) continue;
      fold.push_back({synthetic_entity_id(id_a, img_a), synthetic_entity_id(id_b, img_b),
                      PairLabel::kDifferent});
    }
    folds.push_back(std::move(fold));
  }
  return PairProtocol(std::move(folds));
}

}  // namespace facemap
