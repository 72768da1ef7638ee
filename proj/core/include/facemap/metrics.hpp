#pragma once

#include <span>

#include "facemap/types.hpp"

namespace facemap {

/// Vectors with L2 norm below this are rejected as degenerate rather than
/// silently zeroed; silent zeros would corrupt accuracy statistics.
inline constexpr double kDegenerateNorm = 1e-30;

/// Scales v to unit L2 norm. Throws DegenerateVectorError for near-zero input.
Vector l2_normalize(const Vector& v);

/// 1 - cos(angle between u and v), in [0, 2].
double cosine_distance(const Vector& u, const Vector& v);

/// Cosine distance between the mapped source embedding map^T * x and the
/// target embedding y.
double mapped_distance(const Vector& x, const Vector& y, const LinearMap& map);

/// Mean of the first min(frames.size(), max_frames) frames, each frame
/// l2-normalized before averaging, the mean re-normalized afterwards.
Vector average_embeddings(std::span<const Vector> frames, int max_frames = 100);

namespace detail {

// Single shared expression for the cosine distance so the batch scorer and
// mapped_distance produce bit-identical values.
inline double cosine_from_parts(double dot, double norm_u, double norm_v) {
  return 1.0 - dot / (norm_u * norm_v);
}

}  // namespace detail

}  // namespace facemap
