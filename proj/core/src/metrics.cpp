#include "facemap/metrics.hpp"

#include <algorithm>
#include <string>

namespace facemap {

Vector l2_normalize(const Vector& v) {
  if (!v.allFinite()) throw NumericalError("cannot normalize a non-finite vector");
  const double norm = v.norm();
  if (norm < kDegenerateNorm) {
    throw DegenerateVectorError("cannot normalize a vector with norm " + std::to_string(norm));
  }
  return v / norm;
}

double cosine_distance(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw ProtocolError("cosine distance requires equal lengths, got " +
                        std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  if (!u.allFinite() || !v.allFinite()) {
    throw NumericalError("cosine distance requires finite vectors");
  }
  const double norm_u = u.norm();
  const double norm_v = v.norm();
  if (norm_u < kDegenerateNorm || norm_v < kDegenerateNorm) {
    throw DegenerateVectorError("cosine distance is undefined for near-zero vectors");
  }
  return detail::cosine_from_parts(u.dot(v), norm_u, norm_v);
}

double mapped_distance(const Vector& x, const Vector& y, const LinearMap& map) {
  if (x.size() != map.source_dim()) {
    throw ProtocolError("mapped distance: source vector has length " + std::to_string(x.size()) +
                        ", map expects " + std::to_string(map.source_dim()));
  }
  const Vector mapped = map.matrix.transpose() * x;
  return cosine_distance(mapped, y);
}

Vector average_embeddings(std::span<const Vector> frames, int max_frames) {
  if (frames.empty()) throw ProtocolError("cannot average an empty frame list");
  if (max_frames < 1) throw ProtocolError("max_frames must be positive");

  const std::size_t used = std::min(frames.size(), static_cast<std::size_t>(max_frames));
  const Eigen::Index dim = frames[0].size();
  Vector sum = Vector::Zero(dim);
  for (std::size_t i = 0; i < used; ++i) {
    if (frames[i].size() != dim) {
      throw ProtocolError("frame " + std::to_string(i) + " has length " +
                          std::to_string(frames[i].size()) + ", expected " + std::to_string(dim));
    }
    sum += l2_normalize(frames[i]);
  }
  return l2_normalize(Vector(sum / static_cast<double>(used)));
}

}  // namespace facemap
