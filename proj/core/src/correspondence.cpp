#include "acrkit/correspondence.hpp"

#include <cmath>

#include "acrkit/error.hpp"

namespace acrkit {

void CorrespondenceSet::add(const PixelPoint& pa, const PixelPoint& pb,
                            std::optional<int> label, std::optional<TrackId> track) {
  const bool first = a.empty();
  a.push_back(pa);
  b.push_back(pb);
  if (label || !plane_label.empty()) {
    plane_label.resize(a.size() - 1);
    plane_label.push_back(label);
  }
  if (track) {
    if (!first && track_id.size() != a.size() - 1) {
      throw Error(ErrorKind::kInvalidInput, "track ids must be given for every pair or none");
    }
    track_id.push_back(*track);
  } else if (!track_id.empty()) {
    throw Error(ErrorKind::kInvalidInput, "track ids must be given for every pair or none");
  }
}

void CorrespondenceSet::validate() const {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kInvalidInput, "correspondence sides have unequal counts");
  }
  if (!plane_label.empty() && plane_label.size() != a.size()) {
    throw Error(ErrorKind::kInvalidInput, "plane_label length differs from pair count");
  }
  if (!track_id.empty() && track_id.size() != a.size()) {
    throw Error(ErrorKind::kInvalidInput, "track_id length differs from pair count");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i].u) || !std::isfinite(a[i].v) || !std::isfinite(b[i].u) ||
        !std::isfinite(b[i].v)) {
      throw Error(ErrorKind::kInvalidInput, "non-finite pixel coordinate");
    }
  }
}

CorrespondenceSet CorrespondenceSet::subset(std::span<const std::size_t> indices) const {
  CorrespondenceSet out;
  out.a.reserve(indices.size());
  out.b.reserve(indices.size());
  for (std::size_t i : indices) {
    out.a.push_back(a.at(i));
    out.b.push_back(b.at(i));
    if (!plane_label.empty()) out.plane_label.push_back(plane_label.at(i));
    if (!track_id.empty()) out.track_id.push_back(track_id.at(i));
  }
  return out;
}

CorrespondenceSet CorrespondenceSet::swapped() const {
  CorrespondenceSet out = *this;
  std::swap(out.a, out.b);
  return out;
}

}  // namespace acrkit
