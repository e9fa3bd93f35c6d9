#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "acrkit/geometry.hpp"

namespace acrkit {

using TrackId = std::int64_t;

/// Paired pixel coordinates between image A and image B.
///
/// `plane_label` and `track_id` are either empty or sized like the pairs.
/// Track ids give cross-pair point identity (the same physical point seen in
/// several image pairs).
struct CorrespondenceSet {
  std::vector<PixelPoint> a;
  std::vector<PixelPoint> b;
  std::vector<std::optional<int>> plane_label;
  std::vector<TrackId> track_id;

  std::size_t size() const { return a.size(); }
  bool empty() const { return a.empty(); }
  bool has_tracks() const { return !track_id.empty(); }

  void add(const PixelPoint& pa, const PixelPoint& pb,
           std::optional<int> label = std::nullopt,
           std::optional<TrackId> track = std::nullopt);

  /// Throws invalid-input on mismatched column lengths or non-finite points.
  void validate() const;

  CorrespondenceSet subset(std::span<const std::size_t> indices) const;
  /// A set with A and B swapped.
  CorrespondenceSet swapped() const;
};

}  // namespace acrkit
