#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "acrkit/geometry.hpp"
#include "acrkit/pose_estimation.hpp"

namespace acrkit {

/// Per-pixel plane labeling of one image: 0 is background, 1..H are planes.
class PlaneSegmentMap {
 public:
  using Label = std::uint16_t;

  PlaneSegmentMap() = default;
  /// All-background map.
  PlaneSegmentMap(int width, int height);
  /// Row-major labels; throws invalid-input on a size mismatch.
  PlaneSegmentMap(int width, int height, std::vector<Label> labels);

  int width() const { return width_; }
  int height() const { return height_; }
  ImageSize size() const { return {width_, height_}; }
  const std::vector<Label>& labels() const { return labels_; }

  Label at(int x, int y) const { return labels_[index(x, y)]; }
  void set(int x, int y, Label label) { labels_[index(x, y)] = label; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  /// Label at the pixel nearest to q; 0 outside the image.
  Label label_at(const PixelPoint& q) const;

  /// Largest label id present.
  int plane_count() const;
  /// Pixel count per label id, index 0 is background.
  std::vector<std::size_t> histogram() const;
  /// Throws invalid-input unless ids are contiguous 1..H with no empty region.
  void validate() const;
  /// Relabels present ids to 1..H preserving their order.
  PlaneSegmentMap compacted() const;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Label> labels_;
};

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
PlaneSegmentMap read_pgm(const std::filesystem::path& path);
void write_pgm(const PlaneSegmentMap& map, const std::filesystem::path& path);

/// Squared Euclidean distance transform (Felzenszwalb-Huttenlocher) of a
/// width x height grid; `feature` marks the zero-distance pixels.
std::vector<double> squared_distance_transform(const std::vector<bool>& feature, int width,
                                               int height);

/// Disk erosion of every region. A pixel survives when no pixel of another
/// label lies within `radius`; pixels beyond the image border do not erode.
/// Regions that vanish are dropped and the remaining ids recompacted.
PlaneSegmentMap erode_mask(const PlaneSegmentMap& map, int radius);

/// Minimum Euclidean distance between pixel centers of regions a and b, with
/// 8-connected contact counted as touching (distance 0). Throws missing-plane
/// for an id with no pixels.
double min_region_distance(const PlaneSegmentMap& map, int a, int b);

/// All pairwise min_region_distance values of ids 1..plane_count(), 0-based.
/// Entries involving an absent id are NaN.
Eigen::MatrixXd region_distance_matrix(const PlaneSegmentMap& map);

}  // namespace acrkit
