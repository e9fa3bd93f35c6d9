#include "acrkit/plane_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "acrkit/error.hpp"

namespace acrkit {
namespace {

constexpr double kFar = 1e20;

void dt1d(const double* f, int n, double* d, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * (q - v[k]));
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * (q - v[k]));
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

PlaneSegmentMap::PlaneSegmentMap(int width, int height)
    : PlaneSegmentMap(width, height,
                      std::vector<Label>(static_cast<std::size_t>(std::max(0, width)) *
                                         static_cast<std::size_t>(std::max(0, height)))) {}

PlaneSegmentMap::PlaneSegmentMap(int width, int height, std::vector<Label> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  if (width < 0 || height < 0 ||
      labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorKind::kInvalidInput, "label buffer does not match map size");
  }
}

PlaneSegmentMap::Label PlaneSegmentMap::label_at(const PixelPoint& q) const {
  const int x = static_cast<int>(std::floor(q.u + 0.5));
  const int y = static_cast<int>(std::floor(q.v + 0.5));
  return contains(x, y) ? at(x, y) : Label{0};
}

int PlaneSegmentMap::plane_count() const {
  Label m = 0;
  for (Label l : labels_) m = std::max(m, l);
  return m;
}

std::vector<std::size_t> PlaneSegmentMap::histogram() const {
  std::vector<std::size_t> h(static_cast<std::size_t>(plane_count()) + 1, 0);
  for (Label l : labels_) ++h[l];
  return h;
}

void PlaneSegmentMap::validate() const {
  const auto h = histogram();
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i] == 0) {
      throw Error(ErrorKind::kInvalidInput,
                  "plane ids are not contiguous: id " + std::to_string(i) + " is empty");
    }
  }
}

PlaneSegmentMap PlaneSegmentMap::compacted() const {
  const auto h = histogram();
  std::vector<Label> remap(h.size(), 0);
  Label next = 1;
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i] > 0) remap[i] = next++;
  }
  std::vector<Label> out(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) out[i] = remap[labels_[i]];
  return {width_, height_, std::move(out)};
}

PlaneSegmentMap read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingInput, "cannot open " + path.string());
  const auto token = [&]() {
    std::string t;
    while (in >> std::ws && in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
    }
    in >> t;
    return t;
  };
  if (token() != "P5") throw Error(ErrorKind::kInvalidInput, "not a binary PGM: " + path.string());
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw Error(ErrorKind::kInvalidInput, "malformed PGM header: " + path.string());
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw Error(ErrorKind::kInvalidInput, "unsupported PGM geometry: " + path.string());
  }
  in.get();  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(n * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw Error(ErrorKind::kInvalidInput, "truncated PGM raster: " + path.string());
  }
  std::vector<PlaneSegmentMap::Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = bytes == 2 ? static_cast<PlaneSegmentMap::Label>((raw[2 * i] << 8) | raw[2 * i + 1])
                           : raw[i];
  }
  return {w, h, std::move(labels)};
}

void write_pgm(const PlaneSegmentMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kInvalidInput, "cannot write " + path.string());
  out << "P5\n" << map.width() << ' ' << map.height() << "\n65535\n";
  std::vector<unsigned char> raw(map.labels().size() * 2);
  for (std::size_t i = 0; i < map.labels().size(); ++i) {
    raw[2 * i] = static_cast<unsigned char>(map.labels()[i] >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(map.labels()[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

std::vector<double> squared_distance_transform(const std::vector<bool>& feature, int width,
                                               int height) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = feature[i] ? 0.0 : kFar;
  const int len = std::max(width, height);
  std::vector<double> f(len), d(len), z(len + 1);
  std::vector<int> v(len);
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) f[y] = g[static_cast<std::size_t>(y) * width + x];
    dt1d(f.data(), height, d.data(), v.data(), z.data());
    for (int y = 0; y < height; ++y) g[static_cast<std::size_t>(y) * width + x] = d[y];
  }
  for (int y = 0; y < height; ++y) {
    double* row = g.data() + static_cast<std::size_t>(y) * width;
    std::copy(row, row + width, f.begin());
    dt1d(f.data(), width, row, v.data(), z.data());
  }
  return g;
}

PlaneSegmentMap erode_mask(const PlaneSegmentMap& map, int radius) {
  if (radius < 0) throw Error(ErrorKind::kInvalidInput, "erosion radius must be >= 0");
  if (radius == 0) return map;
  // The nearest foreign pixel of any eroded pixel is 4-adjacent to the
  // region, so stamping disks around those pixels is exact.
  std::vector<std::pair<int, int>> disk;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) disk.emplace_back(dx, dy);
    }
  }
  const int w = map.width(), h = map.height();
  const auto& in = map.labels();
  std::vector<PlaneSegmentMap::Label> out = in;
  for (int y = 0; y < h; ++y) {
    const auto* row = in.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const auto lq = row[x];
      PlaneSegmentMap::Label cand[4] = {
          x + 1 < w ? row[x + 1] : lq, x > 0 ? row[x - 1] : lq,
          y + 1 < h ? row[x + w] : lq, y > 0 ? row[x - w] : lq};
      PlaneSegmentMap::Label seen[4];
      int n_seen = 0;
      for (auto l : cand) {
        if (l == 0 || l == lq || std::find(seen, seen + n_seen, l) != seen + n_seen) continue;
        seen[n_seen++] = l;
      }
      for (int k = 0; k < n_seen; ++k) {
        for (const auto& [dx, dy] : disk) {
          const int px = x + dx, py = y + dy;
          if (px < 0 || py < 0 || px >= w || py >= h) continue;
          const std::size_t i = static_cast<std::size_t>(py) * w + px;
          if (in[i] == seen[k]) out[i] = 0;
        }
      }
    }
  }
  return PlaneSegmentMap(w, h, std::move(out)).compacted();
}

namespace {

using Pixel = std::pair<int, int>;

// Pixels of each label with a 4-neighbour of another label. The closest pair
// between two regions always consists of such pixels.
std::vector<std::vector<Pixel>> region_boundaries(const PlaneSegmentMap& map) {
  std::vector<std::vector<Pixel>> out(static_cast<std::size_t>(map.plane_count()) + 1);
  std::vector<char> present(out.size(), 0);
  const int w = map.width(), h = map.height();
  for (int y = 0; y < h; ++y) {
    const auto* row = map.labels().data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const auto l = row[x];
      present[l] = 1;
      if (l == 0) continue;
      if ((x + 1 < w && row[x + 1] != l) || (x > 0 && row[x - 1] != l) ||
          (y + 1 < h && row[x + w] != l) || (y > 0 && row[x - w] != l)) {
        out[l].emplace_back(x, y);
      }
    }
  }
  // A region filling the whole image has no boundary but still exists.
  for (std::size_t l = 1; l < out.size(); ++l) {
    if (present[l] && out[l].empty()) out[l].emplace_back(-1, -1);
    std::sort(out[l].begin(), out[l].end());
  }
  return out;
}

// `b` must be sorted by x.
double boundary_distance(const std::vector<Pixel>& a, const std::vector<Pixel>& b) {
  long best = std::numeric_limits<long>::max();
  for (const auto& [ax, ay] : a) {
    const auto mid = std::lower_bound(b.begin(), b.end(), Pixel{ax, std::numeric_limits<int>::min()});
    for (auto it = mid; it != b.end(); ++it) {
      const long dx = it->first - ax;
      if (dx * dx >= best) break;
      const long dy = it->second - ay;
      best = std::min(best, dx * dx + dy * dy);
    }
    for (auto it = mid; it != b.begin();) {
      --it;
      const long dx = ax - it->first;
      if (dx * dx >= best) break;
      const long dy = it->second - ay;
      best = std::min(best, dx * dx + dy * dy);
    }
    if (best <= 2) break;
  }
  // Diagonal neighbours (squared distance 2) count as touching.
  return best <= 2 ? 0.0 : std::sqrt(static_cast<double>(best));
}

}  // namespace

Eigen::MatrixXd region_distance_matrix(const PlaneSegmentMap& map) {
  const auto bd = region_boundaries(map);
  const int n = static_cast<int>(bd.size()) - 1;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (bd[a + 1].empty() || bd[b + 1].empty()) {
        d(a, b) = d(b, a) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      d(a, b) = d(b, a) = boundary_distance(bd[a + 1], bd[b + 1]);
    }
  }
  return d;
}

double min_region_distance(const PlaneSegmentMap& map, int a, int b) {
  const auto bd = region_boundaries(map);
  const auto present = [&](int id) {
    return id >= 1 && static_cast<std::size_t>(id) < bd.size() && !bd[id].empty();
  };
  if (!present(a)) throw Error(ErrorKind::kMissingPlane, "no plane with id " + std::to_string(a));
  if (!present(b)) throw Error(ErrorKind::kMissingPlane, "no plane with id " + std::to_string(b));
  if (a == b) return 0.0;
  return boundary_distance(bd[a], bd[b]);
}

}  // namespace acrkit
