#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isoscene/error.hpp"
#include "isoscene/fixture.hpp"
#include "isoscene/iso_camera.hpp"
#include "isoscene/raster.hpp"
#include "isoscene/scene.hpp"
#include "isoscene/sketch.hpp"

namespace isoscene {

// ---------------------------------------------------------------------------
// Hole filling shared by basemap completion and BEV splatting.

namespace fill_detail {

constexpr int kDx[4] = {-1, 1, 0, 0};
constexpr int kDy[4] = {0, 0, -1, 1};

// Fills every `hole` pixel reachable from a `known` pixel. Values are seeded by
// breadth-first peeling (neighbor mean, neighbor-majority label) and then
// relaxed to the discrete harmonic interpolant of the known boundary, which
// reproduces affine data exactly. Returns the mask of pixels that received a
// value.
inline Mask harmonic_fill(RealGrid& values, LabelGrid* labels, const Mask& known, const Mask& hole,
                          double tolerance = 1e-10, int max_sweeps = 20000) {
  const int W = values.width(), H = values.height(), C = values.channels();
  Mask assigned = known;
  std::vector<std::array<int, 2>> order;
  std::deque<std::array<int, 2>> queue;
  Mask queued(W, H, 1, 0);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!hole.at(x, y) || known.at(x, y)) continue;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx[k], ny = y + kDy[k];
        if (known.contains(nx, ny) && known.at(nx, ny)) {
          queue.push_back({x, y});
          queued.at(x, y) = 1;
          break;
        }
      }
    }
  }
  while (!queue.empty()) {
    // Process one BFS layer at a time so a layer only reads earlier layers.
    std::vector<std::array<int, 2>> layer(queue.begin(), queue.end());
    queue.clear();
    std::vector<std::vector<double>> layer_vals(layer.size(), std::vector<double>(static_cast<std::size_t>(C), 0.0));
    std::vector<std::int32_t> layer_labels(layer.size(), 0);
    for (std::size_t li = 0; li < layer.size(); ++li) {
      const auto [x, y] = layer[li];
      int n = 0;
      std::map<std::int32_t, int> votes;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx[k], ny = y + kDy[k];
        if (!assigned.contains(nx, ny) || !assigned.at(nx, ny)) continue;
        for (int c = 0; c < C; ++c) layer_vals[li][static_cast<std::size_t>(c)] += values.at(nx, ny, c);
        if (labels != nullptr) ++votes[labels->at(nx, ny)];
        ++n;
      }
      for (auto& v : layer_vals[li]) v /= n;
      if (labels != nullptr) {
        int best = -1;
        for (const auto& [label, count] : votes) {
          if (count > best) {
            best = count;
            layer_labels[li] = label;
          }
        }
      }
    }
    for (std::size_t li = 0; li < layer.size(); ++li) {
      const auto [x, y] = layer[li];
      for (int c = 0; c < C; ++c) values.at(x, y, c) = layer_vals[li][static_cast<std::size_t>(c)];
      if (labels != nullptr) labels->at(x, y) = layer_labels[li];
      assigned.at(x, y) = 1;
      order.push_back(layer[li]);
    }
    for (const auto& [x, y] : layer) {
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx[k], ny = y + kDy[k];
        if (!hole.contains(nx, ny) || !hole.at(nx, ny) || assigned.at(nx, ny) || queued.at(nx, ny)) continue;
        queued.at(nx, ny) = 1;
        queue.push_back({nx, ny});
      }
    }
  }

  // Successive over-relaxation toward the harmonic solution; neighbors outside
  // the assigned set are ignored (natural boundary).
  const double omega = 1.9;
  for (int sweep = 0; sweep < max_sweeps && !order.empty(); ++sweep) {
    double max_change = 0.0;
    for (const auto& [x, y] : order) {
      for (int c = 0; c < C; ++c) {
        double sum = 0.0;
        int n = 0;
        for (int k = 0; k < 4; ++k) {
          const int nx = x + kDx[k], ny = y + kDy[k];
          if (!assigned.contains(nx, ny) || !assigned.at(nx, ny)) continue;
          sum += values.at(nx, ny, c);
          ++n;
        }
        const double target = sum / n;
        const double old = values.at(x, y, c);
        const double next = old + omega * (target - old);
        values.at(x, y, c) = next;
        max_change = std::max(max_change, std::abs(next - old));
      }
    }
    if (max_change < tolerance) break;
  }
  return assigned;
}

}  // namespace fill_detail

// ---------------------------------------------------------------------------

struct CompletedFrame {
  RealGrid color;
  DepthMap depth;
  LabelGrid semantic;
};

inline Mask union_of_instances(const IsometricFrame& frame) {
  Mask m(frame.width(), frame.height(), 1, 0);
  for (const auto& inst : frame.instances) {
    require_same_extent(m, inst.mask, "instance mask");
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = (m[i] || inst.mask[i]) ? 1 : 0;
  }
  return m;
}

// Empty-terrain basemap: pixels under fg_mask are re-filled from the
// surrounding background by neighbor diffusion; other pixels are untouched.
inline CompletedFrame complete_basemap(const IsometricFrame& frame, const Mask& fg_mask) {
  require_same_extent(frame.color, fg_mask, "complete_basemap");
  CompletedFrame out{frame.color, frame.depth, frame.semantic};
  const int W = frame.width(), H = frame.height();
  Mask known(W, H, 1, 0);
  std::size_t known_count = 0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!fg_mask.at(x, y) && frame.depth.is_valid(x, y)) {
        known.at(x, y) = 1;
        ++known_count;
      }
    }
  }
  const std::size_t masked = count_set(fg_mask);
  if (masked == 0) return out;
  if (masked == fg_mask.size() || known_count == 0) throw Error("no background context");

  // Fill depth and color jointly so they share one peel order.
  RealGrid joint(W, H, 4, 0.0);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      joint.at(x, y, 0) = frame.depth.values.at(x, y);
      for (int c = 0; c < 3; ++c) joint.at(x, y, 1 + c) = frame.color.at(x, y, c);
    }
  }
  const Mask assigned = fill_detail::harmonic_fill(joint, &out.semantic, known, fg_mask);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!fg_mask.at(x, y)) continue;
      if (assigned.at(x, y)) {
        out.depth.values.at(x, y) = joint.at(x, y, 0);
        out.depth.valid.at(x, y) = 1;
        for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = joint.at(x, y, 1 + c);
      } else {
        out.depth.valid.at(x, y) = 0;
        out.semantic.at(x, y) = 0;
        for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = 0.0;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Heightmap

// Vertex grid the BEV rasters are built on. Unset fields are derived from the
// extent of the point cloud.
struct BevGridSpec {
  double cell_size = 1.0;
  std::optional<double> origin_x;
  std::optional<double> origin_y;
  std::optional<int> width;
  std::optional<int> height;
};

struct HeightmapExtraction {
  Heightmap heightmap;
  RealGrid bev_depth;  // top-down depth per vertex
  double d_max = 0.0;
  double camera_elevation = 0.0;
  LabelGrid bev_semantic;
  RealGrid bev_color;
  Mask observed;  // vertices that received at least one point
};

// Reprojects the completed frame to 3D, keeps per BEV vertex the elevation of
// the point nearest to it in plan, fills unobserved vertices by neighbor
// diffusion, and converts top-down depth d to height h = d_max - d (absolute
// elevation = datum + h).
inline HeightmapExtraction extract_heightmap(const CompletedFrame& completed, const IsometricCamera& cam,
                                             const BevGridSpec& grid = {}) {
  if (!(grid.cell_size > 0.0)) throw Error("extract_heightmap: cell size must be positive");
  const auto points = unproject_depth(completed.depth, cam, &completed.color, &completed.semantic);
  if (points.empty()) throw Error("extract_heightmap: empty point set");

  double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300, maxz = -1e300;
  for (const auto& p : points) {
    minx = std::min(minx, p.position.x);
    maxx = std::max(maxx, p.position.x);
    miny = std::min(miny, p.position.y);
    maxy = std::max(maxy, p.position.y);
    maxz = std::max(maxz, p.position.z);
  }
  const double c = grid.cell_size;
  const double ox = grid.origin_x.value_or(std::round(minx / c) * c);
  const double oy = grid.origin_y.value_or(std::round(miny / c) * c);
  const int W = grid.width.value_or(static_cast<int>(std::lround((maxx - ox) / c)) + 1);
  const int H = grid.height.value_or(static_cast<int>(std::lround((maxy - oy) / c)) + 1);
  if (W < 1 || H < 1) throw Error("extract_heightmap: empty BEV grid");

  HeightmapExtraction out;
  out.camera_elevation = maxz + 1.0;
  RealGrid top_z(W, H, 1, 0.0);
  RealGrid nearest_d2(W, H, 1, std::numeric_limits<double>::infinity());
  RealGrid color_sum(W, H, 3, 0.0);
  Raster<std::int32_t> counts(W, H, 1, 0);
  std::vector<std::map<std::int32_t, int>> votes(static_cast<std::size_t>(W) * H);
  for (const auto& p : points) {
    const int i = static_cast<int>(std::lround((p.position.x - ox) / c));
    const int j = static_cast<int>(std::lround((p.position.y - oy) / c));
    if (i < 0 || j < 0 || i >= W || j >= H) continue;
    const double dx = p.position.x - (ox + i * c), dy = p.position.y - (oy + j * c);
    const double d2 = dx * dx + dy * dy;
    if (d2 < nearest_d2.at(i, j)) {
      nearest_d2.at(i, j) = d2;
      top_z.at(i, j) = p.position.z;
    }
    for (int k = 0; k < 3; ++k) color_sum.at(i, j, k) += p.color[static_cast<std::size_t>(k)];
    ++counts.at(i, j);
    ++votes[static_cast<std::size_t>(j) * W + i][p.label];
  }
  out.observed = Mask(W, H, 1, 0);
  // Joint fill of [z, r, g, b].
  RealGrid joint(W, H, 4, 0.0);
  out.bev_semantic = LabelGrid(W, H, 1, 0);
  for (int j = 0; j < H; ++j) {
    for (int i = 0; i < W; ++i) {
      const int n = counts.at(i, j);
      if (n == 0) continue;
      out.observed.at(i, j) = 1;
      joint.at(i, j, 0) = top_z.at(i, j);
      for (int k = 0; k < 3; ++k) joint.at(i, j, 1 + k) = color_sum.at(i, j, k) / n;
      int best = -1;
      for (const auto& [label, count] : votes[static_cast<std::size_t>(j) * W + i]) {
        if (count > best) {
          best = count;
          out.bev_semantic.at(i, j) = label;
        }
      }
    }
  }
  if (count_set(out.observed) == 0) throw Error("extract_heightmap: no points fall inside the BEV grid");
  const Mask holes(W, H, 1, 1);
  const Mask assigned = fill_detail::harmonic_fill(joint, &out.bev_semantic, out.observed, holes);
  if (count_set(assigned) != assigned.size()) throw Error("extract_heightmap: BEV grid not connected");

  out.bev_depth = RealGrid(W, H, 1, 0.0);
  out.bev_color = RealGrid(W, H, 3, 0.0);
  out.d_max = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < H; ++j) {
    for (int i = 0; i < W; ++i) {
      out.bev_depth.at(i, j) = out.camera_elevation - joint.at(i, j, 0);
      out.d_max = std::max(out.d_max, out.bev_depth.at(i, j));
      for (int k = 0; k < 3; ++k) out.bev_color.at(i, j, k) = joint.at(i, j, 1 + k);
    }
  }
  out.heightmap = Heightmap(W, H, c, ox, oy);
  out.heightmap.datum = out.camera_elevation - out.d_max;
  for (std::size_t k = 0; k < out.bev_depth.size(); ++k) out.heightmap.values[k] = out.d_max - out.bev_depth[k];
  return out;
}

// ---------------------------------------------------------------------------
// Water

inline constexpr double kDefaultBedOffset = 0.5;

struct WaterLowering {
  Heightmap heightmap;
  std::vector<double> water_levels;  // absolute, one per region
};

// Inside each region: h := min(h, level - bed_offset), where level is the
// lowest elevation on the region's outer 4-neighbor ring.
inline WaterLowering lower_water(const Heightmap& heightmap, const std::vector<Mask>& regions,
                                 double bed_offset = kDefaultBedOffset) {
  WaterLowering out{heightmap, {}};
  for (const auto& region : regions) {
    if (region.width() != heightmap.width() || region.height() != heightmap.height()) {
      throw Error("lower_water: region outside heightmap bounds");
    }
    const Mask ring = region_boundary_ring(region);
    if (count_set(ring) == 0) throw Error("lower_water: region has an empty boundary");
    double level = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ring.size(); ++i) {
      if (ring[i]) level = std::min(level, heightmap.datum + heightmap.values[i]);
    }
    const double cap = level - bed_offset - heightmap.datum;
    for (std::size_t i = 0; i < region.size(); ++i) {
      if (region[i]) out.heightmap.values[i] = std::min(out.heightmap.values[i], cap);
    }
    out.water_levels.push_back(level);
  }
  return out;
}

// 4-connected components of cells carrying `label`.
inline std::vector<Mask> label_regions(const LabelGrid& labels, std::int32_t label) {
  const int W = labels.width(), H = labels.height();
  Mask seen(W, H, 1, 0);
  std::vector<Mask> regions;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (seen.at(x, y) || labels.at(x, y) != label) continue;
      Mask region(W, H, 1, 0);
      std::deque<std::array<int, 2>> q{{x, y}};
      seen.at(x, y) = 1;
      while (!q.empty()) {
        const auto [cx, cy] = q.front();
        q.pop_front();
        region.at(cx, cy) = 1;
        for (int k = 0; k < 4; ++k) {
          const int nx = cx + fill_detail::kDx[k], ny = cy + fill_detail::kDy[k];
          if (!labels.contains(nx, ny) || seen.at(nx, ny) || labels.at(nx, ny) != label) continue;
          seen.at(nx, ny) = 1;
          q.push_back({nx, ny});
        }
      }
      regions.push_back(std::move(region));
    }
  }
  return regions;
}

// Convex hull (counter-clockwise) of the cell squares of a region.
inline std::vector<Vec2> region_hull(const Mask& region, const Heightmap& grid) {
  std::vector<Vec2> pts;
  const double half = 0.5 * grid.cell_size;
  for (int j = 0; j < region.height(); ++j) {
    for (int i = 0; i < region.width(); ++i) {
      if (!region.at(i, j)) continue;
      const Vec2 p = grid.vertex_position(i, j);
      pts.push_back({p.x - half, p.y - half});
      pts.push_back({p.x + half, p.y - half});
      pts.push_back({p.x + half, p.y + half});
      pts.push_back({p.x - half, p.y + half});
    }
  }
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  if (pts.size() < 3) return pts;
  auto cross2 = [](Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); };
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    const Vec2 p = pts[i - 1];
    while (k >= t && cross2(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

// ---------------------------------------------------------------------------
// Splatmap

inline constexpr int kSplatFeatherSize = 5;
inline constexpr double kSplatFeatherSigma = 1.0;

// Label id -> splat channel.
using ChannelTable = std::map<std::int32_t, int>;

inline ChannelTable default_channel_table() {
  ChannelTable t;
  const auto& cats = terrain_categories();
  for (std::size_t k = 0; k < cats.size(); ++k) t[static_cast<std::int32_t>(cats[k])] = static_cast<int>(k);
  return t;
}

// One-hot per cell, feathered by a normalized Gaussian, renormalized to sum 1.
inline Splatmap extract_splatmap(const LabelGrid& bev_semantic, const ChannelTable& table,
                                 const std::vector<Category>& channel_categories,
                                 int feather_size = kSplatFeatherSize, double feather_sigma = kSplatFeatherSigma) {
  const int K = static_cast<int>(channel_categories.size());
  if (K < 1) throw Error("extract_splatmap: no channels");
  const int W = bev_semantic.width(), H = bev_semantic.height();
  std::vector<RealGrid> planes(static_cast<std::size_t>(K), RealGrid(W, H, 1, 0.0));
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const auto label = bev_semantic.at(x, y);
      const auto it = table.find(label);
      if (it == table.end() || it->second < 0 || it->second >= K) {
        throw Error("extract_splatmap: unmapped label " + std::to_string(label));
      }
      planes[static_cast<std::size_t>(it->second)].at(x, y) = 1.0;
    }
  }
  Splatmap s;
  s.channel_categories = channel_categories;
  s.weights = RealGrid(W, H, K, 0.0);
  const RealGrid kernel = gaussian_kernel(feather_size, feather_sigma);
  for (int k = 0; k < K; ++k) {
    const RealGrid f = convolve_replicate(planes[static_cast<std::size_t>(k)], kernel);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) s.weights.at(x, y, k) = f.at(x, y);
    }
  }
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double sum = 0.0;
      for (int k = 0; k < K; ++k) sum += s.weights.at(x, y, k);
      for (int k = 0; k < K; ++k) s.weights.at(x, y, k) /= sum;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Foreground objects

// Axis-aligned image box through the extreme pixel centers of a mask. Mask
// geometry is measured at pixel centers throughout so the bbox, the warped
// extremes and the top row share one convention.
struct PixelBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double area() const { return (x1 - x0) * (y1 - y0); }
};

inline PixelBox mask_bbox(const Mask& mask) {
  int minx = mask.width(), miny = mask.height(), maxx = -1, maxy = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      minx = std::min(minx, x);
      maxx = std::max(maxx, x);
      miny = std::min(miny, y);
      maxy = std::max(maxy, y);
    }
  }
  if (maxx < 0) throw Error("empty instance mask");
  return {minx + 0.5, miny + 0.5, maxx + 0.5, maxy + 0.5};
}

namespace footprint_detail {

// Intersection of the line through (a, b) with the line through (c, d).
inline Vec2 intersect_lines(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const Vec2 r = b - a, s = d - c;
  const double den = r.x * s.y - r.y * s.x;
  if (std::abs(den) < 1e-15) throw Error("degenerate bbox: parallel sides");
  const double t = ((c.x - a.x) * s.y - (c.y - a.y) * s.x) / den;
  return a + r * t;
}

}  // namespace footprint_detail

// Ground footprint of an extruded object in the rectified (Z = 0) frame.
// (x1, y1) is the per-axis maximum of the warped mask; x2 comes from the
// line y = y1 meeting the warped left edge of the image bounding box, y2 from
// x = x1 meeting the warped right edge.
inline Footprint estimate_footprint(const Mask& mask, const PixelBox& bbox, const GroundRectifyMap& rectify) {
  if (count_set(mask) == 0) throw Error("empty instance mask");
  if (!(bbox.area() > 0.0)) throw Error("degenerate bbox");
  double x1 = -1e300, y1 = -1e300;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const Vec2 g = rectify.rectify(pixel_center(x, y));
      x1 = std::max(x1, g.x);
      y1 = std::max(y1, g.y);
    }
  }
  using footprint_detail::intersect_lines;
  const Vec2 left_a = rectify.rectify({bbox.x0, bbox.y0}), left_b = rectify.rectify({bbox.x0, bbox.y1});
  const Vec2 right_a = rectify.rectify({bbox.x1, bbox.y0}), right_b = rectify.rectify({bbox.x1, bbox.y1});
  const double x2 = intersect_lines({0.0, y1}, {1.0, y1}, left_a, left_b).x;
  const double y2 = intersect_lines({x1, 0.0}, {x1, 1.0}, right_a, right_b).y;
  Footprint f{x2, x1, y2, y1, 0.0};
  if (!f.valid()) throw Error("degenerate footprint");
  return f;
}

// The first pixel center inside a silhouette's top vertex sits slightly below
// the vertex; measured over random fixtures the remaining bias of the
// center-based top row is about 0.1 px.
inline constexpr double kApexInsetPx = 0.1;

// Vertical pixel extent of the mask above the footprint's back corner,
// converted to world units.
inline double estimate_height(const Mask& mask, const Footprint& footprint, const GroundRectifyMap& rectify,
                              const IsometricCamera& cam) {
  if (!footprint.valid()) throw Error("estimate_height: invalid footprint");
  const PixelBox box = mask_bbox(mask);
  const Vec2 back = rectify.unrectify({footprint.min_x, footprint.min_y});
  const double pixels = back.y - (box.y0 - kApexInsetPx);
  const double hppu = height_pixels_per_unit(cam);
  if (pixels < -1.0) throw Error("inconsistent extrusion");
  return std::max(0.0, pixels) / hppu;
}

// Category -> asset reference used by placements.
using AssetTable = std::map<std::string, std::string>;

struct PlacementDiagnostic {
  int instance_id = 0;
  std::string message;
};

struct PlacementResult {
  std::vector<ObjectPlacement> placements;
  std::vector<PlacementDiagnostic> diagnostics;
};

// Lowest visible point of an instance, from the frame's own depth. For an
// extruded object standing on the ground this is its base.
inline std::optional<double> instance_base_from_depth(const Mask& mask, const DepthMap& depth,
                                                      const IsometricCamera& cam) {
  std::optional<double> zmin;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y) || !depth.is_valid(x, y)) continue;
      const double z = unproject(pixel_center(x, y), depth.values.at(x, y), cam).z;
      if (!zmin || z < *zmin) zmin = z;
    }
  }
  return zmin;
}

// Footprint, height and base elevation per instance. The rectified footprint
// assumes ground at Z = 0; a point at elevation z rectifies to (X - z, Y - z),
// so the footprint is shifted by the base elevation seen in the instance's
// depth (or, without depth, by the fixed point of z = heightmap(center + z)).
// base_elevation itself is the heightmap sample at the shifted center.
inline PlacementResult build_placements(const IsometricFrame& frame, const Heightmap& heightmap,
                                        const GroundRectifyMap& rectify, const IsometricCamera& cam,
                                        const AssetTable& assets = {}) {
  PlacementResult res;
  for (const auto& inst : frame.instances) {
    try {
      const PixelBox box = mask_bbox(inst.mask);
      const Footprint flat = estimate_footprint(inst.mask, box, rectify);
      const double height = estimate_height(inst.mask, flat, rectify, cam);
      std::optional<double> z = instance_base_from_depth(inst.mask, frame.depth, cam);
      if (!z) {
        double zi = heightmap.sample(flat.center());
        for (int it = 0; it < 64; ++it) {
          const Vec2 c = flat.center();
          const double next = heightmap.sample({c.x + zi, c.y + zi});
          const bool done = std::abs(next - zi) < 1e-9;
          zi = next;
          if (done) break;
        }
        z = zi;
      }
      ObjectPlacement p;
      p.instance_id = inst.id;
      p.category = inst.category;
      p.footprint = flat.translated(*z, *z);
      p.height = height;
      p.base_elevation = heightmap.sample(p.footprint.center());
      const auto it = assets.find(category_name(inst.category));
      p.asset_ref = it != assets.end() ? it->second : std::string("proxy:") + category_name(inst.category);
      if (!(p.height > 0.0)) throw Error("zero object height");
      res.placements.push_back(p);
    } catch (const Error& e) {
      res.diagnostics.push_back({inst.id, e.what()});
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Whole stage

struct UnderstandingConfig {
  BevGridSpec grid;
  double bed_offset = kDefaultBedOffset;
  int feather_size = kSplatFeatherSize;
  double feather_sigma = kSplatFeatherSigma;
  AssetTable assets;
};

struct UnderstandingResult {
  CompletedFrame completed;
  HeightmapExtraction extraction;
  Heightmap heightmap;  // after water lowering
  std::vector<Mask> water_cells;
  std::vector<WaterRegion> water_regions;
  Splatmap splat;
  PlacementResult placements;
};

inline UnderstandingResult run_understanding(const IsometricFrame& frame, const UnderstandingConfig& cfg) {
  UnderstandingResult r;
  r.completed = complete_basemap(frame, union_of_instances(frame));
  r.extraction = extract_heightmap(r.completed, frame.camera, cfg.grid);
  r.water_cells = label_regions(r.extraction.bev_semantic, static_cast<std::int32_t>(Category::kWater));
  // Regions touching the grid border have no ring on that side but still a
  // boundary elsewhere; a region filling the grid has none and is skipped.
  std::vector<Mask> lowered;
  for (const auto& region : r.water_cells) {
    if (count_set(region_boundary_ring(region)) > 0) lowered.push_back(region);
  }
  r.water_cells = lowered;
  const WaterLowering wl = lower_water(r.extraction.heightmap, r.water_cells, cfg.bed_offset);
  r.heightmap = wl.heightmap;
  for (std::size_t k = 0; k < r.water_cells.size(); ++k) {
    r.water_regions.push_back({region_hull(r.water_cells[k], r.heightmap), wl.water_levels[k]});
  }
  r.splat = extract_splatmap(r.extraction.bev_semantic, default_channel_table(), terrain_categories(),
                             cfg.feather_size, cfg.feather_sigma);
  r.placements = build_placements(frame, r.heightmap, ground_rectify_map(frame.camera), frame.camera, cfg.assets);
  return r;
}

}  // namespace isoscene
