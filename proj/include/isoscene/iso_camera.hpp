#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "isoscene/error.hpp"
#include "isoscene/raster.hpp"

namespace isoscene {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline Vec3 normalized(Vec3 a) {
  const double n = norm(a);
  return n > 0.0 ? a * (1.0 / n) : a;
}

// Row-major 2x3 affine map: [x', y'] = A * [x, y, 1].
struct Affine2 {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  Vec2 apply(Vec2 p) const { return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]}; }
  double determinant() const { return m[0] * m[4] - m[1] * m[3]; }

  Affine2 inverse() const {
    const double det = determinant();
    if (det == 0.0) throw Error("affine map is singular");
    const double a = m[4] / det, b = -m[1] / det, c = -m[3] / det, d = m[0] / det;
    return Affine2{{a, b, -(a * m[2] + b * m[5]), c, d, -(c * m[2] + d * m[5])}};
  }

  // (this o other)(p) = this(other(p))
  Affine2 compose(const Affine2& o) const {
    return Affine2{{m[0] * o.m[0] + m[1] * o.m[3], m[0] * o.m[1] + m[1] * o.m[4],
                    m[0] * o.m[2] + m[1] * o.m[5] + m[2], m[3] * o.m[0] + m[4] * o.m[3],
                    m[3] * o.m[1] + m[4] * o.m[4], m[3] * o.m[2] + m[4] * o.m[5] + m[5]}};
  }
};

namespace iso_axes {
inline const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
inline const double kInvSqrt3 = 1.0 / std::sqrt(3.0);
inline const double kInvSqrt6 = 1.0 / std::sqrt(6.0);
// Image right, image up and toward-camera directions in world coordinates.
inline const Vec3 kRight{kInvSqrt2, -kInvSqrt2, 0.0};
inline const Vec3 kUp{-kInvSqrt6, -kInvSqrt6, 2.0 * kInvSqrt6};
inline const Vec3 kTowardCamera{kInvSqrt3, kInvSqrt3, kInvSqrt3};
}  // namespace iso_axes

// True isometric orthographic camera. The camera sits in the +(1,1,1) octant and
// looks along -(1,1,1)/sqrt(3); world +Z is up and image y grows downward.
// Pixel (col, row) has its center at (col + 0.5, row + 0.5).
struct IsometricCamera {
  double pixels_per_world_unit = 5.0;
  int image_width = 512;
  int image_height = 512;
  Vec2 principal_point{256.0, 256.0};
  // Forward-axis distance from the image plane to the world origin. Depth of a
  // point p is depth_offset - p . (1,1,1)/sqrt(3).
  double depth_offset = 500.0;

  void validate() const {
    if (!(pixels_per_world_unit > 0.0) || !std::isfinite(pixels_per_world_unit)) {
      throw Error("camera: pixels_per_world_unit must be positive");
    }
    if (image_width <= 0 || image_height <= 0) throw Error("camera: image size must be positive");
    if (!std::isfinite(principal_point.x) || !std::isfinite(principal_point.y) ||
        !std::isfinite(depth_offset)) {
      throw Error("camera: non-finite parameters");
    }
  }
};

inline Vec2 project(Vec3 p, const IsometricCamera& cam) {
  const double s = cam.pixels_per_world_unit;
  return {cam.principal_point.x + s * dot(p, iso_axes::kRight),
          cam.principal_point.y - s * dot(p, iso_axes::kUp)};
}

inline double forward_depth(Vec3 p, const IsometricCamera& cam) {
  return cam.depth_offset - dot(p, iso_axes::kTowardCamera);
}

// Inverse of (project, forward_depth) for an image-plane point at the given depth.
inline Vec3 unproject(Vec2 pixel, double depth, const IsometricCamera& cam) {
  const double s = cam.pixels_per_world_unit;
  const double a = (pixel.x - cam.principal_point.x) / s;
  const double b = -(pixel.y - cam.principal_point.y) / s;
  return iso_axes::kRight * a + iso_axes::kUp * b + iso_axes::kTowardCamera * (cam.depth_offset - depth);
}

// Vertical image pixels spanned by one world unit of height.
inline double height_pixels_per_unit(const IsometricCamera& cam) {
  return cam.pixels_per_world_unit * 2.0 * iso_axes::kInvSqrt6;
}

// Image <-> ground-plane (Z = 0) map. Under an orthographic camera the plane
// homography reduces to this affine map: a 45 degree rotation combined with an
// anisotropic scale.
struct GroundRectifyMap {
  Affine2 forward;  // image px -> ground (X, Y)
  Affine2 inverse;  // ground (X, Y) -> image px

  Vec2 rectify(Vec2 pixel) const { return forward.apply(pixel); }
  Vec2 unrectify(Vec2 ground) const { return inverse.apply(ground); }
};

inline GroundRectifyMap ground_rectify_map(const IsometricCamera& cam) {
  cam.validate();
  const double s = cam.pixels_per_world_unit;
  const double r2 = std::sqrt(2.0);
  const double r6 = std::sqrt(6.0);
  // ix - px = s (X - Y)/sqrt2,  iy - py = s (X + Y)/sqrt6
  Affine2 inv{{s / r2, -s / r2, cam.principal_point.x, s / r6, s / r6, cam.principal_point.y}};
  // X = (sqrt2 dx + sqrt6 dy) / 2s,  Y = (sqrt6 dy - sqrt2 dx) / 2s
  const double a = r2 / (2.0 * s);
  const double b = r6 / (2.0 * s);
  const double px = cam.principal_point.x, py = cam.principal_point.y;
  Affine2 fwd{{a, b, -(a * px + b * py), -a, b, -(-a * px + b * py)}};
  return {fwd, inv};
}

// Dense depth along the camera forward axis plus a validity mask.
struct DepthMap {
  RealGrid values;
  Mask valid;

  DepthMap() = default;
  DepthMap(int width, int height) : values(width, height, 1, 0.0), valid(width, height, 1, 0) {}

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  bool is_valid(int x, int y) const { return valid.at(x, y) != 0; }
};

struct ScenePoint {
  Vec3 position;
  std::array<double, 3> color{0.0, 0.0, 0.0};
  std::int32_t label = 0;
};

inline Vec2 pixel_center(int col, int row) { return {col + 0.5, row + 0.5}; }

// One point per valid depth pixel, carrying the aligned color/label samples.
// color may be empty (no color attribute) or an H x W x 3 raster; labels may be empty.
inline std::vector<ScenePoint> unproject_depth(const DepthMap& depth, const IsometricCamera& cam,
                                               const RealGrid* color = nullptr,
                                               const LabelGrid* labels = nullptr) {
  cam.validate();
  if (color != nullptr && !color->empty()) require_same_extent(depth.values, *color, "unproject_depth");
  if (labels != nullptr && !labels->empty()) require_same_extent(depth.values, *labels, "unproject_depth");
  std::vector<ScenePoint> points;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.is_valid(x, y)) continue;
      ScenePoint pt;
      pt.position = unproject(pixel_center(x, y), depth.values.at(x, y), cam);
      if (color != nullptr && !color->empty()) {
        for (int c = 0; c < 3 && c < color->channels(); ++c) pt.color[c] = color->at(x, y, c);
      }
      if (labels != nullptr && !labels->empty()) pt.label = labels->at(x, y);
      points.push_back(pt);
    }
  }
  return points;
}

}  // namespace isoscene
