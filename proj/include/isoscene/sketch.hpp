#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "isoscene/error.hpp"
#include "isoscene/png_io.hpp"
#include "isoscene/raster.hpp"
#include "isoscene/scene.hpp"

namespace isoscene {

// Multi-category binary sketch, one channel per category. Channels may overlap.
struct SketchMap {
  Raster<std::uint8_t> channels;  // W x H x N, values in {0, 1}
  std::vector<std::string> category_names;

  int width() const { return channels.width(); }
  int height() const { return channels.height(); }
  int channel_count() const { return channels.channels(); }

  void validate() const {
    if (channels.channels() < 1) throw Error("sketch: at least one channel required");
    if (static_cast<int>(category_names.size()) != channels.channels()) {
      throw Error("sketch: category name count does not match channel count");
    }
    for (auto v : channels.storage()) {
      if (v > 1) throw Error("sketch: values must be 0 or 1");
    }
  }
};

inline constexpr int kSalKernelSize = 11;
inline constexpr double kSalFloor = 0.1;
inline constexpr double kDefaultSalSigma = 2.0;

// Pixel is set iff any channel is set.
inline Mask channel_max(const SketchMap& sketch) {
  sketch.validate();
  Mask out(sketch.width(), sketch.height(), 1, 0);
  for (int y = 0; y < sketch.height(); ++y) {
    for (int x = 0; x < sketch.width(); ++x) {
      std::uint8_t any = 0;
      for (int c = 0; c < sketch.channel_count(); ++c) any = std::max(any, sketch.channels.at(x, y, c));
      out.at(x, y) = any;
    }
  }
  return out;
}

// size x size Gaussian sampled at integer offsets and normalized to sum 1.
inline RealGrid gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw Error("gaussian kernel: size must be odd and positive");
  if (!(sigma > 0.0)) throw Error("gaussian kernel: sigma must be positive");
  RealGrid k(size, size, 1, 0.0);
  const int r = size / 2;
  double sum = 0.0;
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      const double v = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
      k.at(x + r, y + r) = v;
      sum += v;
    }
  }
  for (auto& v : k.storage()) v /= sum;
  return k;
}

// Single-channel convolution with replicate-padded borders.
inline RealGrid convolve_replicate(const RealGrid& src, const RealGrid& kernel) {
  if (src.channels() != 1) throw Error("convolve: single-channel input expected");
  const int rx = kernel.width() / 2, ry = kernel.height() / 2;
  RealGrid out(src.width(), src.height(), 1, 0.0);
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      double acc = 0.0;
      for (int ky = -ry; ky <= ry; ++ky) {
        for (int kx = -rx; kx <= rx; ++kx) acc += kernel.at(kx + rx, ky + ry) * src.clamped(x + kx, y + ky);
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

// Loss weight raster: max(0.1, blur(any-channel(S))).
inline RealGrid sal_weights(const SketchMap& sketch, double sigma = kDefaultSalSigma) {
  if (!(sigma > 0.0)) throw Error("sal_weights: sigma must be positive");
  const Mask support = channel_max(sketch);
  RealGrid f(support.width(), support.height(), 1, 0.0);
  for (std::size_t i = 0; i < support.size(); ++i) f[i] = support[i] ? 1.0 : 0.0;
  RealGrid w = convolve_replicate(f, gaussian_kernel(kSalKernelSize, sigma));
  for (auto& v : w.storage()) v = std::max(kSalFloor, v);
  return w;
}

inline double plain_mse(const RealGrid& a, const RealGrid& b) {
  if (!a.same_shape(b)) throw Error("mse: shape mismatch");
  if (a.empty()) throw Error("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

// Mean over elements of (omega * (eps - eps_pred))^2, omega broadcast over channels.
inline double sal_loss(const RealGrid& eps_true, const RealGrid& eps_pred, const RealGrid& omega) {
  if (!eps_true.same_shape(eps_pred)) throw Error("sal_loss: shape mismatch between noise grids");
  if (omega.channels() != 1 || !omega.same_extent(eps_true)) throw Error("sal_loss: weight map shape mismatch");
  if (eps_true.empty()) throw Error("sal_loss: empty input");
  const int C = eps_true.channels();
  double acc = 0.0;
  for (std::size_t i = 0; i < eps_true.size(); ++i) {
    const double d = omega[i / static_cast<std::size_t>(C)] * (eps_true[i] - eps_pred[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(eps_true.size());
}

// Keeps each channel independently with probability keep_prob; dropped channels
// are zeroed. Every channel may be dropped.
inline SketchMap dropout_categories(const SketchMap& sketch, double keep_prob, std::uint64_t seed) {
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) throw Error("dropout_categories: keep_prob must be in [0, 1]");
  sketch.validate();
  std::mt19937_64 rng(seed);
  SketchMap out = sketch;
  for (int c = 0; c < sketch.channel_count(); ++c) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u < keep_prob) continue;
    for (int y = 0; y < sketch.height(); ++y) {
      for (int x = 0; x < sketch.width(); ++x) out.channels.at(x, y, c) = 0;
    }
  }
  return out;
}

// Sketch channels taken from a semantic raster: one channel per listed category.
inline SketchMap sketch_from_semantic(const LabelGrid& semantic, const std::vector<Category>& cats) {
  if (cats.empty()) throw Error("sketch: at least one category required");
  SketchMap s;
  s.channels = Raster<std::uint8_t>(semantic.width(), semantic.height(), static_cast<int>(cats.size()), 0);
  for (auto c : cats) s.category_names.emplace_back(category_name(c));
  for (int y = 0; y < semantic.height(); ++y) {
    for (int x = 0; x < semantic.width(); ++x) {
      for (std::size_t k = 0; k < cats.size(); ++k) {
        if (semantic.at(x, y) == static_cast<std::int32_t>(cats[k])) s.channels.at(x, y, static_cast<int>(k)) = 1;
      }
    }
  }
  return s;
}

// On disk: `<category>.png` (8-bit, 0 or 255) per channel plus `sketch.json`
// listing the channel order.
inline void write_sketch(const std::filesystem::path& dir, const SketchMap& sketch) {
  sketch.validate();
  Json manifest{{"width", sketch.width()}, {"height", sketch.height()}, {"categories", sketch.category_names}};
  for (int c = 0; c < sketch.channel_count(); ++c) {
    Mask m(sketch.width(), sketch.height(), 1, 0);
    for (int y = 0; y < sketch.height(); ++y) {
      for (int x = 0; x < sketch.width(); ++x) m.at(x, y) = sketch.channels.at(x, y, c) ? 255 : 0;
    }
    write_png8(dir / (sketch.category_names[static_cast<std::size_t>(c)] + ".png"), m);
  }
  std::ofstream(dir / "sketch.json") << dump_json(manifest);
}

inline SketchMap read_sketch(const std::filesystem::path& manifest_path) {
  Json manifest;
  try {
    std::ifstream in(manifest_path);
    if (!in) throw ParseError("cannot open sketch manifest '" + manifest_path.string() + "'");
    manifest = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("sketch manifest '" + manifest_path.string() + "': " + e.what());
  }
  const auto dir = manifest_path.parent_path();
  SketchMap s;
  try {
    s.category_names = manifest.at("categories").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw ParseError("sketch manifest '" + manifest_path.string() + "': " + e.what());
  }
  if (s.category_names.empty()) throw ParseError("sketch manifest lists no categories");
  for (std::size_t c = 0; c < s.category_names.size(); ++c) {
    const auto img = read_png8(dir / (s.category_names[c] + ".png"), 1);
    if (c == 0) {
      s.channels = Raster<std::uint8_t>(img.width(), img.height(), static_cast<int>(s.category_names.size()), 0);
    } else if (!img.same_extent(s.channels)) {
      throw ParseError("sketch channel '" + s.category_names[c] + "' has a different size");
    }
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) s.channels.at(x, y, static_cast<int>(c)) = img.at(x, y) >= 128 ? 1 : 0;
    }
  }
  return s;
}

}  // namespace isoscene
