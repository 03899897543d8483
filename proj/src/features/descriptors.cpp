#include "scenemem/features/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace scenemem::features {

namespace {

DescriptorSet dense_sift(const FloatImage& rgb, const DescriptorConfig& config) {
  const FloatImage gray = to_gray(rgb);
  const int w = gray.width;
  const int h = gray.height;
  const int patch = config.patch;
  const int cell = patch / 4;
  constexpr int kOrientations = 8;

  std::vector<double> magnitude(static_cast<std::size_t>(w) * h);
  std::vector<double> bin(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (gray.at(std::min(x + 1, w - 1), y) - gray.at(std::max(x - 1, 0), y));
      const double gy = 0.5 * (gray.at(x, std::min(y + 1, h - 1)) - gray.at(x, std::max(y - 1, 0)));
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += 2.0 * std::numbers::pi;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      magnitude[i] = std::hypot(gx, gy);
      bin[i] = angle * kOrientations / (2.0 * std::numbers::pi);
    }
  }

  DescriptorSet out;
  out.kind = DescriptorKind::sift;
  out.dim = kSiftDim;
  for (int y0 = 0; y0 + patch <= h; y0 += config.stride) {
    for (int x0 = 0; x0 + patch <= w; x0 += config.stride) {
      std::vector<double> d(kSiftDim, 0.0);
      for (int py = 0; py < patch; ++py) {
        for (int px = 0; px < patch; ++px) {
          const std::size_t i = static_cast<std::size_t>(y0 + py) * w + (x0 + px);
          const double m = magnitude[i];
          if (m == 0.0) continue;
          const double o = bin[i];
          const double lower = std::floor(o);
          const double frac = o - lower;
          const int b0 = static_cast<int>(lower) % kOrientations;
          const int b1 = (b0 + 1) % kOrientations;
          const std::size_t base = static_cast<std::size_t>((py / cell) * 4 + px / cell) * kOrientations;
          d[base + b0] += m * (1.0 - frac);
          d[base + b1] += m * frac;
        }
      }
      auto normalize = [&d] {
        double norm = 0.0;
        for (double v : d) norm += v * v;
        if (norm <= 0.0) return;
        norm = std::sqrt(norm);
        for (double& v : d) v /= norm;
      };
      normalize();
      for (double& v : d) v = std::min(v, config.sift_clamp);
      normalize();
      out.x.push_back((x0 + 0.5 * patch) / w);
      out.y.push_back((y0 + 0.5 * patch) / h);
      out.values.push_back(std::move(d));
    }
  }
  return out;
}

// Unit vectors of the 9 unsigned orientations, 20 degrees apart.
constexpr double kUu[9] = {1.0000, 0.9397, 0.7660, 0.5000, 0.1736,
                           -0.1736, -0.5000, -0.7660, -0.9397};
constexpr double kVv[9] = {0.0000, 0.3420, 0.6428, 0.8660, 0.9848,
                           0.9848, 0.8660, 0.6428, 0.3420};

}  // namespace

HogMap hog_cells(const FloatImage& rgb255, int sbin) {
  const int h = rgb255.height;
  const int w = rgb255.width;
  const int blocks_y = static_cast<int>(std::lround(static_cast<double>(h) / sbin));
  const int blocks_x = static_cast<int>(std::lround(static_cast<double>(w) / sbin));
  std::vector<double> hist(static_cast<std::size_t>(blocks_y) * blocks_x * 18, 0.0);
  auto hist_at = [&](int by, int bx) { return hist.data() + (static_cast<std::size_t>(by) * blocks_x + bx) * 18; };

  const int visible_y = blocks_y * sbin;
  const int visible_x = blocks_x * sbin;
  const int channels = rgb255.channels;
  for (int x = 1; x < visible_x - 1; ++x) {
    for (int y = 1; y < visible_y - 1; ++y) {
      const int sx = std::min(x, w - 2);
      const int sy = std::min(y, h - 2);
      double best_v = -1.0, dx = 0.0, dy = 0.0;
      // strongest channel wins
      for (int c = 0; c < channels; ++c) {
        const double cdx = rgb255.at(sx + 1, sy, c) - rgb255.at(sx - 1, sy, c);
        const double cdy = rgb255.at(sx, sy + 1, c) - rgb255.at(sx, sy - 1, c);
        const double v = cdx * cdx + cdy * cdy;
        if (v > best_v) {
          best_v = v;
          dx = cdx;
          dy = cdy;
        }
      }
      double best_dot = 0.0;
      int best_o = 0;
      for (int o = 0; o < 9; ++o) {
        const double dot = kUu[o] * dx + kVv[o] * dy;
        if (dot > best_dot) {
          best_dot = dot;
          best_o = o;
        } else if (-dot > best_dot) {
          best_dot = -dot;
          best_o = o + 9;
        }
      }
      const double v = std::sqrt(best_v);
      const double xp = (x + 0.5) / sbin - 0.5;
      const double yp = (y + 0.5) / sbin - 0.5;
      const int ixp = static_cast<int>(std::floor(xp));
      const int iyp = static_cast<int>(std::floor(yp));
      const double vx0 = xp - ixp, vy0 = yp - iyp;
      const double vx1 = 1.0 - vx0, vy1 = 1.0 - vy0;
      if (ixp >= 0 && iyp >= 0) hist_at(iyp, ixp)[best_o] += vx1 * vy1 * v;
      if (ixp + 1 < blocks_x && iyp >= 0) hist_at(iyp, ixp + 1)[best_o] += vx0 * vy1 * v;
      if (ixp >= 0 && iyp + 1 < blocks_y) hist_at(iyp + 1, ixp)[best_o] += vx1 * vy0 * v;
      if (ixp + 1 < blocks_x && iyp + 1 < blocks_y) hist_at(iyp + 1, ixp + 1)[best_o] += vx0 * vy0 * v;
    }
  }

  std::vector<double> norm(static_cast<std::size_t>(blocks_y) * blocks_x, 0.0);
  for (int by = 0; by < blocks_y; ++by) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      const double* src = hist_at(by, bx);
      double n = 0.0;
      for (int o = 0; o < 9; ++o) n += (src[o] + src[o + 9]) * (src[o] + src[o + 9]);
      norm[static_cast<std::size_t>(by) * blocks_x + bx] = n;
    }
  }
  auto norm_at = [&](int by, int bx) { return norm[static_cast<std::size_t>(by) * blocks_x + bx]; };

  HogMap map;
  map.rows = std::max(blocks_y - 2, 0);
  map.cols = std::max(blocks_x - 2, 0);
  map.values.assign(static_cast<std::size_t>(map.rows) * map.cols * kHogCellDim, 0.0);
  constexpr double kEps = 0.0001;
  auto block_norm = [&](int by, int bx) {
    return 1.0 / std::sqrt(norm_at(by, bx) + norm_at(by, bx + 1) + norm_at(by + 1, bx) +
                           norm_at(by + 1, bx + 1) + kEps);
  };
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      double* dst = map.values.data() + (static_cast<std::size_t>(r) * map.cols + c) * kHogCellDim;
      const double n1 = block_norm(r + 1, c + 1);
      const double n2 = block_norm(r, c + 1);
      const double n3 = block_norm(r + 1, c);
      const double n4 = block_norm(r, c);
      const double* src = hist_at(r + 1, c + 1);
      double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
      for (int o = 0; o < 18; ++o) {
        const double h1 = std::min(src[o] * n1, 0.2);
        const double h2 = std::min(src[o] * n2, 0.2);
        const double h3 = std::min(src[o] * n3, 0.2);
        const double h4 = std::min(src[o] * n4, 0.2);
        *dst++ = 0.5 * (h1 + h2 + h3 + h4);
        t1 += h1;
        t2 += h2;
        t3 += h3;
        t4 += h4;
      }
      for (int o = 0; o < 9; ++o) {
        const double sum = src[o] + src[o + 9];
        const double h1 = std::min(sum * n1, 0.2);
        const double h2 = std::min(sum * n2, 0.2);
        const double h3 = std::min(sum * n3, 0.2);
        const double h4 = std::min(sum * n4, 0.2);
        *dst++ = 0.5 * (h1 + h2 + h3 + h4);
      }
      *dst++ = 0.2357 * t1;
      *dst++ = 0.2357 * t2;
      *dst++ = 0.2357 * t3;
      *dst++ = 0.2357 * t4;
    }
  }
  return map;
}

namespace {

DescriptorSet dense_hog(const FloatImage& rgb, const DescriptorConfig& config) {
  FloatImage scaled = rgb;
  for (double& v : scaled.data) v *= 255.0;
  const HogMap map = hog_cells(scaled, config.hog_cell);
  if (map.rows < 2 || map.cols < 2) {
    throw std::invalid_argument("dense_descriptors: image too small for a 2x2 HOG block");
  }
  DescriptorSet out;
  out.kind = DescriptorKind::hog;
  out.dim = kHog2x2Dim;
  const double cell = config.hog_cell;
  for (int r = 0; r + 1 < map.rows; ++r) {
    for (int c = 0; c + 1 < map.cols; ++c) {
      std::vector<double> d;
      d.reserve(kHog2x2Dim);
      for (int dr = 0; dr < 2; ++dr) {
        for (int dc = 0; dc < 2; ++dc) {
          const double* src = map.cell(r + dr, c + dc);
          d.insert(d.end(), src, src + kHogCellDim);
        }
      }
      // feature cell c covers pixels [(c+1)*cell, (c+2)*cell)
      out.x.push_back((c + 2) * cell / rgb.width);
      out.y.push_back((r + 2) * cell / rgb.height);
      out.values.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace

DescriptorSet dense_descriptors(const FloatImage& rgb, DescriptorKind kind,
                                const DescriptorConfig& config) {
  if (rgb.channels != 3 && rgb.channels != 1) {
    throw std::invalid_argument("dense_descriptors: expected a 1 or 3 channel image");
  }
  if (rgb.width < config.patch || rgb.height < config.patch) {
    throw std::invalid_argument("dense_descriptors: image " + std::to_string(rgb.width) + "x" +
                                std::to_string(rgb.height) + " is smaller than one " +
                                std::to_string(config.patch) + "px patch");
  }
  return kind == DescriptorKind::sift ? dense_sift(rgb, config) : dense_hog(rgb, config);
}

}  // namespace scenemem::features
