#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "forgekit/core.hpp"

namespace forgekit::testing {

// Photo-like field: coarse random grid, bilinear interpolation, gaussian grain.
// Hand-rolled on purpose so fixtures never depend on the code under test.
inline raster_image textured_image(std::uint64_t seed, int w, int h, int cell,
                                   double noise_sigma) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level(0.0, 255.0);
  const int gw = (w + cell - 1) / cell + 1;
  const int gh = (h + cell - 1) / cell + 1;
  std::vector<double> grid(size_t(gw) * gh * 3);
  for (auto& g : grid) g = level(rng);

  auto gaussian = [&rng]() {
    std::uniform_real_distribution<double> unit(std::nextafter(0.0, 1.0), 1.0);
    const double a = unit(rng), b = unit(rng);
    return std::sqrt(-2.0 * std::log(a)) * std::cos(2.0 * M_PI * b);
  };

  raster_image img(w, h);
  for (int y = 0; y < h; ++y) {
    const double gy = double(y) / cell;
    const int y0 = int(gy);
    const double fy = gy - y0;
    for (int x = 0; x < w; ++x) {
      const double gx = double(x) / cell;
      const int x0 = int(gx);
      const double fx = gx - x0;
      for (int c = 0; c < 3; ++c) {
        auto g = [&](int xx, int yy) {
          return grid[(size_t(yy) * gw + xx) * 3 + c];
        };
        const double top = g(x0, y0) * (1 - fx) + g(x0 + 1, y0) * fx;
        const double bot = g(x0, y0 + 1) * (1 - fx) + g(x0 + 1, y0 + 1) * fx;
        double v = top * (1 - fy) + bot * fy;
        if (noise_sigma > 0.0) v += noise_sigma * gaussian();
        img.at(x, y, c) = std::uint8_t(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return img;
}

}  // namespace forgekit::testing
