#include "geomort/image.hpp"

#include <algorithm>
#include <cmath>

namespace geomort {

ImageTile ImageTile::solid(int h, int w, float r, float g, float b) {
  ImageTile t;
  t.height = h;
  t.width = w;
  t.pixels.resize(static_cast<std::size_t>(h) * w * 3);
  for (int i = 0; i < h * w; ++i) {
    t.pixels[3 * i] = r;
    t.pixels[3 * i + 1] = g;
    t.pixels[3 * i + 2] = b;
  }
  return t;
}

ImageTile to_float_tile(const ImageU8& img) {
  ImageTile t;
  t.height = img.height;
  t.width = img.width;
  t.pixels.resize(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    t.pixels[i] = static_cast<float>(img.pixels[i]) / 255.0f;
  return t;
}

ImageU8 to_u8(const ImageTile& tile) {
  ImageU8 img;
  img.height = tile.height;
  img.width = tile.width;
  img.pixels.resize(tile.pixels.size());
  for (std::size_t i = 0; i < tile.pixels.size(); ++i) {
    const float v = std::clamp(tile.pixels[i], 0.0f, 1.0f);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return img;
}

ImageTile resize_bilinear(const ImageTile& tile, int out_h, int out_w) {
  ImageTile out;
  out.height = out_h;
  out.width = out_w;
  out.key = tile.key;
  out.pixels.resize(static_cast<std::size_t>(out_h) * out_w * 3);
  const float sy = static_cast<float>(tile.height) / out_h;
  const float sx = static_cast<float>(tile.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    float fy = (y + 0.5f) * sy - 0.5f;
    fy = std::clamp(fy, 0.0f, static_cast<float>(tile.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, tile.height - 1);
    const float wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      float fx = (x + 0.5f) * sx - 0.5f;
      fx = std::clamp(fx, 0.0f, static_cast<float>(tile.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, tile.width - 1);
      const float wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const float top = tile.at(y0, x0, c) * (1 - wx) + tile.at(y0, x1, c) * wx;
        const float bot = tile.at(y1, x0, c) * (1 - wx) + tile.at(y1, x1, c) * wx;
        out.at(y, x, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

}  // namespace geomort
