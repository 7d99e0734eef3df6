#include "geomort/augment.hpp"

#include <cmath>

#include "geomort/error.hpp"

namespace geomort {

AugmentParams draw_augment_params(CounterRng& rng, int height, int width) {
  AugmentParams p;
  p.crop_scale = 0.8 + 0.2 * rng.uniform();
  const int crop_h = std::max(1, static_cast<int>(std::lround(p.crop_scale * height)));
  const int crop_w = std::max(1, static_cast<int>(std::lround(p.crop_scale * width)));
  p.crop_oy = static_cast<int>(rng.uniform_int(height - crop_h + 1));
  p.crop_ox = static_cast<int>(rng.uniform_int(width - crop_w + 1));
  p.rot_quarters = static_cast<int>(rng.uniform_int(4));
  p.hflip = rng.uniform() < 0.5;
  p.vflip = rng.uniform() < 0.5;
  return p;
}

ImageTile rotate_quarters(const ImageTile& tile, int quarters) {
  quarters = ((quarters % 4) + 4) % 4;
  if (quarters == 0) return tile;
  ImageTile out;
  out.key = tile.key;
  const int h = tile.height, w = tile.width;
  if (quarters == 2) {
    out.height = h;
    out.width = w;
    out.pixels.resize(tile.pixels.size());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) out.at(h - 1 - y, w - 1 - x, c) = tile.at(y, x, c);
    return out;
  }
  out.height = w;
  out.width = h;
  out.pixels.resize(tile.pixels.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        if (quarters == 1) out.at(w - 1 - x, y, c) = tile.at(y, x, c);
        else out.at(x, h - 1 - y, c) = tile.at(y, x, c);
      }
    }
  }
  return out;
}

ImageTile apply_augment(const ImageTile& tile, const AugmentParams& params, int out_size) {
  if (tile.height <= 0 || tile.width <= 0) throw DomainError("empty tile");
  const int crop_h =
      std::max(1, static_cast<int>(std::lround(params.crop_scale * tile.height)));
  const int crop_w =
      std::max(1, static_cast<int>(std::lround(params.crop_scale * tile.width)));
  if (params.crop_oy < 0 || params.crop_oy + crop_h > tile.height ||
      params.crop_ox < 0 || params.crop_ox + crop_w > tile.width)
    throw DomainError("crop window outside tile");

  ImageTile cropped;
  cropped.key = tile.key;
  cropped.height = crop_h;
  cropped.width = crop_w;
  cropped.pixels.resize(static_cast<std::size_t>(crop_h) * crop_w * 3);
  for (int y = 0; y < crop_h; ++y)
    for (int x = 0; x < crop_w; ++x)
      for (int c = 0; c < 3; ++c)
        cropped.at(y, x, c) = tile.at(params.crop_oy + y, params.crop_ox + x, c);

  ImageTile rotated = rotate_quarters(cropped, params.rot_quarters);

  if (params.hflip) {
    for (int y = 0; y < rotated.height; ++y)
      for (int x = 0; x < rotated.width / 2; ++x)
        for (int c = 0; c < 3; ++c)
          std::swap(rotated.at(y, x, c), rotated.at(y, rotated.width - 1 - x, c));
  }
  if (params.vflip) {
    for (int y = 0; y < rotated.height / 2; ++y)
      for (int x = 0; x < rotated.width; ++x)
        for (int c = 0; c < 3; ++c)
          std::swap(rotated.at(y, x, c), rotated.at(rotated.height - 1 - y, x, c));
  }

  if (rotated.height == out_size && rotated.width == out_size) return rotated;
  return resize_bilinear(rotated, out_size, out_size);
}

ImageTile augment(const ImageTile& tile, CounterRng& rng, int out_size) {
  return apply_augment(tile, draw_augment_params(rng, tile.height, tile.width), out_size);
}

}  // namespace geomort
