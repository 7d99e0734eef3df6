#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace geomort {

// Identifies a tile within the corpus layout.
struct TileKey {
  std::string fips;
  int school = 0;
  int row = 0;
  int col = 0;

  bool operator==(const TileKey& o) const {
    return fips == o.fips && school == o.school && row == o.row && col == o.col;
  }
  bool operator<(const TileKey& o) const {
    if (fips != o.fips) return fips < o.fips;
    if (school != o.school) return school < o.school;
    if (row != o.row) return row < o.row;
    return col < o.col;
  }
  std::string str() const {
    return fips + "/" + std::to_string(school) + "/" + std::to_string(row) + "_" +
           std::to_string(col);
  }
};

// Decoded RGB tile, HWC layout, channel values in [0,1].
struct ImageTile {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // height*width*3
  TileKey key;

  float at(int y, int x, int c) const { return pixels[(y * width + x) * 3 + c]; }
  float& at(int y, int x, int c) { return pixels[(y * width + x) * 3 + c]; }

  static ImageTile solid(int h, int w, float r, float g, float b);
};

// 8-bit RGB raster used on disk and in the tile store.
struct ImageU8 {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // height*width*3

  std::uint8_t at(int y, int x, int c) const { return pixels[(y * width + x) * 3 + c]; }
  std::uint8_t& at(int y, int x, int c) { return pixels[(y * width + x) * 3 + c]; }
};

ImageTile to_float_tile(const ImageU8& img);
ImageU8 to_u8(const ImageTile& tile);

// Bilinear resize to out_h x out_w (align-corners-false convention).
ImageTile resize_bilinear(const ImageTile& tile, int out_h, int out_w);

}  // namespace geomort
