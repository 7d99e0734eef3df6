#pragma once

#include <string>

#include "geomort/image.hpp"

namespace geomort {

// 8-bit RGB PNG codec (libpng behind the scenes). Grayscale/RGBA inputs are
// expanded to RGB on decode; anything undecodable throws CorruptResponseError.
std::string encode_png_rgb8(const ImageU8& img);
ImageU8 decode_png_rgb8(const std::string& bytes);

void write_png_file(const std::string& path, const ImageU8& img);
ImageU8 read_png_file(const std::string& path);

}  // namespace geomort
