#pragma once

#include "geomort/image.hpp"
#include "geomort/rng.hpp"

namespace geomort {

// One sampled augmentation: crop -> right-angle rotation -> flips -> resize.
struct AugmentParams {
  double crop_scale = 1.0;  // in [0.8, 1.0]
  int crop_oy = 0;
  int crop_ox = 0;
  int rot_quarters = 0;  // 0..3 quarter turns counterclockwise
  bool hflip = false;
  bool vflip = false;
};

// Draw order is fixed (scale, oy, ox, rotation, hflip, vflip) so a seeded
// stream replays identically.
AugmentParams draw_augment_params(CounterRng& rng, int height, int width);

ImageTile apply_augment(const ImageTile& tile, const AugmentParams& params, int out_size);

ImageTile augment(const ImageTile& tile, CounterRng& rng, int out_size);

ImageTile rotate_quarters(const ImageTile& tile, int quarters);

}  // namespace geomort
