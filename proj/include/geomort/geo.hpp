#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace geomort {

// Spherical Web Mercator constants (the tile-service convention).
inline constexpr double kEarthRadiusM = 6378137.0;
inline constexpr double kTilePx = 256.0;
inline constexpr double kMercatorMaxLatDeg = 85.05112877980659;
inline constexpr double kMileM = 1609.344;  // international mile

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180)
};

struct WorldPixel {
  double x = 0.0;
  double y = 0.0;
};

struct TileSpec {
  GeoPoint center;
  int zoom = 17;
  int width_px = 400;
  int height_px = 400;
  std::string county_fips;
  int school_index = 0;  // 0..3
  int grid_row = 0;      // 0..6, row 0 is the northernmost
  int grid_col = 0;      // 0..6, col 0 is the westernmost
};

// 7x7 lattice of tile centers around one school, axis aligned in projected
// meters. Row/col (3,3) coincides with the school.
struct GridPlan {
  std::vector<TileSpec> tiles;  // exactly 49, row-major
  double spacing_m = 0.0;       // ground meters between adjacent centers
};

// Projection between geographic coordinates and the world pixel plane at a
// zoom level (world is a kTilePx * 2^zoom square).
WorldPixel latlon_to_world_pixel(const GeoPoint& p, int zoom);
GeoPoint world_pixel_to_latlon(const WorldPixel& px, int zoom);

// Web Mercator plane in meters (x east, y north), independent of zoom.
void latlon_to_mercator_m(const GeoPoint& p, double& x, double& y);
GeoPoint mercator_m_to_latlon(double x, double y);

// Physical meters covered by one pixel at the given latitude and zoom.
double ground_resolution(double lat_deg, int zoom);

GridPlan plan_grid(const GeoPoint& school, const std::string& county_fips,
                   int school_index, int zoom = 17, int width_px = 400,
                   int height_px = 400);

// Static Maps request for one tile. Bit-exact format:
// https://maps.googleapis.com/maps/api/staticmap?center={lat:.6f},{lon:.6f}
//   &zoom={z}&size={w}x{h}&maptype=satellite&key={key}
std::string static_map_url(const TileSpec& spec, const std::string& api_key);

// Same URL with the key parameter stripped; cache keys hash this form so the
// secret never influences cache identity.
std::string static_map_url_keyless(const TileSpec& spec);

// Manifest CSV: county_fips,school_index,grid_row,grid_col,lat,lon,zoom,width,height
void write_grid_manifest_header(std::ostream& out);
void write_grid_manifest_rows(std::ostream& out, const GridPlan& plan);
std::vector<TileSpec> read_grid_manifest(std::istream& in);

}  // namespace geomort
