#include "geomort/geo.hpp"

#include <cmath>
#include <cstdio>

#include "geomort/csv.hpp"
#include "geomort/error.hpp"

namespace geomort {

namespace {

constexpr double kPi = 3.14159265358979323846;

double world_size_px(int zoom) { return kTilePx * std::pow(2.0, zoom); }

void check_mercator_lat(double lat_deg) {
  if (!(lat_deg > -kMercatorMaxLatDeg && lat_deg < kMercatorMaxLatDeg)) {
    char msg[96];
    std::snprintf(msg, sizeof(msg), "latitude %.6f outside Mercator bounds (+/-%.5f)",
                  lat_deg, kMercatorMaxLatDeg);
    throw DomainError(msg);
  }
}

void check_geopoint(const GeoPoint& p) {
  if (!(p.lat >= -90.0 && p.lat <= 90.0))
    throw DomainError("latitude out of [-90, 90]");
  if (!(p.lon >= -180.0 && p.lon < 180.0))
    throw DomainError("longitude out of [-180, 180)");
}

}  // namespace

WorldPixel latlon_to_world_pixel(const GeoPoint& p, int zoom) {
  check_geopoint(p);
  check_mercator_lat(p.lat);
  if (zoom < 0) throw DomainError("zoom must be >= 0");
  const double s = world_size_px(zoom);
  const double siny = std::sin(p.lat * kPi / 180.0);
  WorldPixel px;
  px.x = (p.lon + 180.0) / 360.0 * s;
  px.y = (0.5 - std::log((1.0 + siny) / (1.0 - siny)) / (4.0 * kPi)) * s;
  return px;
}

GeoPoint world_pixel_to_latlon(const WorldPixel& px, int zoom) {
  if (zoom < 0) throw DomainError("zoom must be >= 0");
  const double s = world_size_px(zoom);
  GeoPoint p;
  p.lon = px.x / s * 360.0 - 180.0;
  const double y = 0.5 - px.y / s;
  p.lat = 90.0 - 360.0 * std::atan(std::exp(-y * 2.0 * kPi)) / kPi;
  return p;
}

void latlon_to_mercator_m(const GeoPoint& p, double& x, double& y) {
  check_geopoint(p);
  check_mercator_lat(p.lat);
  x = kEarthRadiusM * p.lon * kPi / 180.0;
  y = kEarthRadiusM * std::log(std::tan(kPi / 4.0 + p.lat * kPi / 360.0));
}

GeoPoint mercator_m_to_latlon(double x, double y) {
  GeoPoint p;
  p.lon = x / kEarthRadiusM * 180.0 / kPi;
  p.lat = (2.0 * std::atan(std::exp(y / kEarthRadiusM)) - kPi / 2.0) * 180.0 / kPi;
  return p;
}

double ground_resolution(double lat_deg, int zoom) {
  check_mercator_lat(lat_deg);
  if (zoom < 0) throw DomainError("zoom must be >= 0");
  return std::cos(lat_deg * kPi / 180.0) * 2.0 * kPi * kEarthRadiusM / world_size_px(zoom);
}

GridPlan plan_grid(const GeoPoint& school, const std::string& county_fips,
                   int school_index, int zoom, int width_px, int height_px) {
  check_geopoint(school);
  check_mercator_lat(school.lat);
  if (school_index < 0 || school_index > 3)
    throw DomainError("school_index must be in 0..3");

  GridPlan plan;
  plan.spacing_m = kMileM / 7.0;

  double cx, cy;
  latlon_to_mercator_m(school, cx, cy);
  // Mercator stretches ground distance by 1/cos(lat); scale the projected
  // spacing so adjacent centers are spacing_m apart on the ground.
  const double proj_step = plan.spacing_m / std::cos(school.lat * kPi / 180.0);

  plan.tiles.reserve(49);
  for (int row = 0; row < 7; ++row) {
    for (int col = 0; col < 7; ++col) {
      const double x = cx + (col - 3) * proj_step;
      const double y = cy - (row - 3) * proj_step;  // row 0 north
      const GeoPoint center = mercator_m_to_latlon(x, y);
      if (!(center.lat > -kMercatorMaxLatDeg && center.lat < kMercatorMaxLatDeg))
        throw DomainError("grid cell crosses Mercator latitude bound");
      TileSpec t;
      t.center = center;
      t.zoom = zoom;
      t.width_px = width_px;
      t.height_px = height_px;
      t.county_fips = county_fips;
      t.school_index = school_index;
      t.grid_row = row;
      t.grid_col = col;
      plan.tiles.push_back(std::move(t));
    }
  }
  return plan;
}

std::string static_map_url_keyless(const TileSpec& spec) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "https://maps.googleapis.com/maps/api/staticmap?center=%.6f,%.6f"
                "&zoom=%d&size=%dx%d&maptype=satellite",
                spec.center.lat, spec.center.lon, spec.zoom, spec.width_px,
                spec.height_px);
  return buf;
}

std::string static_map_url(const TileSpec& spec, const std::string& api_key) {
  if (api_key.empty()) throw ConfigError("Static Maps API key is empty");
  return static_map_url_keyless(spec) + "&key=" + api_key;
}

void write_grid_manifest_header(std::ostream& out) {
  out << "county_fips,school_index,grid_row,grid_col,lat,lon,zoom,width,height\n";
}

void write_grid_manifest_rows(std::ostream& out, const GridPlan& plan) {
  char buf[160];
  for (const TileSpec& t : plan.tiles) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%d,%.9f,%.9f,%d,%d,%d",
                  csv_quote(t.county_fips).c_str(), t.school_index, t.grid_row,
                  t.grid_col, t.center.lat, t.center.lon, t.zoom, t.width_px,
                  t.height_px);
    out << buf << '\n';
  }
}

std::vector<TileSpec> read_grid_manifest(std::istream& in) {
  std::vector<std::string> header;
  const auto rows = read_csv(in, &header);
  const std::vector<std::string> want = {"county_fips", "school_index", "grid_row",
                                         "grid_col",    "lat",          "lon",
                                         "zoom",        "width",        "height"};
  if (header != want) throw IngestError(1, "bad grid manifest header");
  std::vector<TileSpec> specs;
  specs.reserve(rows.size());
  long row_no = 1;
  for (const auto& r : rows) {
    ++row_no;
    if (r.size() != want.size())
      throw IngestError(row_no, "expected 9 fields in grid manifest");
    try {
      TileSpec t;
      t.county_fips = r[0];
      t.school_index = std::stoi(r[1]);
      t.grid_row = std::stoi(r[2]);
      t.grid_col = std::stoi(r[3]);
      t.center.lat = std::stod(r[4]);
      t.center.lon = std::stod(r[5]);
      t.zoom = std::stoi(r[6]);
      t.width_px = std::stoi(r[7]);
      t.height_px = std::stoi(r[8]);
      specs.push_back(std::move(t));
    } catch (const std::exception&) {
      throw IngestError(row_no, "unparseable grid manifest field");
    }
  }
  return specs;
}

}  // namespace geomort
