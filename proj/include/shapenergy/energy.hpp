#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "shapenergy/errors.hpp"
#include "shapenergy/geometry.hpp"
#include "shapenergy/weather.hpp"

namespace shapenergy {

// Extruded office block, constant envelope properties, ideal thermal loads.
struct BuildingConfig {
  int floors = 7;
  double floor_height = 3.4;
  double floor_area = 990.0;
  double wwr = 0.30;
  double u_wall = 0.45;    // W/m2K
  double u_window = 2.7;   // W/m2K
  double shgc = 0.7;
  double heat_setpoint = 20.0;
  double cool_setpoint = 24.0;
  double internal_gain_density = 25.0;   // W/m2, occupied hours
  double lighting_power_density = 10.0;  // W/m2, occupied hours
  double daylight_dimming_max = 0.5;
  // Occupied on weekdays for EPW hour-ending values in [first, last), i.e.
  // clock 07:00-17:00, a window centered on solar noon.
  int occupied_first_hour = 8;
  int occupied_last_hour = 18;
  int jan1_weekday = 0;  // 0 = Monday
  double patch_max_width = 4.0;
  int patch_rows_per_floor = 1;

  double height() const { return floors * floor_height; }
  double u_envelope() const { return wwr * u_window + (1.0 - wwr) * u_wall; }

  bool occupied(int day_of_year, int hour) const {
    const bool weekday = ((day_of_year - 1 + jan1_weekday) % 7) < 5;
    return weekday && hour >= occupied_first_hour && hour < occupied_last_hour;
  }

  void validate() const {
    if (floors < 1 || !(floor_height > 0) || !(floor_area > 0))
      throw RangeError("building needs >= 1 floor and positive dimensions");
    if (!(wwr >= 0 && wwr <= 1)) throw RangeError("wwr outside [0, 1]");
    if (!(heat_setpoint < cool_setpoint)) throw RangeError("heat setpoint must be below cool setpoint");
    if (!(internal_gain_density >= 0) || !(lighting_power_density >= 0) || !(u_wall >= 0) ||
        !(u_window >= 0) || !(shgc >= 0))
      throw RangeError("densities and conductances must be >= 0");
    if (!(daylight_dimming_max >= 0 && daylight_dimming_max <= 1))
      throw RangeError("daylight dimming outside [0, 1]");
    if (!(patch_max_width > 0) || patch_rows_per_floor < 1)
      throw RangeError("patch resolution must be positive");
  }
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct Patch {
  std::size_t edge = 0;
  int floor = 0;
  Vec3 center;
  Vec2 normal;  // unit, horizontal, outward
  double area = 0.0;
};

struct EnergyBreakdown {
  double heating_kwh = 0.0;
  double cooling_kwh = 0.0;
  double lighting_kwh = 0.0;
  double total_kwh = 0.0;

  friend bool operator==(const EnergyBreakdown&, const EnergyBreakdown&) = default;
};

namespace detail {

inline std::size_t segments_for(double length, double max_width) {
  const auto n = static_cast<std::size_t>(std::ceil(length / max_width - 1e-9));
  return n == 0 ? 1 : n;
}

// Outward normal of a counter-clockwise edge.
inline Vec2 outward_normal(Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double len = norm(d);
  return {d.y / len, -d.x / len};
}

// One vertical strip of facade: the plan position shared by every patch
// stacked above it.
struct Column {
  std::size_t edge;
  Vec2 base;
  Vec2 normal;
  double width;
};

inline std::vector<Column> facade_columns(const Footprint& f, const BuildingConfig& cfg) {
  std::vector<Column> cols;
  for (std::size_t e = 0; e < f.size(); ++e) {
    const Vec2 a = f.edge_start(e);
    const Vec2 b = f.edge_end(e);
    const double len = norm(b - a);
    const std::size_t n = segments_for(len, cfg.patch_max_width);
    const Vec2 normal = outward_normal(a, b);
    for (std::size_t s = 0; s < n; ++s) {
      const double t = (static_cast<double>(s) + 0.5) / static_cast<double>(n);
      cols.push_back({e, a + t * (b - a), normal, len / static_cast<double>(n)});
    }
  }
  return cols;
}

inline std::vector<double> patch_heights(const BuildingConfig& cfg) {
  std::vector<double> z;
  const double row_h = cfg.floor_height / cfg.patch_rows_per_floor;
  for (int fl = 0; fl < cfg.floors; ++fl)
    for (int r = 0; r < cfg.patch_rows_per_floor; ++r) z.push_back(fl * cfg.floor_height + (r + 0.5) * row_h);
  return z;
}

}  // namespace detail

// Horizontal unit vector toward the sun (x east, y north).
inline Vec2 sun_direction(const SunPosition& sun) {
  const double az = sun.azimuth * detail::kDeg;
  return {std::sin(az), std::cos(az)};
}

// Each edge is cut into equal segments no wider than patch_max_width; one
// patch per segment per floor (per row, when rows_per_floor > 1).
inline std::vector<Patch> facade_patches(const Footprint& f, const BuildingConfig& cfg) {
  cfg.validate();
  const auto cols = detail::facade_columns(f, cfg);
  const auto heights = detail::patch_heights(cfg);
  const double row_h = cfg.floor_height / cfg.patch_rows_per_floor;
  std::vector<Patch> patches;
  patches.reserve(cols.size() * heights.size());
  for (std::size_t h = 0; h < heights.size(); ++h) {
    for (const auto& c : cols) {
      patches.push_back({c.edge, static_cast<int>(h) / cfg.patch_rows_per_floor,
                         {c.base.x, c.base.y, heights[h]}, c.normal, c.width * row_h});
    }
  }
  return patches;
}

// Plan distance to the nearest footprint edge hit by the ray, skipping one
// edge (the ray's own).
inline std::optional<double> nearest_obstruction(const Footprint& f, Vec2 origin, Vec2 dir,
                                                 std::size_t skip_edge) {
  std::optional<double> best;
  for (std::size_t e = 0; e < f.size(); ++e) {
    if (e == skip_edge) continue;
    const Vec2 a = f.edge_start(e);
    const Vec2 s = f.edge_end(e) - a;
    const double denom = cross(dir, s);
    if (denom == 0.0) continue;
    const Vec2 ao = a - origin;
    const double r = cross(ao, s) / denom;
    const double u = cross(ao, dir) / denom;
    if (r > 0.0 && u >= 0.0 && u <= 1.0 && (!best || r < *best)) best = r;
  }
  return best;
}

inline constexpr double kRayOffset = 1e-6;

// True when the patch faces away from the sun, or the horizontal ray toward
// the sun's azimuth meets another wall whose top (building height) is above
// the sun ray at that distance.
inline bool is_shaded(const Patch& patch, const SunPosition& sun, const Footprint& f,
                      const BuildingConfig& cfg) {
  if (!(sun.altitude > 0.0)) throw PreconditionError("is_shaded requires sun altitude > 0");
  const Vec2 dir = sun_direction(sun);
  if (dot(patch.normal, dir) <= 0.0) return true;
  const Vec2 origin = Vec2{patch.center.x, patch.center.y} + kRayOffset * patch.normal;
  const auto r = nearest_obstruction(f, origin, dir, patch.edge);
  if (!r) return false;
  return cfg.height() >= patch.center.z + *r * std::tan(sun.altitude * detail::kDeg);
}

// Beam irradiance on the patch plane, ignoring obstruction.
inline double incident_direct(const Patch& patch, const SunPosition& sun, double dni) {
  if (!(sun.altitude > 0.0)) throw PreconditionError("incident_direct requires sun altitude > 0");
  const double cos_theta = dot(patch.normal, sun_direction(sun)) * std::cos(sun.altitude * detail::kDeg);
  return dni * std::max(0.0, cos_theta);
}

// Beam irradiance with self-shading applied.
inline double incident_direct(const Patch& patch, const SunPosition& sun, double dni,
                              const Footprint& f, const BuildingConfig& cfg) {
  return is_shaded(patch, sun, f, cfg) ? 0.0 : incident_direct(patch, sun, dni);
}

struct SolarGain {
  double q_solar = 0.0;            // W admitted through glazing
  double daylight_fraction = 0.0;  // unshaded sun-facing window area / window area
};

// Precomputed facade for repeated hourly evaluation. Obstruction distances
// are shared by every patch in a column, so each hour costs one ray cast per
// column instead of one per patch.
class Facade {
 public:
  Facade(const Footprint& f, const BuildingConfig& cfg)
      : footprint_(f),
        cfg_(cfg),
        columns_(detail::facade_columns(f, cfg)),
        heights_(detail::patch_heights(cfg)),
        row_height_(cfg.floor_height / cfg.patch_rows_per_floor) {
    for (const auto& c : columns_) envelope_area_ += c.width * cfg.height();
  }

  double envelope_area() const noexcept { return envelope_area_; }

  SolarGain solar(const SunPosition& sun, double dni, double dhi, bool self_shading = true) const {
    double beam = 0.0;    // sum of incident * area over unshaded patches
    double sunlit = 0.0;  // unshaded, sun-facing wall area
    if (sun.altitude > 0.0) {
      const Vec2 dir = sun_direction(sun);
      const double cos_alt = std::cos(sun.altitude * detail::kDeg);
      const double tan_alt = std::tan(sun.altitude * detail::kDeg);
      const double top = cfg_.height();
      for (const auto& c : columns_) {
        const double facing = dot(c.normal, dir);
        if (facing <= 0.0) continue;
        std::optional<double> r;
        if (self_shading) r = nearest_obstruction(footprint_, c.base + kRayOffset * c.normal, dir, c.edge);
        const double patch_area = c.width * row_height_;
        const double irradiance = dni * facing * cos_alt;
        for (double z : heights_) {
          if (r && top >= z + *r * tan_alt) continue;
          beam += irradiance * patch_area;
          sunlit += patch_area;
        }
      }
    }
    SolarGain g;
    g.q_solar = (beam + 0.5 * dhi * envelope_area_) * cfg_.wwr * cfg_.shgc;
    g.daylight_fraction = envelope_area_ > 0.0 ? std::clamp(sunlit / envelope_area_, 0.0, 1.0) : 0.0;
    if (cfg_.wwr == 0.0) g.daylight_fraction = 0.0;
    return g;
  }

 private:
  Footprint footprint_;
  BuildingConfig cfg_;
  std::vector<detail::Column> columns_;
  std::vector<double> heights_;
  double row_height_;
  double envelope_area_ = 0.0;
};

// Hourly steady-state balance summed over the year.
inline EnergyBreakdown annual_energy(const Footprint& f, const WeatherSeries& w,
                                     const BuildingConfig& cfg) {
  cfg.validate();
  const Facade facade(f, cfg);
  const double ua = cfg.u_envelope() * f.perimeter() * cfg.height();
  const double total_floor_area = cfg.floor_area * cfg.floors;

  double heating_wh = 0.0;
  double cooling_wh = 0.0;
  double lighting_wh = 0.0;
  for (const auto& rec : w.records) {
    const int doy = calendar::day_of_year(rec.month, rec.day);
    const SunPosition sun = sun_position(w.site, doy, record_solar_hour(w, rec));
    const SolarGain solar = facade.solar(sun, rec.dni, rec.dhi);
    const bool occupied = cfg.occupied(doy, rec.hour);

    const double q_int = occupied ? cfg.internal_gain_density * total_floor_area : 0.0;
    const double q_light =
        occupied ? cfg.lighting_power_density * total_floor_area *
                       (1.0 - cfg.daylight_dimming_max * solar.daylight_fraction)
                 : 0.0;
    const double gains = solar.q_solar + q_int + q_light;

    if (rec.dry_bulb < cfg.heat_setpoint) {
      heating_wh += std::max(0.0, ua * (cfg.heat_setpoint - rec.dry_bulb) - gains);
    } else {
      // Above the cooling setpoint the conduction term turns into a gain.
      cooling_wh += std::max(0.0, gains - ua * (cfg.cool_setpoint - rec.dry_bulb));
    }
    lighting_wh += q_light;
  }
  EnergyBreakdown out;
  out.heating_kwh = heating_wh / 1000.0;
  out.cooling_kwh = cooling_wh / 1000.0;
  out.lighting_kwh = lighting_wh / 1000.0;
  out.total_kwh = out.heating_kwh + out.cooling_kwh + out.lighting_kwh;
  return out;
}

}  // namespace shapenergy
