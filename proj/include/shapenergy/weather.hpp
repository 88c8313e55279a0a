#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "shapenergy/errors.hpp"

namespace shapenergy {

struct SiteSpec {
  std::string name = "College Station TX (synthetic)";
  double latitude = 30.601;
  double longitude = -96.314;
  double timezone_offset_hours = -6.0;

  void validate() const {
    if (!(latitude >= -90 && latitude <= 90)) throw RangeError("latitude outside [-90, 90]");
    if (!(longitude >= -180 && longitude <= 180)) throw RangeError("longitude outside [-180, 180]");
  }
};

struct HourRecord {
  int month = 1;
  int day = 1;
  int hour = 1;  // hour-ending, 1..24
  double dry_bulb = 0.0;
  double dni = 0.0;
  double dhi = 0.0;

  friend bool operator==(const HourRecord&, const HourRecord&) = default;
};

enum class WeatherSource { synthetic, epw };

inline constexpr std::size_t kHoursPerYear = 8760;

struct WeatherSeries {
  SiteSpec site;
  std::vector<HourRecord> records;
  WeatherSource source = WeatherSource::synthetic;
};

struct SunPosition {
  double altitude = 0.0;     // degrees above horizon
  double azimuth = 0.0;      // degrees clockwise from north, [0, 360)
  double declination = 0.0;  // degrees
};

struct SyntheticWeatherConfig {
  double annual_mean = 20.6;
  double annual_amplitude = 8.5;
  double diurnal_amplitude = 5.5;
  double dni_peak = 850.0;
  double diffuse_fraction = 0.25;

  void validate() const {
    if (!(annual_amplitude >= 0) || !(diurnal_amplitude >= 0))
      throw RangeError("synthetic weather amplitudes must be >= 0");
    if (!(dni_peak >= 0)) throw RangeError("synthetic DNI peak must be >= 0");
    if (!(diffuse_fraction >= 0 && diffuse_fraction <= 1))
      throw RangeError("diffuse fraction outside [0, 1]");
  }
};

namespace calendar {

inline constexpr std::array<int, 12> kDaysInMonth{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

inline int day_of_year(int month, int day) {
  int doy = day;
  for (int m = 1; m < month; ++m) doy += kDaysInMonth[static_cast<std::size_t>(m - 1)];
  return doy;
}

struct MonthDay {
  int month;
  int day;
};

inline MonthDay month_day(int day_of_year) {
  int m = 1;
  while (day_of_year > kDaysInMonth[static_cast<std::size_t>(m - 1)]) {
    day_of_year -= kDaysInMonth[static_cast<std::size_t>(m - 1)];
    ++m;
  }
  return {m, day_of_year};
}

}  // namespace calendar

namespace detail {
inline constexpr double kDeg = std::numbers::pi / 180.0;
}

// Cooper declination, hour angle 15 deg/h from solar noon.
inline SunPosition sun_position(const SiteSpec& site, int day_of_year, double solar_hour) {
  using detail::kDeg;
  const double decl = 23.45 * std::sin(kDeg * 360.0 * (284.0 + day_of_year) / 365.0);
  const double omega = 15.0 * (solar_hour - 12.0);
  const double phi = site.latitude * kDeg;
  const double delta = decl * kDeg;
  const double w = omega * kDeg;

  double sin_alt = std::sin(phi) * std::sin(delta) + std::cos(phi) * std::cos(delta) * std::cos(w);
  sin_alt = std::clamp(sin_alt, -1.0, 1.0);
  const double altitude = std::asin(sin_alt) / kDeg;

  // Angle from south, positive toward west.
  const double from_south =
      std::atan2(std::sin(w) * std::cos(delta),
                 std::sin(phi) * std::cos(w) * std::cos(delta) - std::cos(phi) * std::sin(delta)) /
      kDeg;
  double azimuth = 180.0 + from_south;
  if (azimuth >= 360.0) azimuth -= 360.0;
  if (azimuth < 0.0) azimuth += 360.0;
  return {altitude, azimuth, decl};
}

// Minutes; Spencer-style fit.
inline double equation_of_time(int day_of_year) {
  const double b = detail::kDeg * 360.0 * (day_of_year - 81) / 364.0;
  return 9.87 * std::sin(2 * b) - 7.53 * std::cos(b) - 1.5 * std::sin(b);
}

// Solar hour at the middle of the record's hour. Synthetic series use clock
// time directly (solar noon = clock noon); EPW series get longitude and
// equation-of-time corrections.
inline double record_solar_hour(const WeatherSeries& w, const HourRecord& r) {
  const double clock_mid = r.hour - 0.5;
  if (w.source == WeatherSource::synthetic) return clock_mid;
  const int doy = calendar::day_of_year(r.month, r.day);
  return clock_mid + (w.site.longitude - 15.0 * w.site.timezone_offset_hours) / 15.0 +
         equation_of_time(doy) / 60.0;
}

inline WeatherSeries synthesize_weather(const SyntheticWeatherConfig& cfg, const SiteSpec& site) {
  cfg.validate();
  site.validate();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  WeatherSeries w;
  w.site = site;
  w.source = WeatherSource::synthetic;
  w.records.reserve(kHoursPerYear);
  for (int doy = 1; doy <= 365; ++doy) {
    const auto md = calendar::month_day(doy);
    const double seasonal = cfg.annual_mean - cfg.annual_amplitude * std::cos(two_pi * (doy - 15) / 365.0);
    for (int hour = 1; hour <= 24; ++hour) {
      const double solar_hour = hour - 0.5;
      HourRecord r;
      r.month = md.month;
      r.day = md.day;
      r.hour = hour;
      r.dry_bulb = seasonal + cfg.diurnal_amplitude * std::cos(two_pi * (solar_hour - 15.0) / 24.0);
      const SunPosition sun = sun_position(site, doy, solar_hour);
      if (sun.altitude > 0.0) {
        r.dni = cfg.dni_peak * std::pow(std::sin(sun.altitude * detail::kDeg), 0.6);
        r.dhi = cfg.diffuse_fraction * r.dni;
      }
      w.records.push_back(r);
    }
  }
  return w;
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, std::size_t field_no, const char* name) {
  field = trim(field);
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty()) {
    throw ParseError("field " + std::to_string(field_no) + " (" + name + ") is not numeric: '" +
                         std::string(field) + "'",
                     line);
  }
  return value;
}

}  // namespace detail

// EPW: 8 header lines, then 8760 hourly rows. 1-based CSV fields used:
// month 2, day 3, hour 4, dry-bulb 7, direct normal 15, diffuse horizontal 16.
// LOCATION header supplies latitude (7), longitude (8), time zone (9).
inline WeatherSeries parse_epw(std::string_view data) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start < data.size()) {
      std::size_t nl = data.find('\n', start);
      if (nl == std::string_view::npos) nl = data.size();
      lines.push_back(detail::trim(data.substr(start, nl - start)));
      start = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
  }
  constexpr std::size_t kHeaderLines = 8;
  if (lines.size() < kHeaderLines) throw ParseError("EPW header truncated", lines.size() + 1);

  WeatherSeries w;
  w.source = WeatherSource::epw;
  const auto loc = detail::split_csv(lines[0]);
  if (loc.empty() || detail::trim(loc[0]) != "LOCATION") {
    throw ParseError("first line is not a LOCATION record", 1);
  }
  if (loc.size() < 9) throw ParseError("LOCATION record has fewer than 9 fields", 1);
  w.site.name = std::string(detail::trim(loc[1]));
  w.site.latitude = detail::parse_number<double>(loc[6], 1, 7, "latitude");
  w.site.longitude = detail::parse_number<double>(loc[7], 1, 8, "longitude");
  w.site.timezone_offset_hours = detail::parse_number<double>(loc[8], 1, 9, "time zone");
  try {
    w.site.validate();
  } catch (const RangeError& e) {
    throw ParseError(e.what(), 1);
  }

  const std::size_t rows = lines.size() - kHeaderLines;
  if (rows != kHoursPerYear) {
    throw ParseError("expected 8760 rows, found " + std::to_string(rows), lines.size());
  }
  w.records.reserve(kHoursPerYear);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t line_no = kHeaderLines + i + 1;
    const auto f = detail::split_csv(lines[kHeaderLines + i]);
    if (f.size() < 16) {
      throw ParseError("data row has " + std::to_string(f.size()) + " fields, need at least 16",
                       line_no);
    }
    HourRecord r;
    r.month = detail::parse_number<int>(f[1], line_no, 2, "month");
    r.day = detail::parse_number<int>(f[2], line_no, 3, "day");
    r.hour = detail::parse_number<int>(f[3], line_no, 4, "hour");
    r.dry_bulb = detail::parse_number<double>(f[6], line_no, 7, "dry-bulb");
    r.dni = detail::parse_number<double>(f[14], line_no, 15, "direct normal");
    r.dhi = detail::parse_number<double>(f[15], line_no, 16, "diffuse horizontal");

    if (r.dry_bulb >= 99.9) throw ParseError("field 7 (dry-bulb) holds missing-value sentinel", line_no);
    if (r.dni >= 9999) throw ParseError("field 15 (direct normal) holds missing-value sentinel", line_no);
    if (r.dhi >= 9999) throw ParseError("field 16 (diffuse horizontal) holds missing-value sentinel", line_no);
    if (r.dry_bulb < -60 || r.dry_bulb > 60) throw ParseError("field 7 (dry-bulb) outside [-60, 60]", line_no);
    if (r.dni < 0) throw ParseError("field 15 (direct normal) is negative", line_no);
    if (r.dhi < 0) throw ParseError("field 16 (diffuse horizontal) is negative", line_no);

    const auto expected = calendar::month_day(static_cast<int>(i / 24) + 1);
    const int expected_hour = static_cast<int>(i % 24) + 1;
    if (r.month != expected.month || r.day != expected.day || r.hour != expected_hour) {
      throw ParseError("row out of chronological order: expected " + std::to_string(expected.month) +
                           "/" + std::to_string(expected.day) + " hour " +
                           std::to_string(expected_hour),
                       line_no);
    }
    w.records.push_back(r);
  }
  return w;
}

namespace detail {

inline std::string shortest(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace detail

// Writes a structurally valid EPW. Channels the model does not carry are
// filled with neutral placeholders.
inline std::string serialize_epw(const WeatherSeries& w) {
  using detail::shortest;
  std::string out;
  out.reserve(kHoursPerYear * 120);
  out += "LOCATION," + w.site.name + ",-,USA,synthetic,000000," + shortest(w.site.latitude) + "," +
         shortest(w.site.longitude) + "," + shortest(w.site.timezone_offset_hours) + ",0\n";
  out += "DESIGN CONDITIONS,0\n";
  out += "TYPICAL/EXTREME PERIODS,0\n";
  out += "GROUND TEMPERATURES,0\n";
  out += "HOLIDAYS/DAYLIGHT SAVINGS,No,0,0,0\n";
  out += "COMMENTS 1,generated by shapenergy\n";
  out += "COMMENTS 2,\n";
  out += "DATA PERIODS,1,1,Data,Sunday, 1/ 1,12/31\n";
  for (const auto& r : w.records) {
    out += "1999," + std::to_string(r.month) + "," + std::to_string(r.day) + "," +
           std::to_string(r.hour) + ",0,?9?9?9?9E0?9?9?9?9?9?9?9?9?9?9?9?9?9?9?9*9*9?9?9?9," +
           shortest(r.dry_bulb) + ",10,50,101325,0,0,300,0," + shortest(r.dni) + "," +
           shortest(r.dhi) + ",0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n";
  }
  return out;
}

}  // namespace shapenergy
