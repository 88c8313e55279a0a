#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "shapenergy/weather.hpp"

using namespace shapenergy;

namespace {

constexpr double kPi = 3.14159265358979323846;

// EPW with 8 header lines and n data rows; row i carries dry-bulb
// (i % 30) - 5 + 0.25, DNI 10*(i % 7) and DHI 3*(i % 11).
std::string golden_epw(std::size_t n_rows, double latitude = 30.6) {
  std::string s = "LOCATION,Test Station,TX,USA,TMY3,722445," + std::to_string(latitude) + ",-96.3,-6.0,96.0\n";
  s += "DESIGN CONDITIONS,0\nTYPICAL/EXTREME PERIODS,0\nGROUND TEMPERATURES,0\n";
  s += "HOLIDAYS/DAYLIGHT SAVINGS,No,0,0,0\nCOMMENTS 1,golden\nCOMMENTS 2,\nDATA PERIODS,1,1,Data,Sunday, 1/ 1,12/31\n";
  const int days[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  std::size_t i = 0;
  for (int m = 1; m <= 12; ++m)
    for (int d = 1; d <= days[m - 1]; ++d)
      for (int h = 1; h <= 24; ++h, ++i) {
        if (i >= n_rows) return s;
        const double t = static_cast<double>(i % 30) - 5 + 0.25;
        s += "1999," + std::to_string(m) + "," + std::to_string(d) + "," + std::to_string(h) + ",0,A7A7," +
             std::to_string(t) + ",5.0,85,101325,0,0,290,120," + std::to_string(10 * (i % 7)) + "," +
             std::to_string(3 * (i % 11)) + ",0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n";
      }
  return s;
}

std::size_t parse_error_line(const std::string& data) {
  try {
    parse_epw(data);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

// Replace the 1-based field of the 1-based line.
std::string with_field(std::string data, std::size_t line, std::size_t field, const std::string& value) {
  std::size_t pos = 0;
  for (std::size_t l = 1; l < line; ++l) pos = data.find('\n', pos) + 1;
  for (std::size_t f = 1; f < field; ++f) pos = data.find(',', pos) + 1;
  const std::size_t end = data.find_first_of(",\n", pos);
  return data.replace(pos, end - pos, value);
}

}  // namespace

TEST(Weather, EpwFieldIndicesFromDocumentedRow) {
  std::string data = golden_epw(8760);
  const std::string row = "1999,1,1,1,0,A,7.2,5.0,85,101325,0,0,290,120,45,60,0,0,0,0";
  const std::size_t start = data.find("\n1999") + 1;
  const std::size_t end = data.find('\n', start);
  data.replace(start, end - start, row);
  const WeatherSeries w = parse_epw(data);
  EXPECT_EQ(w.records[0].dry_bulb, 7.2);
  EXPECT_EQ(w.records[0].dni, 45.0);
  EXPECT_EQ(w.records[0].dhi, 60.0);
}

TEST(Weather, EpwGoldenValues) {
  const WeatherSeries w = parse_epw(golden_epw(8760));
  EXPECT_EQ(w.source, WeatherSource::epw);
  EXPECT_EQ(w.site.name, "Test Station");
  EXPECT_EQ(w.site.latitude, 30.6);
  EXPECT_EQ(w.site.longitude, -96.3);
  EXPECT_EQ(w.site.timezone_offset_hours, -6.0);
  ASSERT_EQ(w.records.size(), 8760u);
  for (std::size_t i : {0ul, 1ul, 23ul, 24ul, 4000ul, 8759ul}) {
    EXPECT_EQ(w.records[i].dry_bulb, static_cast<double>(i % 30) - 5 + 0.25) << i;
    EXPECT_EQ(w.records[i].dni, 10.0 * static_cast<double>(i % 7)) << i;
    EXPECT_EQ(w.records[i].dhi, 3.0 * static_cast<double>(i % 11)) << i;
  }
  EXPECT_EQ(w.records[8759].month, 12);
  EXPECT_EQ(w.records[8759].day, 31);
  EXPECT_EQ(w.records[8759].hour, 24);
}

TEST(Weather, EpwRowCountError) {
  try {
    parse_epw(golden_epw(8759));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("expected 8760 rows, found 8759"), std::string::npos);
  }
}

TEST(Weather, EpwStructuredErrors) {
  const std::string good = golden_epw(8760);
  EXPECT_EQ(parse_error_line(with_field(good, 20, 7, "abc")), 20u);
  EXPECT_EQ(parse_error_line(with_field(good, 21, 7, "99.9")), 21u);
  EXPECT_EQ(parse_error_line(with_field(good, 22, 15, "9999")), 22u);
  EXPECT_EQ(parse_error_line(with_field(good, 23, 16, "9999")), 23u);
  EXPECT_EQ(parse_error_line(with_field(good, 24, 15, "-1")), 24u);
  EXPECT_EQ(parse_error_line(with_field(good, 25, 4, "7")), 25u);  // out of order
  EXPECT_EQ(parse_error_line(with_field(good, 1, 7, "north")), 1u);
  EXPECT_EQ(parse_error_line(with_field(good, 1, 1, "PLACE")), 1u);
  EXPECT_EQ(parse_error_line(good.substr(0, 40)), 2u);
  try {
    parse_epw(with_field(good, 30, 15, "9999"));
  } catch (const ParseError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("line 30"), std::string::npos);
    EXPECT_NE(what.find("field 15"), std::string::npos);
  }
}

TEST(Weather, EpwLatitudeEcho) {
  EXPECT_EQ(parse_epw(golden_epw(8760, 30.6)).site.latitude, 30.6);
}

TEST(Weather, SerializeRoundTrip) {
  const WeatherSeries w = synthesize_weather({}, {});
  const WeatherSeries back = parse_epw(serialize_epw(w));
  ASSERT_EQ(back.records.size(), w.records.size());
  for (std::size_t i = 0; i < w.records.size(); ++i) ASSERT_EQ(back.records[i], w.records[i]) << i;
  EXPECT_EQ(back.site.latitude, w.site.latitude);
  EXPECT_EQ(back.site.longitude, w.site.longitude);
}

TEST(Weather, DeclinationAtSolstice) {
  const SunPosition s = sun_position({}, 355, 12.0);
  EXPECT_NEAR(s.declination, -23.45, 0.05);
}

TEST(Weather, EquinoxNoon) {
  const SiteSpec site;
  const SunPosition s = sun_position(site, 81, 12.0);
  EXPECT_NEAR(s.altitude, 90.0 - 30.601, 0.5);
  EXPECT_NEAR(s.azimuth, 180.0, 1e-9);
}

TEST(Weather, NoonIsDailyMaximum) {
  const SiteSpec site;
  for (int doy : {1, 100, 200, 300}) {
    const double noon = sun_position(site, doy, 12.0).altitude;
    for (double h = 0.5; h < 24.0; h += 0.5) EXPECT_LE(sun_position(site, doy, h).altitude, noon + 1e-12);
  }
}

TEST(Weather, AltitudeAndAzimuthAgainstVectorOracle) {
  // Sun vector built from rotations, independent of the closed forms.
  const SiteSpec site;
  for (int doy : {20, 172, 290}) {
    for (double h : {7.5, 10.0, 12.0, 15.25, 18.0}) {
      const double d = 23.45 * std::sin(2 * kPi * (284.0 + doy) / 365.0) * kPi / 180;
      const double w = 15.0 * (h - 12.0) * kPi / 180;
      const double p = site.latitude * kPi / 180;
      // Equatorial frame -> local east/north/up.
      const double e = -std::cos(d) * std::sin(w);
      const double n = std::sin(d) * std::cos(p) - std::cos(d) * std::cos(w) * std::sin(p);
      const double u = std::sin(d) * std::sin(p) + std::cos(d) * std::cos(w) * std::cos(p);
      double az = std::atan2(e, n) * 180 / kPi;
      if (az < 0) az += 360;
      const SunPosition s = sun_position(site, doy, h);
      EXPECT_NEAR(s.altitude, std::asin(u) * 180 / kPi, 1e-9);
      EXPECT_NEAR(s.azimuth, az, 1e-9);
    }
  }
}

TEST(Weather, AzimuthMirrorsAboutSouth) {
  const SiteSpec site;
  for (int doy : {15, 100, 180, 250}) {
    for (double h = 0.5; h < 6.0; h += 0.5) {
      EXPECT_NEAR(sun_position(site, doy, 12 - h).azimuth + sun_position(site, doy, 12 + h).azimuth, 360.0, 1e-9);
    }
  }
}

TEST(Weather, SyntheticConstantConfig) {
  SyntheticWeatherConfig cfg;
  cfg.annual_mean = 20.0;
  cfg.annual_amplitude = 0.0;
  cfg.diurnal_amplitude = 0.0;
  const WeatherSeries w = synthesize_weather(cfg, {});
  ASSERT_EQ(w.records.size(), 8760u);
  for (const auto& r : w.records) ASSERT_EQ(r.dry_bulb, 20.0);
}

TEST(Weather, SyntheticNightIsDark) {
  const SiteSpec site;
  const WeatherSeries w = synthesize_weather({}, site);
  for (const auto& r : w.records) {
    const double alt = sun_position(site, calendar::day_of_year(r.month, r.day), record_solar_hour(w, r)).altitude;
    if (alt <= 0) {
      ASSERT_EQ(r.dni, 0.0);
      ASSERT_EQ(r.dhi, 0.0);
    } else {
      ASSERT_GT(r.dni, 0.0);
    }
  }
}

TEST(Weather, SyntheticDniSymmetricAboutNoon) {
  const WeatherSeries w = synthesize_weather({}, {});
  for (int day : {0, 90, 200, 364}) {
    for (int k = 0; k < 12; ++k) {
      // Hour-ending k+1 is centred at k+0.5, mirrored by 24-k at 23.5-k.
      EXPECT_NEAR(w.records[day * 24 + k].dni, w.records[day * 24 + 23 - k].dni, 1e-9);
    }
  }
}

TEST(Weather, Calendar) {
  EXPECT_EQ(calendar::day_of_year(1, 1), 1);
  EXPECT_EQ(calendar::day_of_year(3, 1), 60);
  EXPECT_EQ(calendar::day_of_year(12, 31), 365);
  for (int d = 1; d <= 365; ++d) {
    const auto md = calendar::month_day(d);
    EXPECT_EQ(calendar::day_of_year(md.month, md.day), d);
  }
}

TEST(Weather, SiteValidation) {
  SiteSpec s;
  s.latitude = 91;
  EXPECT_THROW(s.validate(), RangeError);
  SyntheticWeatherConfig c;
  c.diffuse_fraction = 1.5;
  EXPECT_THROW(c.validate(), RangeError);
}
