#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "shapenergy/energy.hpp"
#include "shapenergy/errors.hpp"
#include "shapenergy/geometry.hpp"
#include "shapenergy/raster.hpp"
#include "shapenergy/rng.hpp"
#include "shapenergy/weather.hpp"

namespace shapenergy {

using json = nlohmann::json;

inline constexpr int kDatasetFormatVersion = 1;

struct WeatherSpec {
  WeatherSource source = WeatherSource::synthetic;
  SyntheticWeatherConfig synthetic;
  SiteSpec site;
  std::string epw_path;  // only for WeatherSource::epw
};

struct DatasetConfig {
  std::size_t n_samples = 350;
  std::uint64_t seed = 42;
  double split_ratio = 0.8;
  WeatherSpec weather;
  GeometryConfig geometry;
  BuildingConfig building;
  double raster_margin = RasterSpec::kDefaultMargin;
  std::size_t width_px = 48;
  std::size_t height_px = 30;

  RasterSpec raster() const { return RasterSpec::for_geometry(geometry, raster_margin, width_px, height_px); }

  void validate() const {
    if (n_samples < 10) throw RangeError("dataset needs at least 10 samples");
    if (!(split_ratio > 0 && split_ratio < 1)) throw RangeError("split ratio outside (0, 1)");
    geometry.validate();
    building.validate();
  }
};

struct Sample {
  std::size_t id = 0;
  ShapeParams params;
  BinaryImage image;
  EnergyBreakdown label;
};

// Inputs: offsets divided by 3.5. Targets: z-score of total kWh, fitted on
// the training split (population standard deviation).
struct Normalizer {
  double mean = 0.0;
  double stddev = 1.0;

  static constexpr double kParamScale = ShapeParams::kMaxOffset;

  double apply(double y) const { return (y - mean) / stddev; }
  double invert(double z) const { return z * stddev + mean; }
  static std::array<double, 4> apply_params(const ShapeParams& p) {
    return {p[0] / kParamScale, p[1] / kParamScale, p[2] / kParamScale, p[3] / kParamScale};
  }
};

inline Normalizer fit_normalizer(std::span<const double> train_totals) {
  if (train_totals.size() < 2) throw RangeError("normalizer needs at least 2 training samples");
  double mean = 0.0;
  for (double y : train_totals) mean += y;
  mean /= static_cast<double>(train_totals.size());
  double var = 0.0;
  for (double y : train_totals) var += (y - mean) * (y - mean);
  var /= static_cast<double>(train_totals.size());
  if (!(var > 0.0)) throw RangeError("degenerate target spread: training labels are constant");
  return {mean, std::sqrt(var)};
}

struct Dataset {
  DatasetConfig config;
  std::vector<Sample> samples;
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;
  Normalizer normalizer;

  std::vector<double> totals(std::span<const std::size_t> ids) const {
    std::vector<double> out;
    out.reserve(ids.size());
    for (auto id : ids) out.push_back(samples[id].label.total_kwh);
    return out;
  }
};

// n draws of (x1, x2, x3, x4), each uniform on [-3.5, 3.5), in that order.
inline std::vector<ShapeParams> sample_params(std::size_t n, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<ShapeParams> out;
  out.reserve(n);
  const double m = ShapeParams::kMaxOffset;
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.uniform(-m, m);
    const double x2 = rng.uniform(-m, m);
    const double x3 = rng.uniform(-m, m);
    const double x4 = rng.uniform(-m, m);
    out.emplace_back(x1, x2, x3, x4);
  }
  return out;
}

// Stream used for the train/test permutation, distinct from sampling.
inline std::uint64_t split_seed(std::uint64_t seed) { return derive_seed(seed, 1); }

// Seeded Fisher-Yates over 0..n-1; first floor(ratio * n) are train. Both
// lists are returned sorted.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split(std::size_t n, double ratio,
                                                                         std::uint64_t seed) {
  if (!(ratio > 0 && ratio < 1)) throw RangeError("split ratio outside (0, 1)");
  Xoshiro256 rng(seed);
  auto perm = permutation(n, rng);
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write failed: " + path.string());
}

inline WeatherSeries load_weather(const WeatherSpec& spec) {
  if (spec.source == WeatherSource::synthetic) return synthesize_weather(spec.synthetic, spec.site);
  return parse_epw(read_file(spec.epw_path));
}

inline Sample make_sample(std::size_t id, const ShapeParams& p, const DatasetConfig& cfg, const WeatherSeries& w) {
  const Footprint f = build_footprint(p, cfg.geometry);
  return {id, p, rasterize(f, cfg.raster()), annual_energy(f, w, cfg.building)};
}

inline Dataset generate(const DatasetConfig& cfg, const WeatherSeries& weather) {
  cfg.validate();
  Dataset ds;
  ds.config = cfg;
  const auto params = sample_params(cfg.n_samples, cfg.seed);
  ds.samples.reserve(params.size());
  for (std::size_t id = 0; id < params.size(); ++id) {
    try {
      ds.samples.push_back(make_sample(id, params[id], cfg, weather));
    } catch (const Error& e) {
      throw Error("sample " + std::to_string(id) + ": " + e.what());
    }
  }
  std::tie(ds.train_ids, ds.test_ids) = split(cfg.n_samples, cfg.split_ratio, split_seed(cfg.seed));
  ds.normalizer = fit_normalizer(ds.totals(ds.train_ids));
  return ds;
}

inline Dataset generate(const DatasetConfig& cfg) { return generate(cfg, load_weather(cfg.weather)); }

// ---- serialization ---------------------------------------------------------

inline void to_json(json& j, const GeometryConfig& g) {
  j = {{"area_target", g.area_target}, {"width_to_length", g.width_to_length}};
}
inline void from_json(const json& j, GeometryConfig& g) {
  j.at("area_target").get_to(g.area_target);
  j.at("width_to_length").get_to(g.width_to_length);
}

inline void to_json(json& j, const BuildingConfig& b) {
  j = {{"floors", b.floors},
       {"floor_height", b.floor_height},
       {"floor_area", b.floor_area},
       {"wwr", b.wwr},
       {"u_wall", b.u_wall},
       {"u_window", b.u_window},
       {"shgc", b.shgc},
       {"heat_setpoint", b.heat_setpoint},
       {"cool_setpoint", b.cool_setpoint},
       {"internal_gain_density", b.internal_gain_density},
       {"lighting_power_density", b.lighting_power_density},
       {"daylight_dimming_max", b.daylight_dimming_max},
       {"occupied_first_hour", b.occupied_first_hour},
       {"occupied_last_hour", b.occupied_last_hour},
       {"jan1_weekday", b.jan1_weekday},
       {"patch_max_width", b.patch_max_width},
       {"patch_rows_per_floor", b.patch_rows_per_floor}};
}
inline void from_json(const json& j, BuildingConfig& b) {
  j.at("floors").get_to(b.floors);
  j.at("floor_height").get_to(b.floor_height);
  j.at("floor_area").get_to(b.floor_area);
  j.at("wwr").get_to(b.wwr);
  j.at("u_wall").get_to(b.u_wall);
  j.at("u_window").get_to(b.u_window);
  j.at("shgc").get_to(b.shgc);
  j.at("heat_setpoint").get_to(b.heat_setpoint);
  j.at("cool_setpoint").get_to(b.cool_setpoint);
  j.at("internal_gain_density").get_to(b.internal_gain_density);
  j.at("lighting_power_density").get_to(b.lighting_power_density);
  j.at("daylight_dimming_max").get_to(b.daylight_dimming_max);
  j.at("occupied_first_hour").get_to(b.occupied_first_hour);
  j.at("occupied_last_hour").get_to(b.occupied_last_hour);
  j.at("jan1_weekday").get_to(b.jan1_weekday);
  j.at("patch_max_width").get_to(b.patch_max_width);
  j.at("patch_rows_per_floor").get_to(b.patch_rows_per_floor);
}

inline void to_json(json& j, const SiteSpec& s) {
  j = {{"name", s.name}, {"latitude", s.latitude}, {"longitude", s.longitude}, {"timezone_offset_hours", s.timezone_offset_hours}};
}
inline void from_json(const json& j, SiteSpec& s) {
  j.at("name").get_to(s.name);
  j.at("latitude").get_to(s.latitude);
  j.at("longitude").get_to(s.longitude);
  j.at("timezone_offset_hours").get_to(s.timezone_offset_hours);
}

inline void to_json(json& j, const SyntheticWeatherConfig& c) {
  j = {{"annual_mean", c.annual_mean},
       {"annual_amplitude", c.annual_amplitude},
       {"diurnal_amplitude", c.diurnal_amplitude},
       {"dni_peak", c.dni_peak},
       {"diffuse_fraction", c.diffuse_fraction}};
}
inline void from_json(const json& j, SyntheticWeatherConfig& c) {
  j.at("annual_mean").get_to(c.annual_mean);
  j.at("annual_amplitude").get_to(c.annual_amplitude);
  j.at("diurnal_amplitude").get_to(c.diurnal_amplitude);
  j.at("dni_peak").get_to(c.dni_peak);
  j.at("diffuse_fraction").get_to(c.diffuse_fraction);
}

inline void to_json(json& j, const WeatherSpec& w) {
  if (w.source == WeatherSource::synthetic) {
    j = {{"source", "synthetic"}, {"synthetic", w.synthetic}, {"site", w.site}};
  } else {
    j = {{"source", "epw"}, {"epw_path", w.epw_path}};
  }
}
inline void from_json(const json& j, WeatherSpec& w) {
  const auto source = j.at("source").get<std::string>();
  if (source == "synthetic") {
    w.source = WeatherSource::synthetic;
    j.at("synthetic").get_to(w.synthetic);
    j.at("site").get_to(w.site);
  } else if (source == "epw") {
    w.source = WeatherSource::epw;
    j.at("epw_path").get_to(w.epw_path);
  } else {
    throw LoadError("unknown weather source '" + source + "'");
  }
}

inline void to_json(json& j, const DatasetConfig& c) {
  j = {{"n_samples", c.n_samples}, {"seed", c.seed},           {"split_ratio", c.split_ratio},
       {"weather", c.weather},     {"geometry", c.geometry},   {"building", c.building},
       {"raster_margin", c.raster_margin}, {"width_px", c.width_px}, {"height_px", c.height_px}};
}
inline void from_json(const json& j, DatasetConfig& c) {
  j.at("n_samples").get_to(c.n_samples);
  j.at("seed").get_to(c.seed);
  j.at("split_ratio").get_to(c.split_ratio);
  j.at("weather").get_to(c.weather);
  j.at("geometry").get_to(c.geometry);
  j.at("building").get_to(c.building);
  j.at("raster_margin").get_to(c.raster_margin);
  j.at("width_px").get_to(c.width_px);
  j.at("height_px").get_to(c.height_px);
}

inline void to_json(json& j, const Normalizer& n) { j = {{"target_mean", n.mean}, {"target_std", n.stddev}, {"param_scale", Normalizer::kParamScale}}; }
inline void from_json(const json& j, Normalizer& n) {
  j.at("target_mean").get_to(n.mean);
  j.at("target_std").get_to(n.stddev);
}

// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::array<char, 17> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + 16, v, 16);
  std::string s(buf.data(), ptr);
  return std::string(16 - s.size(), '0') + s;
}

inline std::string image_filename(std::size_t id) { return "img_" + std::to_string(id) + ".pgm"; }

inline constexpr const char* kLabelsHeader = "id,x1,x2,x3,x4,heating_kwh,cooling_kwh,lighting_kwh,total_kwh";

inline std::string encode_labels_csv(const Dataset& ds) {
  std::string out = std::string(kLabelsHeader) + "\n";
  for (const auto& s : ds.samples) {
    out += std::to_string(s.id);
    for (double x : s.params.values()) out += "," + format_double(x);
    out += "," + format_double(s.label.heating_kwh) + "," + format_double(s.label.cooling_kwh) + "," +
           format_double(s.label.lighting_kwh) + "," + format_double(s.label.total_kwh) + "\n";
  }
  return out;
}

inline json dataset_manifest(const Dataset& ds, const json& files) {
  return {{"format_version", kDatasetFormatVersion},
          {"generator", "shapenergy"},
          {"config", ds.config},
          {"prng", Xoshiro256::kName},
          {"draw_order", "x1,x2,x3,x4 per sample; split permutation from derive_seed(seed, 1)"},
          {"split", {{"train", ds.train_ids}, {"test", ds.test_ids}}},
          {"normalizer", ds.normalizer},
          {"files", files}};
}

// labels.csv and images first, manifest.json last as the commit marker.
inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json files = json::object();
  const std::string labels = encode_labels_csv(ds);
  write_file(dir / "labels.csv", labels);
  files["labels.csv"] = hex64(fnv1a64(labels));
  for (const auto& s : ds.samples) {
    const std::string pgm = encode_pgm(s.image);
    write_file(dir / image_filename(s.id), pgm);
    files[image_filename(s.id)] = hex64(fnv1a64(pgm));
  }
  write_file(dir / "manifest.json", dataset_manifest(ds, files).dump(2) + "\n");
}

struct LoadOptions {
  bool verify_checksums = true;
  std::size_t audit_count = 5;  // samples re-rasterized and compared to their PGM; >= n checks all
};

namespace detail {

inline double parse_csv_double(std::string_view f, const std::string& file, std::size_t line) {
  double v{};
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || ptr != f.data() + f.size() || f.empty()) {
    throw LoadError(file + ": line " + std::to_string(line) + ": bad number '" + std::string(f) + "'");
  }
  return v;
}

}  // namespace detail

inline json read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  json m;
  try {
    m = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  if (!m.contains("format_version") || m["format_version"] != kDatasetFormatVersion) {
    throw LoadError(path.string() + ": unsupported format_version");
  }
  return m;
}

inline Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& opt = {}) {
  const json m = read_manifest(dir);
  const std::string manifest_name = (dir / "manifest.json").string();
  Dataset ds;
  try {
    m.at("config").get_to(ds.config);
    m.at("split").at("train").get_to(ds.train_ids);
    m.at("split").at("test").get_to(ds.test_ids);
    m.at("normalizer").get_to(ds.normalizer);
  } catch (const json::exception& e) {
    throw LoadError(manifest_name + ": " + e.what());
  }
  const json& files = m.at("files");
  auto check = [&](const std::string& name, std::string_view data) {
    if (!opt.verify_checksums) return;
    if (!files.contains(name) || files[name] != hex64(fnv1a64(data))) {
      throw LoadError((dir / name).string() + ": checksum mismatch");
    }
  };

  const std::string labels_name = (dir / "labels.csv").string();
  const std::string labels = read_file(dir / "labels.csv");
  check("labels.csv", labels);
  std::istringstream in(labels);
  std::string line;
  std::getline(in, line);
  if (line != kLabelsHeader) throw LoadError(labels_name + ": unexpected header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 9) throw LoadError(labels_name + ": line " + std::to_string(line_no) + ": expected 9 fields");
    Sample s;
    s.id = static_cast<std::size_t>(detail::parse_csv_double(f[0], labels_name, line_no));
    if (s.id != ds.samples.size()) throw LoadError(labels_name + ": line " + std::to_string(line_no) + ": ids not sequential");
    std::array<double, 4> x{};
    for (std::size_t k = 0; k < 4; ++k) x[k] = detail::parse_csv_double(f[1 + k], labels_name, line_no);
    try {
      s.params = ShapeParams(x);
    } catch (const RangeError& e) {
      throw LoadError(labels_name + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    s.label.heating_kwh = detail::parse_csv_double(f[5], labels_name, line_no);
    s.label.cooling_kwh = detail::parse_csv_double(f[6], labels_name, line_no);
    s.label.lighting_kwh = detail::parse_csv_double(f[7], labels_name, line_no);
    s.label.total_kwh = detail::parse_csv_double(f[8], labels_name, line_no);
    const auto& l = s.label;
    const double sum = l.heating_kwh + l.cooling_kwh + l.lighting_kwh;
    if (l.heating_kwh < 0 || l.cooling_kwh < 0 || l.lighting_kwh < 0 ||
        std::abs(sum - l.total_kwh) > 1e-9 * std::max(1.0, std::abs(l.total_kwh))) {
      throw LoadError(labels_name + ": line " + std::to_string(line_no) + ": inconsistent energy breakdown");
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.size() != ds.config.n_samples) {
    throw LoadError(labels_name + ": " + std::to_string(ds.samples.size()) + " rows, manifest says " +
                    std::to_string(ds.config.n_samples));
  }

  for (auto& s : ds.samples) {
    const auto path = dir / image_filename(s.id);
    const std::string pgm = read_file(path);
    check(image_filename(s.id), pgm);
    try {
      s.image = decode_pgm(pgm, ds.config.width_px, ds.config.height_px);
    } catch (const FormatError& e) {
      throw LoadError(path.string() + ": " + e.what());
    }
  }

  // Split must partition the ids.
  std::vector<int> seen(ds.samples.size(), 0);
  for (auto id : ds.train_ids) {
    if (id >= seen.size() || seen[id]++) throw LoadError(manifest_name + ": bad or duplicate train id");
  }
  for (auto id : ds.test_ids) {
    if (id >= seen.size() || seen[id]++) throw LoadError(manifest_name + ": bad or duplicate test id");
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw LoadError(manifest_name + ": split is not exhaustive");

  const Normalizer refit = fit_normalizer(ds.totals(ds.train_ids));
  if (std::abs(refit.mean - ds.normalizer.mean) > 1e-9 * std::abs(refit.mean) ||
      std::abs(refit.stddev - ds.normalizer.stddev) > 1e-9 * refit.stddev) {
    throw LoadError(manifest_name + ": normalizer does not match training labels");
  }

  Xoshiro256 rng(derive_seed(ds.config.seed, 2));
  const RasterSpec raster = ds.config.raster();
  const bool audit_all = opt.audit_count >= ds.samples.size();
  for (std::size_t k = 0; k < std::min(opt.audit_count, ds.samples.size()); ++k) {
    const auto id = audit_all ? k : static_cast<std::size_t>(rng.below(ds.samples.size()));
    const auto& s = ds.samples[id];
    if (rasterize(build_footprint(s.params, ds.config.geometry), raster) != s.image) {
      throw LoadError((dir / image_filename(id)).string() + ": image does not match its shape parameters");
    }
  }
  return ds;
}

}  // namespace shapenergy
