#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "shapenergy/checkpoint.hpp"
#include "shapenergy/dataset.hpp"
#include "shapenergy/energy.hpp"
#include "shapenergy/geometry.hpp"
#include "shapenergy/raster.hpp"
#include "shapenergy/train.hpp"
#include "shapenergy/version.hpp"
#include "shapenergy/weather.hpp"

namespace shapenergy {

struct ServiceOptions {
  std::optional<std::filesystem::path> dnn_checkpoint;
  std::optional<std::filesystem::path> cnn_checkpoint;
  std::optional<std::filesystem::path> data_dir;
};

struct Response {
  int status = 200;
  json body;
};

// Request handlers are pure functions of immutable state loaded at
// construction, so one instance can serve concurrent requests.
class Service {
 public:
  explicit Service(const ServiceOptions& opt) {
    if (opt.data_dir) {
      manifest_ = read_manifest(*opt.data_dir);
      manifest_->at("config").get_to(config_);
    }
    config_.geometry.validate();
    config_.building.validate();
    raster_ = config_.raster();
    weather_ = load_weather(config_.weather);
    if (opt.dnn_checkpoint) dnn_ = load_model(*opt.dnn_checkpoint, "dnn");
    if (opt.cnn_checkpoint) cnn_ = load_model(*opt.cnn_checkpoint, "cnn");
  }

  Response info() const {
    json models = json::object();
    for (const auto* m : {&dnn_, &cnn_}) {
      if (!*m) continue;
      const auto& ck = **m;
      models[ck.state.spec.family] = {{"spec", ck.state.spec},
                                      {"param_count", ck.state.params.size()},
                                      {"normalizer", ck.normalizer}};
    }
    json dataset = nullptr;
    if (manifest_) {
      dataset = {{"n_samples", config_.n_samples},
                 {"seed", config_.seed},
                 {"n_train", manifest_->at("split").at("train").size()},
                 {"n_test", manifest_->at("split").at("test").size()},
                 {"normalizer", manifest_->at("normalizer")},
                 {"weather", config_.weather}};
    }
    return ok({{"models", models},
               {"dataset", dataset},
               {"raster", {{"width", raster_.width_px}, {"height", raster_.height_px}}},
               {"offset_range", {-ShapeParams::kMaxOffset, ShapeParams::kMaxOffset}}});
  }

  Response footprint(std::string_view body) const {
    return with_params(body, [&](const ShapeParams& p) {
      const Footprint f = build_footprint(p, config_.geometry);
      json vertices = json::array();
      for (const auto& v : f.vertices()) vertices.push_back({v.x, v.y});
      const BinaryImage img = rasterize(f, raster_);
      json rows = json::array();
      for (std::size_t r = 0; r < img.height(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < img.width(); ++c) row.push_back(static_cast<int>(img.at(r, c)));
        rows.push_back(std::move(row));
      }
      return ok({{"vertices", vertices}, {"area_m2", f.area()}, {"raster", rows}});
    });
  }

  Response predict(std::string_view body) const {
    return with_params(body, [&](const ShapeParams& p) {
      if (!dnn_ || !cnn_) return error(503, std::string("model not loaded: ") + (!dnn_ ? "dnn" : "cnn"));
      return ok({{"dnn_kwh", predict_kwh(*dnn_, p)}, {"cnn_kwh", predict_kwh(*cnn_, p)}});
    });
  }

  Response simulate(std::string_view body) const {
    return with_params(body, [&](const ShapeParams& p) {
      const auto e = annual_energy(build_footprint(p, config_.geometry), weather_, config_.building);
      return ok({{"heating_kwh", e.heating_kwh},
                 {"cooling_kwh", e.cooling_kwh},
                 {"lighting_kwh", e.lighting_kwh},
                 {"total_kwh", e.total_kwh}});
    });
  }

  Response handle(std::string_view method, std::string_view path, std::string_view body) const {
    if (method == "GET" && path == "/api/info") return info();
    if (method == "POST" && path == "/api/footprint") return footprint(body);
    if (method == "POST" && path == "/api/predict") return predict(body);
    if (method == "POST" && path == "/api/simulate") return simulate(body);
    return error(404, "no such endpoint");
  }

  double predict_kwh(const Checkpoint& ck, const ShapeParams& p) const {
    Dataset one;
    one.config = config_;
    one.samples.push_back({0, p, rasterize(build_footprint(p, config_.geometry), raster_), {}});
    const std::size_t id = 0;
    nn::Network net(ck.state.spec);
    const auto& out = net.forward(ck.state.params, make_inputs(ck.state.spec, one, std::span(&id, 1)));
    return ck.normalizer.invert(out.values[0]);
  }

  const std::optional<Checkpoint>& dnn() const { return dnn_; }
  const std::optional<Checkpoint>& cnn() const { return cnn_; }

 private:
  static Checkpoint load_model(const std::filesystem::path& dir, const std::string& family) {
    Checkpoint ck = load_checkpoint(dir);
    if (ck.state.spec.family != family) {
      throw LoadError(dir.string() + ": expected a " + family + " checkpoint, found " + ck.state.spec.family);
    }
    return ck;
  }

  static Response ok(json body) {
    body["version"] = kVersion;
    return {200, std::move(body)};
  }

  static Response error(int status, const std::string& what) { return {status, {{"error", what}, {"version", kVersion}}}; }

  // Parses {"x": [x1, x2, x3, x4]}: 400 when malformed, 422 when out of range.
  template <typename F>
  static Response with_params(std::string_view body, F&& f) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      return error(400, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("x") || !j["x"].is_array() || j["x"].size() != 4) {
      return error(400, "body must be {\"x\": [x1, x2, x3, x4]}");
    }
    std::array<double, 4> x{};
    for (std::size_t i = 0; i < 4; ++i) {
      if (!j["x"][i].is_number()) return error(400, "x entries must be numbers");
      x[i] = j["x"][i].get<double>();
    }
    ShapeParams p;
    try {
      p = ShapeParams(x);
    } catch (const RangeError& e) {
      return error(422, e.what());
    }
    return f(p);
  }

  DatasetConfig config_;
  std::optional<json> manifest_;
  RasterSpec raster_;
  WeatherSeries weather_;
  std::optional<Checkpoint> dnn_;
  std::optional<Checkpoint> cnn_;
};

inline void mount(httplib::Server& server, const Service& service,
                  const std::optional<std::filesystem::path>& static_dir = std::nullopt) {
  auto reply = [&service](const httplib::Request& req, httplib::Response& res) {
    const Response r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get("/api/info", reply);
  server.Post("/api/footprint", reply);
  server.Post("/api/predict", reply);
  server.Post("/api/simulate", reply);
  if (static_dir && std::filesystem::is_directory(*static_dir)) server.set_mount_point("/", static_dir->string());
}

}  // namespace shapenergy
