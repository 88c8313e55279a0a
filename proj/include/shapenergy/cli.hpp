#pragma once

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shapenergy/checkpoint.hpp"
#include "shapenergy/dataset.hpp"
#include "shapenergy/errors.hpp"
#include "shapenergy/nn.hpp"
#include "shapenergy/service.hpp"
#include "shapenergy/train.hpp"
#include "shapenergy/version.hpp"

namespace shapenergy::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr int kRunManifestVersion = 1;

// Bad command-line input that the option parser cannot catch by itself.
class UsageError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError(what + ": '" + s + "' is not a number");
  }
  if (used != s.size()) throw UsageError(what + ": '" + s + "' is not a number");
  return v;
}

inline ShapeParams parse_x(const std::string& s) {
  const auto parts = split_list(s);
  if (parts.size() != 4) throw UsageError("--x expects four comma-separated values x1,x2,x3,x4");
  std::array<double, 4> x{};
  for (std::size_t i = 0; i < 4; ++i) x[i] = parse_double(parts[i], "--x");
  try {
    return ShapeParams(x);
  } catch (const RangeError& e) {
    throw UsageError(e.what());
  }
}

inline std::vector<std::size_t> parse_depths(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& p : split_list(s)) {
    const double v = parse_double(p, "--depths");
    if (v < 1 || v != std::floor(v)) throw UsageError("--depths: '" + p + "' is not a positive integer");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw UsageError("--depths is empty");
  return out;
}

inline std::string json_arg(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + json_arg(v[i]);
    return out;
  }
  return v.dump();
}

// Folds `--config <file>` into the argument list. The file is either a flat
// {"flag": value} object or a run.json manifest (its "args" object is used).
// Flags given explicitly on the command line win.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  auto it = std::find_if(args.begin(), args.end(),
                         [](const std::string& a) { return a == "--config" || a.rfind("--config=", 0) == 0; });
  if (it == args.end()) return args;
  std::string path;
  if (*it == "--config") {
    if (std::next(it) == args.end()) throw UsageError("--config needs a file argument");
    path = *std::next(it);
    args.erase(it, std::next(it, 2));
  } else {
    path = it->substr(9);
    args.erase(it);
  }
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw UsageError("--config " + path + ": " + e.what());
  } catch (const LoadError& e) {
    throw UsageError(std::string("--config: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("--config " + path + ": expected a JSON object");
  const bool has_sub = args.size() > 1 && args[1].rfind("-", 0) != 0;
  if (!has_sub) {
    if (!j.contains("subcommand")) throw UsageError("--config " + path + ": no subcommand given");
    args.insert(args.begin() + 1, j["subcommand"].get<std::string>());
  }
  const json& flags = j.contains("args") ? j["args"] : j;
  for (const auto& [key, value] : flags.items()) {
    if (key == "subcommand" || key == "config") continue;
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin() + 2, args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given || value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else {
      args.push_back(flag + "=" + json_arg(value));
    }
  }
  return args;
}

// Every option of a subcommand with its effective value, for run.json.
inline json resolved_args(const CLI::App& sub) {
  json out = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    if (opt->get_expected_min() == 0) {
      out[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      out[name] = opt->results().front();
    } else if (!opt->get_default_str().empty()) {
      out[name] = opt->get_default_str();
    }
  }
  return out;
}

inline void write_run_manifest(const std::filesystem::path& dir, const CLI::App& sub, const json& configs,
                               const std::vector<std::string>& artifacts) {
  std::filesystem::create_directories(dir);
  const json m = {{"format_version", kRunManifestVersion},
                  {"tool", "shapenergy"},
                  {"tool_version", kVersion},
                  {"subcommand", sub.get_name()},
                  {"args", resolved_args(sub)},
                  {"configs", configs},
                  {"artifacts", artifacts}};
  write_file(dir / "run.json", m.dump(2) + "\n");
}

}  // namespace detail

struct TrainFlags {
  std::string model;
  std::size_t depth = 0;
  std::size_t epochs = 100;
  std::size_t batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  std::size_t filters = 2;
  std::size_t kernel = 3;
  std::size_t pool = 2;

  TrainConfig train_config() const {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch;
    c.lr = lr;
    c.seed = seed;
    return c;
  }
  nn::CnnOptions cnn_options(const DatasetConfig& d) const { return {filters, kernel, pool, d.height_px, d.width_px}; }
  nn::ModelSpec spec(std::size_t n_layers, const DatasetConfig& d) const {
    return model == "dnn" ? nn::build_dnn(n_layers) : nn::build_cnn(n_layers, cnn_options(d));
  }
};

inline void add_train_flags(CLI::App* sub, TrainFlags& f, bool with_depth) {
  sub->add_option("--model", f.model, "Model family")->required()->check(CLI::IsMember({"dnn", "cnn"}));
  if (with_depth) {
    sub->add_option("--depth", f.depth, "DNN layer count or CNN conv layer count")->required()->check(CLI::PositiveNumber);
  }
  sub->add_option("--epochs", f.epochs, "Training epochs")->check(CLI::PositiveNumber);
  sub->add_option("--batch", f.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  sub->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  sub->add_option("--seed", f.seed, "Training seed");
  sub->add_option("--filters", f.filters, "CNN filters per conv layer")->check(CLI::PositiveNumber);
  sub->add_option("--kernel", f.kernel, "CNN kernel size (odd)")->check(CLI::PositiveNumber);
  sub->add_option("--pool", f.pool, "CNN max-pool size")->check(CLI::PositiveNumber);
}

inline json train_configs(const TrainFlags& f, const DatasetConfig& d) {
  json c = {{"train", f.train_config()}, {"dataset", d}};
  if (f.model == "cnn") c["cnn"] = {{"filters", f.filters}, {"kernel", f.kernel}, {"pool", f.pool}};
  return c;
}

inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Building-footprint energy surrogates: dataset generation, training, evaluation and serving",
               "shapenergy"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.option_defaults()->always_capture_default();

  // generate
  std::size_t gen_n = 350;
  std::uint64_t gen_seed = 42;
  std::string gen_out;
  std::string gen_weather = "synthetic";
  double gen_split = 0.8;
  double gen_margin = RasterSpec::kDefaultMargin;
  auto* generate = app.add_subcommand("generate", "Generate a labelled footprint dataset");
  generate->add_option("--n", gen_n, "Number of samples")->check(CLI::Range(10, 1000000));
  generate->add_option("--seed", gen_seed, "Dataset seed");
  generate->add_option("--out", gen_out, "Output directory")->required();
  generate->add_option("--weather", gen_weather, "synthetic or epw:<path>");
  generate->add_option("--split", gen_split, "Train fraction")->check(CLI::Range(0.0, 1.0));
  generate->add_option("--margin", gen_margin, "Raster window margin in metres")->check(CLI::PositiveNumber);

  // train
  TrainFlags train_flags;
  std::string train_data;
  std::string train_out;
  auto* train = app.add_subcommand("train", "Train one model on a dataset");
  add_train_flags(train, train_flags, true);
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out", train_out, "Run directory (default run_<model><depth>)");

  // eval
  std::string eval_ckpt;
  std::string eval_data;
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset's test split");
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint directory")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--out", eval_out, "Run directory for metrics.json and predictions");

  // predict
  std::string pred_x;
  std::string pred_dnn;
  std::string pred_cnn;
  std::string pred_data;
  bool pred_simulate = false;
  auto* predict = app.add_subcommand("predict", "Predict annual energy for one shape");
  predict->add_option("--x", pred_x, "x1,x2,x3,x4 in metres, each in [-3.5, 3.5]")->required();
  predict->add_option("--dnn", pred_dnn, "DNN checkpoint directory");
  predict->add_option("--cnn", pred_cnn, "CNN checkpoint directory");
  predict->add_option("--data", pred_data, "Dataset directory (geometry, building and weather config)");
  predict->add_flag("--simulate", pred_simulate, "Also run the energy oracle");

  // gridsearch
  TrainFlags grid_flags;
  std::string grid_depths;
  std::string grid_data;
  std::string grid_out = ".";
  auto* grid = app.add_subcommand("gridsearch", "Train and time one model per depth");
  add_train_flags(grid, grid_flags, false);
  grid->add_option("--depths", grid_depths, "Comma-separated depths (default: the full table for the family)");
  grid->add_option("--data", grid_data, "Dataset directory")->required();
  grid->add_option("--out", grid_out, "Run directory");

  // cv
  TrainFlags cv_flags;
  std::size_t cv_k = 5;
  std::string cv_data;
  std::string cv_out = ".";
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation on the training split");
  add_train_flags(cv, cv_flags, true);
  cv->add_option("--k", cv_k, "Number of folds")->check(CLI::Range(2, 1000000));
  cv->add_option("--data", cv_data, "Dataset directory")->required();
  cv->add_option("--out", cv_out, "Run directory");

  // serve
  int serve_port = 8080;
  std::string serve_host = "127.0.0.1";
  std::string serve_dnn;
  std::string serve_cnn;
  std::string serve_data;
  std::string serve_static;
  auto* serve = app.add_subcommand("serve", "Serve the JSON API (and static UI assets when present)");
  serve->add_option("--port", serve_port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--dnn", serve_dnn, "DNN checkpoint directory");
  serve->add_option("--cnn", serve_cnn, "CNN checkpoint directory");
  serve->add_option("--data", serve_data, "Dataset directory");
  serve->add_option("--static", serve_static, "Directory of UI assets served at /");

  for (auto* sub : app.get_subcommands({})) {
    sub->add_option_function<std::string>("--config", [](const std::string&) {}, "JSON file of flag values or a run.json");
  }

  try {
    args = detail::expand_config(std::move(args));
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? std::string(kVersion) + "\n" : app.help());
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (generate->parsed()) {
      DatasetConfig cfg;
      cfg.n_samples = gen_n;
      cfg.seed = gen_seed;
      cfg.split_ratio = gen_split;
      cfg.raster_margin = gen_margin;
      if (gen_weather.rfind("epw:", 0) == 0) {
        cfg.weather.source = WeatherSource::epw;
        cfg.weather.epw_path = std::filesystem::absolute(gen_weather.substr(4)).string();
      } else if (gen_weather != "synthetic") {
        throw UsageError("--weather must be 'synthetic' or 'epw:<path>'");
      }
      const Dataset ds = shapenergy::generate(cfg);
      save_dataset(ds, gen_out);
      detail::write_run_manifest(gen_out, *generate, {{"dataset", cfg}}, {"manifest.json", "labels.csv"});
      out << "generated " << ds.samples.size() << " samples (" << ds.train_ids.size() << " train / "
          << ds.test_ids.size() << " test) in " << gen_out << "\n";
      return kExitOk;
    }

    if (train->parsed()) {
      const Dataset ds = load_dataset(train_data);
      const auto spec = train_flags.spec(train_flags.depth, ds.config);
      const auto cfg = train_flags.train_config();
      const auto [state, hist] = train_model(spec, ds, cfg);
      const auto [metrics, preds] = evaluate(state, ds);
      const std::filesystem::path dir =
          train_out.empty() ? "run_" + train_flags.model + std::to_string(train_flags.depth) : train_out;
      Checkpoint ck{state, ds.normalizer,
                    {{"train", cfg}, {"dataset", std::filesystem::absolute(train_data).string()}}};
      save_checkpoint(ck, dir / "checkpoint");
      write_file(dir / "history.csv", history_csv(hist));
      write_file(dir / "timing.csv", timing_csv(hist));
      write_file(dir / "metrics.json", to_json_value(metrics).dump(2) + "\n");
      const std::string pred_name = "predictions_" + train_flags.model + ".csv";
      write_file(dir / pred_name, predictions_csv(preds));
      detail::write_run_manifest(dir, *train, train_configs(train_flags, ds.config),
                                 {"checkpoint", "history.csv", "timing.csv", "metrics.json", pred_name});
      out << to_json_value(metrics).dump(2) << "\n";
      err << train_flags.model << "(" << train_flags.depth << "): " << state.params.size() << " parameters, "
          << hist.steps << " steps, checkpoint in " << (dir / "checkpoint").string() << "\n";
      return kExitOk;
    }

    if (eval->parsed()) {
      const Checkpoint ck = load_checkpoint(eval_ckpt);
      const Dataset ds = load_dataset(eval_data);
      const auto [metrics, preds] = evaluate(ck.state, ds, ck.normalizer, ds.test_ids);
      if (!eval_out.empty()) {
        const std::string pred_name = "predictions_" + ck.state.spec.family + ".csv";
        std::filesystem::create_directories(eval_out);
        write_file(std::filesystem::path(eval_out) / "metrics.json", to_json_value(metrics).dump(2) + "\n");
        write_file(std::filesystem::path(eval_out) / pred_name, predictions_csv(preds));
        detail::write_run_manifest(eval_out, *eval, {{"dataset", ds.config}}, {"metrics.json", pred_name});
      }
      out << to_json_value(metrics).dump(2) << "\n";
      return kExitOk;
    }

    if (predict->parsed()) {
      const ShapeParams p = detail::parse_x(pred_x);
      if (pred_dnn.empty() && pred_cnn.empty() && !pred_simulate) {
        throw UsageError("predict needs --dnn, --cnn or --simulate");
      }
      ServiceOptions opt;
      if (!pred_dnn.empty()) opt.dnn_checkpoint = pred_dnn;
      if (!pred_cnn.empty()) opt.cnn_checkpoint = pred_cnn;
      if (!pred_data.empty()) opt.data_dir = pred_data;
      const Service service(opt);
      json result = {{"x", p.values()}};
      if (service.dnn()) result["dnn_kwh"] = service.predict_kwh(*service.dnn(), p);
      if (service.cnn()) result["cnn_kwh"] = service.predict_kwh(*service.cnn(), p);
      if (pred_simulate) {
        json sim = service.simulate(json{{"x", p.values()}}.dump()).body;
        sim.erase("version");
        result["simulated"] = sim;
      }
      out << result.dump(2) << "\n";
      return kExitOk;
    }

    if (grid->parsed()) {
      const Dataset ds = load_dataset(grid_data);
      std::vector<std::size_t> depths;
      if (!grid_depths.empty()) depths = detail::parse_depths(grid_depths);
      else if (grid_flags.model == "dnn") depths = {2, 4, 8, 16, 32, 64, 128, 256, 512};
      else depths = {2, 4, 8, 16, 32, 64, 128, 256};
      const auto rows =
          grid_search(grid_flags.model, depths, ds, grid_flags.train_config(), grid_flags.cnn_options(ds.config));
      const std::string name = "grid_" + grid_flags.model + ".csv";
      std::filesystem::create_directories(grid_out);
      write_file(std::filesystem::path(grid_out) / name, grid_csv(rows));
      detail::write_run_manifest(grid_out, *grid, train_configs(grid_flags, ds.config), {name});
      out << grid_csv(rows);
      return kExitOk;
    }

    if (cv->parsed()) {
      const Dataset ds = load_dataset(cv_data);
      const auto rep = kfold(cv_flags.spec(cv_flags.depth, ds.config), ds, ds.train_ids, cv_k, cv_flags.train_config());
      const std::string name = "cv_" + cv_flags.model + ".csv";
      std::filesystem::create_directories(cv_out);
      write_file(std::filesystem::path(cv_out) / name, cv_csv(rep));
      detail::write_run_manifest(cv_out, *cv, train_configs(cv_flags, ds.config), {name});
      out << cv_csv(rep) << "mean_val_mse," << format_double(rep.mean_mse) << "\nstd_val_mse,"
          << format_double(rep.std_mse) << "\n";
      return kExitOk;
    }

    if (serve->parsed()) {
      ServiceOptions opt;
      if (!serve_dnn.empty()) opt.dnn_checkpoint = serve_dnn;
      if (!serve_cnn.empty()) opt.cnn_checkpoint = serve_cnn;
      if (!serve_data.empty()) opt.data_dir = serve_data;
      const Service service(opt);
      httplib::Server server;
      mount(server, service, serve_static.empty() ? std::nullopt : std::optional<std::filesystem::path>(serve_static));
      err << "listening on http://" << serve_host << ":" << serve_port << "\n";
      if (!server.listen(serve_host, serve_port)) throw Error("cannot listen on " + serve_host + ":" + std::to_string(serve_port));
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace shapenergy::cli
