#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shapenergy/dataset.hpp"
#include "shapenergy/errors.hpp"
#include "shapenergy/nn.hpp"
#include "shapenergy/rng.hpp"

namespace shapenergy {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  bool shuffle = true;

  void validate() const {
    if (epochs < 1) throw RangeError("epochs must be >= 1");
    if (batch_size < 1) throw RangeError("batch size must be >= 1");
    if (!(lr > 0) || !std::isfinite(lr)) throw RangeError("learning rate must be > 0");
  }
};

struct Metrics {
  double mse = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  double mse_kwh2 = 0.0;
  double rmse_kwh = 0.0;
  std::size_t n_test = 0;
};

struct Prediction {
  std::size_t id = 0;
  double simulated_kwh = 0.0;
  double predicted_kwh = 0.0;
};

struct History {
  std::vector<double> train_loss;  // mean mini-batch loss per epoch
  std::vector<double> val_loss;    // per epoch, empty unless a validation set was given
  std::vector<double> seconds_per_step;
  std::size_t steps = 0;
};

struct CVReport {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> folds;
  std::vector<double> fold_mse;
  double mean_mse = 0.0;
  double std_mse = 0.0;
};

struct GridSearchRow {
  std::size_t depth = 0;
  std::size_t params = 0;
  double mse = 0.0;
  double seconds_per_step = 0.0;
};

// Model inputs for a list of sample ids: normalized offsets for the dnn,
// a (n, 1, H, W) image tensor for the cnn.
inline nn::Tensor make_inputs(const nn::ModelSpec& spec, const Dataset& ds, std::span<const std::size_t> ids) {
  std::vector<std::size_t> dims{ids.size()};
  dims.insert(dims.end(), spec.input_shape.begin(), spec.input_shape.end());
  nn::Tensor t(dims);
  const std::size_t per = t.values.size() / std::max<std::size_t>(ids.size(), 1);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& s = ds.samples.at(ids[i]);
    double* dst = t.values.data() + i * per;
    if (spec.family == "dnn") {
      if (per != 4) throw ShapeError("dnn input must have 4 features");
      const auto x = Normalizer::apply_params(s.params);
      std::copy(x.begin(), x.end(), dst);
    } else {
      const auto px = s.image.pixels();
      if (px.size() != per) throw ShapeError("cnn input shape does not match dataset image size");
      for (std::size_t k = 0; k < per; ++k) dst[k] = px[k];
    }
  }
  return t;
}

inline std::vector<double> make_targets(const Dataset& ds, const Normalizer& norm, std::span<const std::size_t> ids) {
  std::vector<double> y;
  y.reserve(ids.size());
  for (auto id : ids) y.push_back(norm.apply(ds.samples.at(id).label.total_kwh));
  return y;
}

namespace detail {

// Forward in chunks so large evaluation sets do not blow up activation memory.
inline std::vector<double> predict_normalized(nn::Network& net, std::span<const double> params, const Dataset& ds,
                                              std::span<const std::size_t> ids) {
  constexpr std::size_t kChunk = 128;
  std::vector<double> out;
  out.reserve(ids.size());
  for (std::size_t at = 0; at < ids.size(); at += kChunk) {
    const auto chunk = ids.subspan(at, std::min(kChunk, ids.size() - at));
    const auto& pred = net.forward(params, make_inputs(net.spec(), ds, chunk));
    out.insert(out.end(), pred.values.begin(), pred.values.end());
  }
  return out;
}

}  // namespace detail

inline std::vector<double> predict_normalized(const nn::ModelState& state, const Dataset& ds,
                                              std::span<const std::size_t> ids) {
  nn::Network net(state.spec);
  return detail::predict_normalized(net, state.params, ds, ids);
}

// Trains on train_ids; when val_ids is non-empty also records validation loss
// after every epoch.
inline std::pair<nn::ModelState, History> train_model(const nn::ModelSpec& spec, const Dataset& ds,
                                                      const Normalizer& norm, std::span<const std::size_t> train_ids,
                                                      const TrainConfig& cfg,
                                                      std::span<const std::size_t> val_ids = {}) {
  cfg.validate();
  if (train_ids.empty()) throw PreconditionError("training split is empty");
  nn::ModelState state = nn::init(spec, derive_seed(cfg.seed, 10));
  nn::Network net(spec);
  nn::AdamState adam(state.params.size());
  std::vector<double> grad(state.params.size());
  Xoshiro256 shuffler(derive_seed(cfg.seed, 11));

  // Pre-build per-sample inputs once; batches gather from these.
  const nn::Tensor all_x = make_inputs(spec, ds, train_ids);
  const std::vector<double> all_y = make_targets(ds, norm, train_ids);
  const std::size_t per = all_x.sample_size();
  std::vector<std::size_t> order(train_ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  History hist;
  nn::Tensor batch;
  std::vector<double> targets;
  const std::size_t steps_per_epoch = (order.size() + cfg.batch_size - 1) / cfg.batch_size;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) shuffle(std::span<std::size_t>(order), shuffler);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      const std::size_t begin = step * cfg.batch_size;
      const std::size_t n = std::min(cfg.batch_size, order.size() - begin);
      std::vector<std::size_t> dims = all_x.shape;
      dims[0] = n;
      if (batch.shape != dims) batch = nn::Tensor(dims);
      targets.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = order[begin + i];
        std::copy_n(all_x.values.begin() + static_cast<std::ptrdiff_t>(src * per), per,
                    batch.values.begin() + static_cast<std::ptrdiff_t>(i * per));
        targets[i] = all_y[src];
      }
      double loss = 0.0;
      try {
        loss = net.loss_and_gradient(state.params, batch, targets, grad);
        if (!std::isfinite(loss)) throw NumericError("non-finite loss");
        nn::adam_step(state.params, adam, grad, cfg.lr);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch + 1) + ", step " + std::to_string(step + 1) + ": " +
                           e.what());
      }
      loss_sum += loss * static_cast<double>(n);
      seen += n;
      ++hist.steps;
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    hist.train_loss.push_back(loss_sum / static_cast<double>(seen));
    hist.seconds_per_step.push_back(dt.count() / static_cast<double>(steps_per_epoch));
    if (!val_ids.empty()) {
      const auto pred = detail::predict_normalized(net, state.params, ds, val_ids);
      hist.val_loss.push_back(nn::loss_mse(pred, make_targets(ds, norm, val_ids)));
    }
  }
  return {std::move(state), std::move(hist)};
}

inline std::pair<nn::ModelState, History> train_model(const nn::ModelSpec& spec, const Dataset& ds,
                                                      const TrainConfig& cfg) {
  if (ds.train_ids.empty()) throw PreconditionError("dataset has no training split");
  return train_model(spec, ds, ds.normalizer, ds.train_ids, cfg);
}

// r2 = 1 - SSE / SST, SST taken about the mean of the evaluated targets.
inline Metrics compute_metrics(std::span<const double> pred, std::span<const double> target, const Normalizer& norm) {
  if (pred.empty()) throw PreconditionError("empty test set");
  Metrics m;
  m.n_test = pred.size();
  m.mse = nn::loss_mse(pred, target);
  m.rmse = std::sqrt(m.mse);
  double mean = 0.0;
  for (double y : target) mean += y;
  mean /= static_cast<double>(target.size());
  double sst = 0.0;
  for (double y : target) sst += (y - mean) * (y - mean);
  const double sse = m.mse * static_cast<double>(pred.size());
  m.r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
  m.mse_kwh2 = m.mse * norm.stddev * norm.stddev;
  m.rmse_kwh = m.rmse * norm.stddev;
  return m;
}

inline std::pair<Metrics, std::vector<Prediction>> evaluate(const nn::ModelState& state, const Dataset& ds,
                                                           const Normalizer& norm,
                                                           std::span<const std::size_t> test_ids) {
  if (test_ids.empty()) throw PreconditionError("empty test set");
  const auto pred = predict_normalized(state, ds, test_ids);
  const auto target = make_targets(ds, norm, test_ids);
  std::vector<Prediction> rows;
  rows.reserve(test_ids.size());
  for (std::size_t i = 0; i < test_ids.size(); ++i) {
    rows.push_back({test_ids[i], ds.samples[test_ids[i]].label.total_kwh, norm.invert(pred[i])});
  }
  return {compute_metrics(pred, target, norm), std::move(rows)};
}

inline std::pair<Metrics, std::vector<Prediction>> evaluate(const nn::ModelState& state, const Dataset& ds) {
  return evaluate(state, ds, ds.normalizer, ds.test_ids);
}

// Shuffle ids with a seeded permutation, then cut into k contiguous folds;
// the first n % k folds get one extra id.
inline std::vector<std::vector<std::size_t>> make_folds(std::span<const std::size_t> ids, std::size_t k,
                                                        std::uint64_t seed) {
  if (k < 2 || k > ids.size()) throw RangeError("k must satisfy 2 <= k <= number of training ids");
  Xoshiro256 rng(seed);
  const auto perm = permutation(ids.size(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = ids.size() / k + (f < ids.size() % k ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) folds[f].push_back(ids[perm[at++]]);
    std::sort(folds[f].begin(), folds[f].end());
  }
  return folds;
}

// Each fold trains a fresh model on the remaining folds, normalized with
// statistics of those folds only, and reports validation MSE.
inline CVReport kfold(const nn::ModelSpec& spec, const Dataset& ds, std::span<const std::size_t> train_ids,
                      std::size_t k, const TrainConfig& cfg) {
  CVReport rep;
  rep.k = k;
  rep.folds = make_folds(train_ids, k, derive_seed(cfg.seed, 20));
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> fit;
    for (std::size_t g = 0; g < k; ++g)
      if (g != f) fit.insert(fit.end(), rep.folds[g].begin(), rep.folds[g].end());
    std::sort(fit.begin(), fit.end());
    const Normalizer norm = fit_normalizer(ds.totals(fit));
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, 100 + f);
    const auto [state, hist] = train_model(spec, ds, norm, fit, fold_cfg);
    rep.fold_mse.push_back(evaluate(state, ds, norm, rep.folds[f]).first.mse);
  }
  for (double v : rep.fold_mse) rep.mean_mse += v;
  rep.mean_mse /= static_cast<double>(k);
  for (double v : rep.fold_mse) rep.std_mse += (v - rep.mean_mse) * (v - rep.mean_mse);
  rep.std_mse = std::sqrt(rep.std_mse / static_cast<double>(k));
  return rep;
}

// Median wall time of full forward + backward + Adam steps on fixed batches
// drawn from the training split.
inline double measure_step_time(const nn::ModelSpec& spec, const Dataset& ds, const TrainConfig& cfg,
                                std::size_t n_warmup = 10, std::size_t n_timed = 100) {
  if (ds.train_ids.empty()) throw PreconditionError("dataset has no training split");
  if (n_timed == 0) throw RangeError("n_timed must be >= 1");
  nn::ModelState state = nn::init(spec, derive_seed(cfg.seed, 10));
  nn::Network net(spec);
  nn::AdamState adam(state.params.size());
  std::vector<double> grad(state.params.size());
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < cfg.batch_size; ++i) ids.push_back(ds.train_ids[i % ds.train_ids.size()]);
  const nn::Tensor batch = make_inputs(spec, ds, ids);
  const auto targets = make_targets(ds, ds.normalizer, ids);
  auto step = [&] {
    net.loss_and_gradient(state.params, batch, targets, grad);
    nn::adam_step(state.params, adam, grad, cfg.lr);
  };
  for (std::size_t i = 0; i < n_warmup; ++i) step();
  std::vector<double> times;
  times.reserve(n_timed);
  for (std::size_t i = 0; i < n_timed; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    step();
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
  return times[times.size() / 2];
}

inline std::vector<GridSearchRow> grid_search(const std::string& family, std::span<const std::size_t> depths,
                                              const Dataset& ds, const TrainConfig& cfg,
                                              const nn::CnnOptions& cnn = {}) {
  if (depths.empty()) throw PreconditionError("grid search needs at least one depth");
  std::vector<GridSearchRow> rows;
  for (auto depth : depths) {
    const nn::ModelSpec spec = family == "dnn" ? nn::build_dnn(depth) : nn::build_cnn(depth, cnn);
    const auto [state, hist] = train_model(spec, ds, cfg);
    const auto metrics = evaluate(state, ds).first;
    rows.push_back({depth, nn::param_count(spec), metrics.mse, measure_step_time(spec, ds, cfg)});
  }
  return rows;
}

inline std::string grid_csv(std::span<const GridSearchRow> rows) {
  std::string out = "depth,params,mse,time_per_step_s\n";
  for (const auto& r : rows) {
    out += std::to_string(r.depth) + "," + std::to_string(r.params) + "," + format_double(r.mse) + "," +
           format_double(r.seconds_per_step) + "\n";
  }
  return out;
}

inline std::string cv_csv(const CVReport& rep) {
  std::string out = "fold,size,val_mse\n";
  for (std::size_t f = 0; f < rep.k; ++f) {
    out += std::to_string(f) + "," + std::to_string(rep.folds[f].size()) + "," + format_double(rep.fold_mse[f]) + "\n";
  }
  return out;
}

inline std::string history_csv(const History& h) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < h.train_loss.size(); ++e) {
    out += std::to_string(e + 1) + "," + format_double(h.train_loss[e]) + "," +
           (e < h.val_loss.size() ? format_double(h.val_loss[e]) : std::string()) + "\n";
  }
  return out;
}

// Wall-clock data kept apart from history.csv so that file stays reproducible.
inline std::string timing_csv(const History& h) {
  std::string out = "epoch,seconds_per_step\n";
  for (std::size_t e = 0; e < h.seconds_per_step.size(); ++e) {
    out += std::to_string(e + 1) + "," + format_double(h.seconds_per_step[e]) + "\n";
  }
  return out;
}

// Sorted by simulated value, ties by id.
inline std::string predictions_csv(std::vector<Prediction> rows) {
  std::sort(rows.begin(), rows.end(), [](const Prediction& a, const Prediction& b) {
    return a.simulated_kwh != b.simulated_kwh ? a.simulated_kwh < b.simulated_kwh : a.id < b.id;
  });
  std::string out = "id,simulated_kwh,predicted_kwh\n";
  for (const auto& r : rows) {
    out += std::to_string(r.id) + "," + format_double(r.simulated_kwh) + "," + format_double(r.predicted_kwh) + "\n";
  }
  return out;
}

inline void export_predictions(const nn::ModelState& state, const Dataset& ds, const std::filesystem::path& path) {
  write_file(path, predictions_csv(evaluate(state, ds).second));
}

inline json to_json_value(const Metrics& m) {
  return {{"mse", m.mse}, {"rmse", m.rmse}, {"r2", m.r2}, {"mse_kwh2", m.mse_kwh2}, {"rmse_kwh", m.rmse_kwh},
          {"n_test", m.n_test}};
}

inline void to_json(json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"lr", c.lr}, {"seed", c.seed}, {"shuffle", c.shuffle}};
}
inline void from_json(const json& j, TrainConfig& c) {
  j.at("epochs").get_to(c.epochs);
  j.at("batch_size").get_to(c.batch_size);
  j.at("lr").get_to(c.lr);
  j.at("seed").get_to(c.seed);
  j.at("shuffle").get_to(c.shuffle);
}

}  // namespace shapenergy
