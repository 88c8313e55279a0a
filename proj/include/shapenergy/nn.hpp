#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "shapenergy/errors.hpp"
#include "shapenergy/rng.hpp"

namespace shapenergy::nn {

// Dense row-major array of doubles. The leading dimension is the batch.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims) : shape(std::move(dims)) {
    values.assign(element_count(shape), 0.0);
  }
  Tensor(std::vector<std::size_t> dims, std::vector<double> data)
      : shape(std::move(dims)), values(std::move(data)) {
    if (values.size() != element_count(shape)) throw ShapeError("tensor value count does not match shape");
  }

  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

  std::size_t batch() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t sample_size() const { return batch() == 0 ? 0 : values.size() / batch(); }
};

inline std::string shape_string(const std::vector<std::size_t>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
  return out + ")";
}

enum class LayerKind { dense, conv2d, maxpool, flatten, relu };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::relu: return "relu";
  }
  return "?";
}

// dense: in/out are feature counts. conv2d: in/out are channel counts, square
// odd kernel, stride 1, "same" zero padding. maxpool: non-overlapping
// pool x pool windows, remainder rows/columns dropped.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 0;
  std::size_t pool = 0;

  static LayerSpec dense(std::size_t in, std::size_t out) { return {LayerKind::dense, in, out, 0, 0}; }
  static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t k) {
    return {LayerKind::conv2d, in_ch, out_ch, k, 0};
  }
  static LayerSpec maxpool(std::size_t p) { return {LayerKind::maxpool, 0, 0, 0, p}; }
  static LayerSpec flatten() { return {LayerKind::flatten, 0, 0, 0, 0}; }
  static LayerSpec relu() { return {LayerKind::relu, 0, 0, 0, 0}; }

  std::size_t weight_count() const {
    if (kind == LayerKind::dense) return in * out;
    if (kind == LayerKind::conv2d) return kernel * kernel * in * out;
    return 0;
  }
  std::size_t bias_count() const {
    return (kind == LayerKind::dense || kind == LayerKind::conv2d) ? out : 0;
  }
  std::size_t param_count() const { return weight_count() + bias_count(); }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelSpec {
  std::string family;                     // "dnn" or "cnn"
  std::vector<std::size_t> input_shape;   // per sample: {4} or {C, H, W}
  std::vector<LayerSpec> layers;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Per-sample activation shape after every layer; index 0 is the input.
// Throws SpecError when consecutive layers do not compose or the output is
// not a single scalar.
inline std::vector<std::vector<std::size_t>> activation_shapes(const ModelSpec& spec) {
  std::vector<std::vector<std::size_t>> shapes{spec.input_shape};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const auto& s = shapes.back();
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
    switch (l.kind) {
      case LayerKind::dense:
        if (s.size() != 1 || s[0] != l.in)
          throw SpecError(where + ": expects " + std::to_string(l.in) + " features, got " + shape_string(s));
        if (l.out == 0) throw SpecError(where + ": zero outputs");
        shapes.push_back({l.out});
        break;
      case LayerKind::conv2d:
        if (s.size() != 3 || s[0] != l.in)
          throw SpecError(where + ": expects " + std::to_string(l.in) + " channels, got " + shape_string(s));
        if (l.kernel == 0 || l.kernel % 2 == 0) throw SpecError(where + ": kernel must be odd");
        if (l.out == 0) throw SpecError(where + ": zero filters");
        shapes.push_back({l.out, s[1], s[2]});
        break;
      case LayerKind::maxpool:
        if (s.size() != 3) throw SpecError(where + ": expects (C, H, W), got " + shape_string(s));
        if (l.pool == 0 || s[1] / l.pool == 0 || s[2] / l.pool == 0)
          throw SpecError(where + ": pool " + std::to_string(l.pool) + " does not fit " + shape_string(s));
        shapes.push_back({s[0], s[1] / l.pool, s[2] / l.pool});
        break;
      case LayerKind::flatten:
        shapes.push_back({Tensor::element_count(s)});
        break;
      case LayerKind::relu:
        shapes.push_back(s);
        break;
    }
  }
  if (shapes.back() != std::vector<std::size_t>{1}) {
    throw SpecError("model output must be a single scalar per sample, got " + shape_string(shapes.back()));
  }
  return shapes;
}

inline std::size_t param_count(const ModelSpec& spec) {
  activation_shapes(spec);
  std::size_t n = 0;
  for (const auto& l : spec.layers) n += l.param_count();
  return n;
}

// Hidden width 2: affine(4->2), (N-3) x affine(2->2), affine(2->1), ReLU
// between affine layers. N = 2 is affine(4->1), affine(1->1). 6N-5 parameters.
inline ModelSpec build_dnn(std::size_t n_layers) {
  if (n_layers < 2) throw SpecError("dnn needs at least 2 dense layers");
  ModelSpec spec{"dnn", {4}, {}};
  if (n_layers == 2) {
    spec.layers = {LayerSpec::dense(4, 1), LayerSpec::relu(), LayerSpec::dense(1, 1)};
    return spec;
  }
  spec.layers.push_back(LayerSpec::dense(4, 2));
  for (std::size_t i = 0; i + 3 < n_layers; ++i) {
    spec.layers.push_back(LayerSpec::relu());
    spec.layers.push_back(LayerSpec::dense(2, 2));
  }
  spec.layers.push_back(LayerSpec::relu());
  spec.layers.push_back(LayerSpec::dense(2, 1));
  return spec;
}

struct CnnOptions {
  std::size_t filters = 2;
  std::size_t kernel = 3;
  std::size_t pool = 2;
  std::size_t height = 30;
  std::size_t width = 48;
};

// conv(1->F) then (n_conv-1) x conv(F->F), ReLU after each, one max pool,
// flatten, dense(->1).
inline ModelSpec build_cnn(std::size_t n_conv, const CnnOptions& opt = {}) {
  if (n_conv < 1) throw SpecError("cnn needs at least 1 conv layer");
  if (opt.filters < 1) throw SpecError("cnn needs at least 1 filter");
  if (opt.pool == 0) throw SpecError("pool size must be >= 1");
  ModelSpec spec{"cnn", {1, opt.height, opt.width}, {}};
  for (std::size_t i = 0; i < n_conv; ++i) {
    spec.layers.push_back(LayerSpec::conv2d(i == 0 ? 1 : opt.filters, opt.filters, opt.kernel));
    spec.layers.push_back(LayerSpec::relu());
  }
  spec.layers.push_back(LayerSpec::maxpool(opt.pool));
  spec.layers.push_back(LayerSpec::flatten());
  spec.layers.push_back(LayerSpec::dense((opt.height / opt.pool) * (opt.width / opt.pool) * opt.filters, 1));
  activation_shapes(spec);
  return spec;
}

struct ModelState {
  ModelSpec spec;
  std::vector<double> params;
  std::vector<std::size_t> offsets;  // start of each layer's block; weights then biases
  std::uint64_t seed = 0;
};

inline std::vector<std::size_t> param_offsets(const ModelSpec& spec) {
  std::vector<std::size_t> offsets;
  std::size_t at = 0;
  for (const auto& l : spec.layers) {
    offsets.push_back(at);
    at += l.param_count();
  }
  return offsets;
}

// Glorot-uniform weights, zero biases, drawn in layer order.
inline ModelState init(const ModelSpec& spec, std::uint64_t seed) {
  ModelState state{spec, std::vector<double>(param_count(spec), 0.0), param_offsets(spec), seed};
  Xoshiro256 rng(seed);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.weight_count() == 0) continue;
    const double receptive = static_cast<double>(l.kind == LayerKind::conv2d ? l.kernel * l.kernel : 1);
    const double fan_in = receptive * static_cast<double>(l.in);
    const double fan_out = receptive * static_cast<double>(l.out);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t k = 0; k < l.weight_count(); ++k) state.params[state.offsets[i] + k] = rng.uniform(-bound, bound);
  }
  return state;
}

namespace detail {

inline void require_finite(std::span<const double> v, std::size_t layer, LayerKind kind) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError("non-finite activation after layer " + std::to_string(layer) + " (" +
                         to_string(kind) + ")");
    }
  }
}

inline void dense_forward(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                          std::span<double> y, std::size_t n, std::size_t in, std::size_t out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.data() + i * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w.data() + o * in;
      double acc = b[o];
      for (std::size_t k = 0; k < in; ++k) acc += wo[k] * xi[k];
      y[i * out + o] = acc;
    }
  }
}

inline void dense_backward(std::span<const double> w, std::span<const double> x, std::span<const double> gy,
                           std::span<double> gw, std::span<double> gb, std::span<double> gx, std::size_t n,
                           std::size_t in, std::size_t out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.data() + i * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = gy[i * out + o];
      gb[o] += g;
      double* gwo = gw.data() + o * in;
      for (std::size_t k = 0; k < in; ++k) gwo[k] += g * xi[k];
    }
  }
  if (gx.empty()) return;
  for (std::size_t i = 0; i < n; ++i) {
    double* gxi = gx.data() + i * in;
    std::fill(gxi, gxi + in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double g = gy[i * out + o];
      const double* wo = w.data() + o * in;
      for (std::size_t k = 0; k < in; ++k) gxi[k] += wo[k] * g;
    }
  }
}

struct ConvGeom {
  std::size_t in_ch, out_ch, k, h, w;
};

// Valid output range for a tap displaced by d along an axis of length len.
inline std::pair<std::size_t, std::size_t> tap_range(std::ptrdiff_t d, std::size_t len) {
  const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -d));
  const auto hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(len),
                                                                     static_cast<std::ptrdiff_t>(len) - d));
  return {lo, std::max(lo, hi)};
}

inline void conv_forward(std::span<const double> wt, std::span<const double> b, std::span<const double> x,
                         std::span<double> y, std::size_t n, const ConvGeom& g) {
  const std::size_t plane = g.h * g.w;
  const auto pad = static_cast<std::ptrdiff_t>(g.k / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < g.out_ch; ++o) {
      double* yo = y.data() + (i * g.out_ch + o) * plane;
      std::fill(yo, yo + plane, b[o]);
      for (std::size_t c = 0; c < g.in_ch; ++c) {
        const double* xc = x.data() + (i * g.in_ch + c) * plane;
        const double* wk = wt.data() + (o * g.in_ch + c) * g.k * g.k;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
          const auto [y0, y1] = tap_range(dy, g.h);
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
            const auto [x0, x1] = tap_range(dx, g.w);
            const double wv = wk[ky * g.k + kx];
            for (std::size_t r = y0; r < y1; ++r) {
              double* out_row = yo + r * g.w;
              const double* in_row = xc + static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r) + dy) * g.w + dx;
              for (std::size_t col = x0; col < x1; ++col) out_row[col] += wv * in_row[col];
            }
          }
        }
      }
    }
  }
}

inline void conv_backward(std::span<const double> wt, std::span<const double> x, std::span<const double> gy,
                          std::span<double> gw, std::span<double> gb, std::span<double> gx, std::size_t n,
                          const ConvGeom& g) {
  const std::size_t plane = g.h * g.w;
  const auto pad = static_cast<std::ptrdiff_t>(g.k / 2);
  if (!gx.empty()) std::fill(gx.begin(), gx.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < g.out_ch; ++o) {
      const double* go = gy.data() + (i * g.out_ch + o) * plane;
      double bias_acc = 0.0;
      for (std::size_t p = 0; p < plane; ++p) bias_acc += go[p];
      gb[o] += bias_acc;
      for (std::size_t c = 0; c < g.in_ch; ++c) {
        const double* xc = x.data() + (i * g.in_ch + c) * plane;
        double* gxc = gx.empty() ? nullptr : gx.data() + (i * g.in_ch + c) * plane;
        const double* wk = wt.data() + (o * g.in_ch + c) * g.k * g.k;
        double* gwk = gw.data() + (o * g.in_ch + c) * g.k * g.k;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
          const auto [y0, y1] = tap_range(dy, g.h);
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
            const auto [x0, x1] = tap_range(dx, g.w);
            const double wv = wk[ky * g.k + kx];
            double acc = 0.0;
            for (std::size_t r = y0; r < y1; ++r) {
              const double* g_row = go + r * g.w;
              const std::size_t in_off = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r) + dy) * g.w;
              const double* in_row = xc + in_off + dx;
              for (std::size_t col = x0; col < x1; ++col) acc += g_row[col] * in_row[col];
              if (gxc) {
                double* gin_row = gxc + in_off + dx;
                for (std::size_t col = x0; col < x1; ++col) gin_row[col] += wv * g_row[col];
              }
            }
            gwk[ky * g.k + kx] += acc;
          }
        }
      }
    }
  }
}

}  // namespace detail

// Holds the activations of one batch so backward can reuse them. One
// instance per training loop; not shared across threads.
class Network {
 public:
  explicit Network(const ModelSpec& spec) : spec_(spec), shapes_(activation_shapes(spec)), offsets_(param_offsets(spec)) {}

  const ModelSpec& spec() const noexcept { return spec_; }
  std::size_t param_count() const { return offsets_.empty() ? 0 : offsets_.back() + spec_.layers.back().param_count(); }

  // Returns the (n, 1) predictions.
  const Tensor& forward(std::span<const double> params, const Tensor& batch) {
    check_params(params);
    check_input(batch);
    const std::size_t n = batch.batch();
    acts_.resize(spec_.layers.size() + 1);
    argmax_.resize(spec_.layers.size());
    acts_[0] = batch;
    for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
      const auto& l = spec_.layers[li];
      const auto& in_shape = shapes_[li];
      const auto& out_shape = shapes_[li + 1];
      std::vector<std::size_t> dims{n};
      dims.insert(dims.end(), out_shape.begin(), out_shape.end());
      Tensor& out = acts_[li + 1];
      if (out.shape != dims) out = Tensor(dims);
      const auto& x = acts_[li].values;
      auto& y = out.values;
      const auto w = params.subspan(offsets_[li], l.weight_count());
      const auto b = params.subspan(offsets_[li] + l.weight_count(), l.bias_count());
      switch (l.kind) {
        case LayerKind::dense:
          detail::dense_forward(w, b, x, y, n, l.in, l.out);
          break;
        case LayerKind::conv2d:
          detail::conv_forward(w, b, x, y, n, {l.in, l.out, l.kernel, in_shape[1], in_shape[2]});
          break;
        case LayerKind::relu:
          for (std::size_t k = 0; k < y.size(); ++k) y[k] = x[k] > 0.0 ? x[k] : 0.0;
          break;
        case LayerKind::flatten:
          std::copy(x.begin(), x.end(), y.begin());
          break;
        case LayerKind::maxpool:
          pool_forward(li, in_shape, out_shape, n, l.pool);
          break;
      }
      detail::require_finite(y, li, l.kind);
    }
    return acts_.back();
  }

  // Mean squared error of forward(batch) against targets; gradient written
  // into grad (same length as params). Returns the loss.
  double loss_and_gradient(std::span<const double> params, const Tensor& batch, std::span<const double> targets,
                           std::span<double> grad) {
    if (grad.size() != params.size()) throw ShapeError("gradient buffer length does not match parameters");
    const Tensor& pred = forward(params, batch);
    const std::size_t n = batch.batch();
    if (targets.size() != n) throw ShapeError("target count does not match batch size");
    std::fill(grad.begin(), grad.end(), 0.0);

    Tensor delta({n, 1});
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = pred.values[i] - targets[i];
      loss += d * d;
      delta.values[i] = 2.0 * d / static_cast<double>(n);
    }
    loss /= static_cast<double>(n);

    Tensor delta_in;
    for (std::size_t li = spec_.layers.size(); li-- > 0;) {
      const auto& l = spec_.layers[li];
      const auto& in_shape = shapes_[li];
      const auto& x = acts_[li].values;
      const bool need_input_grad = li > 0;
      if (need_input_grad) {
        if (delta_in.shape != acts_[li].shape) delta_in = Tensor(acts_[li].shape);
      } else {
        delta_in = Tensor();
      }
      auto& gx = delta_in.values;
      const auto w = params.subspan(offsets_[li], l.weight_count());
      const auto gw = grad.subspan(offsets_[li], l.weight_count());
      const auto gb = grad.subspan(offsets_[li] + l.weight_count(), l.bias_count());
      switch (l.kind) {
        case LayerKind::dense:
          detail::dense_backward(w, x, delta.values, gw, gb, gx, n, l.in, l.out);
          break;
        case LayerKind::conv2d:
          detail::conv_backward(w, x, delta.values, gw, gb, gx, n, {l.in, l.out, l.kernel, in_shape[1], in_shape[2]});
          break;
        case LayerKind::relu:
          // Subgradient at exactly 0 is 0.
          for (std::size_t k = 0; k < gx.size(); ++k) gx[k] = x[k] > 0.0 ? delta.values[k] : 0.0;
          break;
        case LayerKind::flatten:
          if (!gx.empty()) std::copy(delta.values.begin(), delta.values.end(), gx.begin());
          break;
        case LayerKind::maxpool:
          if (!gx.empty()) {
            std::fill(gx.begin(), gx.end(), 0.0);
            const auto& idx = argmax_[li];
            for (std::size_t k = 0; k < idx.size(); ++k) gx[idx[k]] += delta.values[k];
          }
          break;
      }
      std::swap(delta, delta_in);
    }
    return loss;
  }

 private:
  void check_params(std::span<const double> params) const {
    if (params.size() != param_count()) {
      throw ShapeError("parameter vector has " + std::to_string(params.size()) + " values, model needs " +
                       std::to_string(param_count()));
    }
  }

  void check_input(const Tensor& batch) const {
    if (batch.shape.size() != spec_.input_shape.size() + 1 ||
        !std::equal(spec_.input_shape.begin(), spec_.input_shape.end(), batch.shape.begin() + 1)) {
      throw ShapeError("layer 0 (" + std::string(spec_.layers.empty() ? "input" : to_string(spec_.layers[0].kind)) +
                       "): batch shape " + shape_string(batch.shape) + " does not match input " +
                       shape_string(spec_.input_shape));
    }
    if (batch.batch() == 0) throw ShapeError("empty batch");
    detail::require_finite(batch.values, 0, spec_.layers.empty() ? LayerKind::relu : spec_.layers[0].kind);
  }

  // First maximum in row-major window order wins ties.
  void pool_forward(std::size_t li, const std::vector<std::size_t>& in_shape,
                    const std::vector<std::size_t>& out_shape, std::size_t n, std::size_t p) {
    const auto& x = acts_[li].values;
    auto& y = acts_[li + 1].values;
    auto& idx = argmax_[li];
    idx.resize(y.size());
    const std::size_t C = in_shape[0], H = in_shape[1], W = in_shape[2];
    const std::size_t OH = out_shape[1], OW = out_shape[2];
    std::size_t o = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t base = (i * C + c) * H * W;
        for (std::size_t r = 0; r < OH; ++r) {
          for (std::size_t col = 0; col < OW; ++col, ++o) {
            std::size_t best = base + (r * p) * W + col * p;
            for (std::size_t dr = 0; dr < p; ++dr)
              for (std::size_t dc = 0; dc < p; ++dc) {
                const std::size_t k = base + (r * p + dr) * W + col * p + dc;
                if (x[k] > x[best]) best = k;
              }
            y[o] = x[best];
            idx[o] = best;
          }
        }
      }
    }
  }

  ModelSpec spec_;
  std::vector<std::vector<std::size_t>> shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<Tensor> acts_;
  std::vector<std::vector<std::size_t>> argmax_;
};

inline Tensor forward(const ModelState& state, const Tensor& batch) {
  Network net(state.spec);
  return net.forward(state.params, batch);
}

inline double loss_mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw ShapeError("loss_mse: prediction/target length mismatch");
  if (pred.empty()) throw ShapeError("loss_mse: empty batch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

inline std::vector<double> backward(const ModelState& state, const Tensor& batch, std::span<const double> targets) {
  Network net(state.spec);
  std::vector<double> grad(state.params.size());
  net.loss_and_gradient(state.params, batch, targets, grad);
  return grad;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(std::span<double> params, AdamState& adam, std::span<const double> grad, double lr) {
  if (grad.size() != params.size() || adam.m.size() != params.size() || adam.v.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment lengths differ");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) throw NumericError("adam_step: non-finite gradient at index " + std::to_string(i));
  }
  adam.t += 1;
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.t));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    adam.m[i] = adam.beta1 * adam.m[i] + (1.0 - adam.beta1) * g;
    adam.v[i] = adam.beta2 * adam.v[i] + (1.0 - adam.beta2) * g * g;
    const double m_hat = adam.m[i] / c1;
    const double v_hat = adam.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + adam.epsilon);
  }
}

}  // namespace shapenergy::nn
