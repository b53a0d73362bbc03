#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scr/rng.hpp"
#include "scr/tape.hpp"
#include "scr/tensor.hpp"

namespace scr {

enum class Act { Identity, Relu, Tanh, Sigmoid, Softplus };

inline const char* act_name(Act a) {
  switch (a) {
    case Act::Identity: return "identity";
    case Act::Relu: return "relu";
    case Act::Tanh: return "tanh";
    case Act::Sigmoid: return "sigmoid";
    case Act::Softplus: return "softplus";
  }
  return "?";
}

inline Act act_from_name(const std::string& s) {
  if (s == "identity") return Act::Identity;
  if (s == "relu") return Act::Relu;
  if (s == "tanh") return Act::Tanh;
  if (s == "sigmoid") return Act::Sigmoid;
  if (s == "softplus") return Act::Softplus;
  throw std::invalid_argument("unknown activation: " + s);
}

struct LayerSpec {
  int in = 0;
  int out = 0;
  Act act = Act::Identity;
};

struct MlpSpec {
  std::vector<LayerSpec> layers;

  void validate() const {
    if (layers.empty()) throw std::invalid_argument("MlpSpec: needs at least one layer");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].in <= 0 || layers[i].out <= 0) {
        throw std::invalid_argument("MlpSpec: non-positive width at layer " + std::to_string(i));
      }
      if (i > 0 && layers[i - 1].out != layers[i].in) {
        throw std::invalid_argument("MlpSpec: width mismatch between layers " +
                                    std::to_string(i - 1) + " and " + std::to_string(i));
      }
    }
  }

  int input_width() const { return layers.front().in; }
  int output_width() const { return layers.back().out; }
};

// widths = {in, h1, ..., out}; hidden layers get `hidden`, last layer `output`.
inline MlpSpec make_mlp(const std::vector<int>& widths, Act hidden, Act output) {
  if (widths.size() < 2) throw std::invalid_argument("make_mlp: need at least in/out widths");
  MlpSpec spec;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    spec.layers.push_back({widths[i], widths[i + 1], last ? output : hidden});
  }
  spec.validate();
  return spec;
}

// Named parameter tensors with stable iteration order plus per-parameter Adam
// state.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor m;  // first moment
    Tensor v;  // second moment
    std::int64_t step = 0;
  };

  Tensor& add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
    index_[name] = entries_.size();
    entries_.push_back(Entry{name, std::move(init), Tensor(), Tensor(), 0});
    Entry& e = entries_.back();
    e.m = Tensor::zeros_like(e.value);
    e.v = Tensor::zeros_like(e.value);
    return e.value;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Tensor& get(const std::string& name) { return entries_[checked(name)].value; }
  const Tensor& get(const std::string& name) const { return entries_[checked(name)].value; }

  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }

  std::size_t total_params() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += e.value.numel();
    return n;
  }

  void reset_optimizer_state() {
    for (Entry& e : entries_) {
      e.m = Tensor::zeros_like(e.value);
      e.v = Tensor::zeros_like(e.value);
      e.step = 0;
    }
  }

 private:
  std::size_t checked(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
    return it->second;
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

using GradList = std::vector<std::pair<std::string, Tensor>>;

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. Parameters absent from `grads`
// keep their value but their moments still decay.
inline void adam_step(ParamStore& params, const GradList& grads, const AdamConfig& cfg) {
  if (cfg.lr <= 0.0) throw std::invalid_argument("adam_step: lr must be positive");
  std::unordered_map<std::string, const Tensor*> gmap;
  for (const auto& [name, g] : grads) gmap[name] = &g;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& e = params.entry(i);
    const Tensor* g = nullptr;
    if (auto it = gmap.find(e.name); it != gmap.end()) g = it->second;
    if (g && !g->same_shape(e.value)) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + e.name);
    }
    e.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));
    for (std::size_t k = 0; k < e.value.numel(); ++k) {
      const double gk = g ? (*g)[k] : 0.0;
      e.m[k] = cfg.beta1 * e.m[k] + (1.0 - cfg.beta1) * gk;
      e.v[k] = cfg.beta2 * e.v[k] + (1.0 - cfg.beta2) * gk * gk;
      const double mhat = e.m[k] / bc1;
      const double vhat = e.v[k] / bc2;
      e.value[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

// Binds ParamStore tensors to tape leaves for one forward/backward pass.
// With trainable=false the leaves are constants (frozen networks).
class TapeBind {
 public:
  TapeBind(Tape& tape, ParamStore& store, bool trainable = true)
      : tape_(&tape), store_(&store), trainable_(trainable) {}

  Var operator[](const std::string& name) {
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    Var v = tape_->leaf(store_->get(name), trainable_);
    vars_[name] = v;
    return v;
  }

  // After backward(): one entry per store parameter, zeros for parameters the
  // loss never touched.
  GradList grads() const {
    GradList out;
    out.reserve(store_->size());
    for (std::size_t i = 0; i < store_->size(); ++i) {
      const auto& e = store_->entry(i);
      auto it = vars_.find(e.name);
      if (it != vars_.end() && tape_->has_grad(it->second)) {
        out.emplace_back(e.name, tape_->grad(it->second));
      } else {
        out.emplace_back(e.name, Tensor::zeros_like(e.value));
      }
    }
    return out;
  }

  ParamStore& store() { return *store_; }

 private:
  Tape* tape_;
  ParamStore* store_;
  bool trainable_;
  std::unordered_map<std::string, Var> vars_;
};

inline Var apply_act(Tape& t, Var x, Act a) {
  switch (a) {
    case Act::Identity: return x;
    case Act::Relu: return t.relu(x);
    case Act::Tanh: return t.tanh_(x);
    case Act::Sigmoid: return t.sigmoid(x);
    case Act::Softplus: return t.softplus(x);
  }
  throw std::logic_error("apply_act: bad enum");
}

inline std::string layer_w(const std::string& prefix, std::size_t i) {
  return prefix + ".w" + std::to_string(i);
}
inline std::string layer_b(const std::string& prefix, std::size_t i) {
  return prefix + ".b" + std::to_string(i);
}

// Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] init for weights and biases.
inline void mlp_init(ParamStore& store, const std::string& prefix, const MlpSpec& spec, Rng& rng) {
  spec.validate();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    Tensor w({l.in, l.out});
    for (std::size_t k = 0; k < w.numel(); ++k) w[k] = rng.uniform(-bound, bound);
    Tensor b({l.out});
    for (std::size_t k = 0; k < b.numel(); ++k) b[k] = rng.uniform(-bound, bound);
    store.add(layer_w(prefix, i), std::move(w));
    store.add(layer_b(prefix, i), std::move(b));
  }
}

// x is (B x in); returns (B x out).
inline Var mlp_forward(Tape& t, TapeBind& bind, const std::string& prefix, const MlpSpec& spec,
                       Var x) {
  if (t.val(x).ndim() != 2 || t.val(x).dim(1) != spec.input_width()) {
    throw std::invalid_argument("mlp_forward(" + prefix + "): layer 0 expects input width " +
                                std::to_string(spec.input_width()) + ", got " +
                                t.val(x).shape_str());
  }
  Var h = x;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    Var w = bind[layer_w(prefix, i)];
    Var b = bind[layer_b(prefix, i)];
    h = apply_act(t, t.add_rowvec(t.matmul(h, w), b), spec.layers[i].act);
  }
  return h;
}

// Plain forward without a tape, for frozen networks and golden checks.
inline Tensor mlp_eval(const ParamStore& store, const std::string& prefix, const MlpSpec& spec,
                       const Tensor& x) {
  if (x.ndim() != 2 || x.dim(1) != spec.input_width()) {
    throw std::invalid_argument("mlp_eval(" + prefix + "): layer 0 expects input width " +
                                std::to_string(spec.input_width()));
  }
  Tensor h = x;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const Tensor& w = store.get(layer_w(prefix, i));
    const Tensor& b = store.get(layer_b(prefix, i));
    const int rows = h.dim(0), in = h.dim(1), out = w.dim(1);
    Tensor nx({rows, out});
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < out; ++c) {
        double acc = b[c];
        for (int k = 0; k < in; ++k) acc += h.at(r, k) * w.at(k, c);
        nx.at(r, c) = acc;
      }
    }
    for (std::size_t k = 0; k < nx.numel(); ++k) {
      double v = nx[k];
      switch (spec.layers[i].act) {
        case Act::Identity: break;
        case Act::Relu: v = v > 0.0 ? v : 0.0; break;
        case Act::Tanh: v = std::tanh(v); break;
        case Act::Sigmoid: v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); break;
        case Act::Softplus: v = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); break;
      }
      nx[k] = v;
    }
    h = std::move(nx);
  }
  return h;
}

}  // namespace scr
