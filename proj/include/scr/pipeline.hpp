#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scr/dag.hpp"
#include "scr/nn.hpp"
#include "scr/render.hpp"
#include "scr/rng.hpp"

namespace scr {

struct PipelineConfig {
  int grid = 16;       // G
  int embed_dim = 16;  // d, common embedding dimension
  int enc_hidden = 32;
  int dec_hidden = 32;
  int conf_hidden = 32;
  int feat_hidden = 32;
  int feat_channels = 2;
  double shift_scale = 2.0;   // max viewpoint shift in pixels
  double depth_offset = 0.5;  // depth = softplus(raw) + offset
  double conf_floor = 1e-4;   // sigma = softplus(raw) + floor
  double lambda_f = 0.5;
  double lambda_p = 1.0;
  bool use_perceptual = true;

  int pixels() const { return grid * grid; }

  void validate() const {
    if (grid < 3) throw std::invalid_argument("PipelineConfig: grid must be >= 3");
    if (embed_dim < 1) throw std::invalid_argument("PipelineConfig: embed_dim must be >= 1");
    if (conf_floor <= 0.0) throw std::invalid_argument("PipelineConfig: conf_floor must be > 0");
  }
};

// Frozen random feature map standing in for a pretrained perceptual network.
// Parameters are drawn once from the seed and never trained.
class FeatureExtractor {
 public:
  FeatureExtractor(const PipelineConfig& cfg, std::uint64_t seed)
      : pixels_(cfg.pixels()),
        channels_(cfg.feat_channels),
        spec_(make_mlp({cfg.pixels(), cfg.feat_hidden, cfg.feat_channels * cfg.pixels()},
                       Act::Relu, Act::Tanh)) {
    Rng rng = derive_rng(seed, "feature-extractor");
    mlp_init(params_, "phi", spec_, rng);
  }

  // image_rows: (B x G^2); returns (B x F*G^2), channel-major per row.
  Var features(Tape& t, Var image_rows) {
    TapeBind bind(t, params_, /*trainable=*/false);
    return mlp_forward(t, bind, "phi", spec_, image_rows);
  }

  Tensor features_plain(const Tensor& image_rows) const {
    return mlp_eval(params_, "phi", spec_, image_rows);
  }

  int channels() const { return channels_; }
  int pixels() const { return pixels_; }

 private:
  int pixels_;
  int channels_;
  MlpSpec spec_;
  ParamStore params_;
};

// One adjacency entry fed to a decoder: either a plain weight or a tape Var
// (trainable or input-dependent).
struct AdjEntry {
  double value = 0.0;
  Var var{};
  bool is_var = false;
};

struct AdjVars {
  int n = 4;
  std::array<AdjEntry, 16> e{};

  AdjEntry& at(int j, int k) { return e[static_cast<std::size_t>(j) * n + k]; }
  const AdjEntry& at(int j, int k) const { return e[static_cast<std::size_t>(j) * n + k]; }

  // Current numeric weights (reads Var values from the tape).
  AdjacencyMatrix snapshot(const Tape& t) const {
    AdjacencyMatrix m(n);
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const AdjEntry& a = at(j, k);
        m.at(j, k) = a.is_var ? t.val(a.var)[0] : a.value;
      }
    }
    m.zero_diagonal();
    return m;
  }
};

// Produces the adjacency used for one sample; u holds the four embedding rows
// (each 1 x d) so input-dependent structures can attend over them.
using AdjacencyFn = std::function<AdjVars(Tape&, const std::array<Var, 4>&)>;

inline AdjacencyFn static_adjacency(const AdjacencyMatrix& m) {
  if (m.n != 4) throw std::invalid_argument("static_adjacency: expected 4 factors");
  return [m](Tape&, const std::array<Var, 4>&) {
    AdjVars a;
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 4; ++k) {
        a.at(j, k).value = j == k ? 0.0 : m.at(j, k);
      }
    }
    return a;
  };
}

// ---- loss pieces (Laplace photometric term, Gaussian feature term) ----

inline constexpr double kSqrt2 = 1.4142135623730950488016887242097;
inline constexpr double kLnSqrt2 = 0.34657359027997265470861606072909;

// mean over pixels of ln(sqrt(2) sigma) + sqrt(2)|a - b| / sigma
inline Var laplace_nll(Tape& t, Var img_hat, Var img, Var sigma) {
  Var resid = t.scale(t.abs_(t.sub(img_hat, img)), kSqrt2);
  return t.mean(t.add(t.log_(t.scale(sigma, kSqrt2)), t.div(resid, sigma)));
}

// mean over F*G^2 of (dphi)^2 / (2 sigma^2) plus mean over pixels of
// ln(sqrt(2) sigma^2); feats are (F x G^2), sigma_flat is [G^2] shared across
// channels.
inline Var feature_nll(Tape& t, Var feat_hat, Var feat, Var sigma_flat) {
  const int pixels = t.val(sigma_flat).dim(0);
  Var diff = t.sub(feat_hat, feat);
  Var inv = t.div(t.constant(Tensor({pixels}, 1.0)), t.scale(t.mul(sigma_flat, sigma_flat), 2.0));
  Var quad = t.mean(t.mul_rowvec(t.mul(diff, diff), inv));
  Var ln_term = t.mean(t.offset(t.scale(t.log_(sigma_flat), 2.0), kLnSqrt2));
  return t.add(quad, ln_term);
}

namespace detail {
inline void check_confidence(const Tensor& s, const char* what) {
  for (std::size_t i = 0; i < s.numel(); ++i) {
    if (!(s[i] > 0.0)) {
      throw std::invalid_argument(std::string("total_loss: non-positive ") + what);
    }
  }
}
}  // namespace detail

// L = L_rec(I_hat, I; sigma) + lf * L_rec(I_flip, I; sigma')
//   + lp * [ L_p(I_hat, I; sigma) + lf * L_p(I_flip, I; sigma') ]
// feat_img may be a precomputed constant for the target features.
inline Var total_loss_terms(Tape& t, Var img, Var img_hat, Var img_flip, Var sigma,
                            Var sigma_flip, FeatureExtractor* phi, Var feat_img,
                            const PipelineConfig& cfg) {
  detail::check_confidence(t.val(sigma), "sigma");
  detail::check_confidence(t.val(sigma_flip), "sigma'");
  Var loss = laplace_nll(t, img_hat, img, sigma);
  loss = t.add(loss, t.scale(laplace_nll(t, img_flip, img, sigma_flip), cfg.lambda_f));
  if (cfg.use_perceptual && phi != nullptr && cfg.lambda_p != 0.0) {
    const int pixels = cfg.pixels();
    const int ch = phi->channels();
    Var hat_row = t.reshape(img_hat, {1, pixels});
    Var flip_row = t.reshape(img_flip, {1, pixels});
    Var f_hat = t.reshape(phi->features(t, hat_row), {ch, pixels});
    Var f_flip = t.reshape(phi->features(t, flip_row), {ch, pixels});
    Var f_img = t.reshape(feat_img, {ch, pixels});
    Var s_flat = t.reshape(sigma, {pixels});
    Var sf_flat = t.reshape(sigma_flip, {pixels});
    Var lp = feature_nll(t, f_hat, f_img, s_flat);
    Var lpf = feature_nll(t, f_flip, f_img, sf_flat);
    loss = t.add(loss, t.scale(t.add(lp, t.scale(lpf, cfg.lambda_f)), cfg.lambda_p));
  }
  return loss;
}

inline Var total_loss(Tape& t, Var img, Var img_hat, Var img_flip, Var sigma, Var sigma_flip,
                      FeatureExtractor* phi, const PipelineConfig& cfg) {
  Var feat_img{};
  if (cfg.use_perceptual && phi != nullptr && cfg.lambda_p != 0.0) {
    feat_img = phi->features(t, t.reshape(img, {1, cfg.pixels()}));
  }
  return total_loss_terms(t, img, img_hat, img_flip, sigma, sigma_flip, phi, feat_img, cfg);
}

// All trainable networks of the reconstruction pipeline: per-factor encoders
// f1 into the common embedding space, per-factor decoders f2 back to factor
// dimensions, and the confidence network. The frozen feature extractor rides
// along but is excluded from the trainable parameter count.
class ScrModel {
 public:
  ScrModel(const PipelineConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), feat_(cfg, derive_seed(seed, "phi")) {
    cfg_.validate();
    Rng rng = derive_rng(seed, "init");
    for (int k = 0; k < 4; ++k) mlp_init(params_, enc_prefix(k), encoder_spec(), rng);
    for (int k = 0; k < 4; ++k) mlp_init(params_, dec_prefix(k), decoder_spec(k), rng);
    mlp_init(params_, "conf", conf_spec(), rng);
  }

  const PipelineConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  FeatureExtractor& feature_extractor() { return feat_; }
  std::size_t trainable_param_count() const { return params_.total_params(); }

  static std::string enc_prefix(int k) {
    return std::string("enc.") + kFactorLabels[static_cast<std::size_t>(k)];
  }
  static std::string dec_prefix(int k) {
    return std::string("dec.") + kFactorLabels[static_cast<std::size_t>(k)];
  }

  MlpSpec encoder_spec() const {
    return make_mlp({cfg_.pixels(), cfg_.enc_hidden, cfg_.embed_dim}, Act::Relu, Act::Identity);
  }

  MlpSpec decoder_spec(int k) const {
    switch (k) {
      case kFactorV: return make_mlp({cfg_.embed_dim, cfg_.dec_hidden, 2}, Act::Relu, Act::Tanh);
      case kFactorD:
        return make_mlp({cfg_.embed_dim, cfg_.dec_hidden, cfg_.pixels()}, Act::Relu,
                        Act::Softplus);
      case kFactorL: return make_mlp({cfg_.embed_dim, cfg_.dec_hidden, 4}, Act::Relu, Act::Identity);
      case kFactorA:
        return make_mlp({cfg_.embed_dim, cfg_.dec_hidden, cfg_.pixels()}, Act::Relu, Act::Sigmoid);
    }
    throw std::invalid_argument("decoder_spec: bad factor");
  }

  MlpSpec conf_spec() const {
    return make_mlp({cfg_.pixels(), cfg_.conf_hidden, 2 * cfg_.pixels()}, Act::Relu,
                    Act::Softplus);
  }

  // images: (B x G^2). Returns the four embedding row blocks, each (B x d).
  std::array<Var, 4> encode_rows(Tape& t, TapeBind& bind, Var images) const {
    std::array<Var, 4> u;
    for (int k = 0; k < 4; ++k) {
      u[static_cast<std::size_t>(k)] = mlp_forward(t, bind, enc_prefix(k), encoder_spec(), images);
    }
    return u;
  }

  // sigma, sigma' stacked: (B x 2*G^2), already floored to be positive.
  Var confidence_rows(Tape& t, TapeBind& bind, Var images) const {
    return t.offset(mlp_forward(t, bind, "conf", conf_spec(), images), cfg_.conf_floor);
  }

  // Decoder input for factor k: u_k plus the adjacency-weighted sum of the
  // other embeddings. Zero-weight edges are skipped outright so an all-zero
  // adjacency runs the exact independent code path.
  static Var conditioned_input(Tape& t, const std::array<Var, 4>& u, const AdjVars& adj, int k) {
    Var x = u[static_cast<std::size_t>(k)];
    for (int j = 0; j < 4; ++j) {
      if (j == k) continue;
      const AdjEntry& e = adj.at(j, k);
      if (e.is_var) {
        x = t.add(x, t.mul_scalar(u[static_cast<std::size_t>(j)], e.var));
      } else if (e.value != 0.0) {
        x = t.add(x, t.scale(u[static_cast<std::size_t>(j)], e.value));
      }
    }
    return x;
  }

  // Decodes one sample. u holds the four embedding rows (1 x d).
  FactorVars decode_sample(Tape& t, TapeBind& bind, const std::array<Var, 4>& u,
                           const AdjVars& adj) const {
    std::array<Var, 4> in;
    for (int k = 0; k < 4; ++k) {
      in[static_cast<std::size_t>(k)] = conditioned_input(t, u, adj, k);
    }
    FactorVars f;
    Var v_raw = mlp_forward(t, bind, dec_prefix(kFactorV), decoder_spec(kFactorV),
                            in[kFactorV]);
    f.view = t.reshape(t.scale(v_raw, cfg_.shift_scale), {2});
    Var d_raw = mlp_forward(t, bind, dec_prefix(kFactorD), decoder_spec(kFactorD),
                            in[kFactorD]);
    f.depth = t.reshape(t.offset(d_raw, cfg_.depth_offset), {cfg_.grid, cfg_.grid});
    Var l_raw = mlp_forward(t, bind, dec_prefix(kFactorL), decoder_spec(kFactorL),
                            in[kFactorL]);
    // direction components pass through; ambient squashed to (0,1)
    Tensor dir_mask({1, 4}, {1.0, 1.0, 1.0, 0.0});
    Tensor amb_mask({1, 4}, {0.0, 0.0, 0.0, 1.0});
    Var light = t.add(t.mul(l_raw, t.constant(dir_mask)),
                      t.mul(t.sigmoid(l_raw), t.constant(amb_mask)));
    f.light = t.reshape(light, {4});
    Var a_raw = mlp_forward(t, bind, dec_prefix(kFactorA), decoder_spec(kFactorA),
                            in[kFactorA]);
    f.albedo = t.reshape(a_raw, {cfg_.grid, cfg_.grid});
    return f;
  }

  struct SampleTerm {
    Var loss;
    Var img_hat;
    FactorVars factors;
    AdjVars adj;
  };

  struct BatchLoss {
    Var total;
    std::vector<SampleTerm> samples;
  };

  // Builds the training loss for a batch of images. feat_cache may hold
  // precomputed target features phi(I) (one (1 x F*G^2) tensor per image);
  // pass nullptrs to compute them on the fly.
  BatchLoss build_batch_loss(Tape& t, TapeBind& bind, const std::vector<const Tensor*>& images,
                             const std::vector<const Tensor*>& feat_cache,
                             const AdjacencyFn& adj_fn) {
    if (images.empty()) throw std::invalid_argument("build_batch_loss: empty batch");
    const int B = static_cast<int>(images.size());
    const int P = cfg_.pixels();
    Tensor stacked({B, P});
    for (int b = 0; b < B; ++b) {
      const Tensor& img = *images[static_cast<std::size_t>(b)];
      if (static_cast<int>(img.numel()) != P) {
        throw std::invalid_argument("build_batch_loss: image size mismatch");
      }
      for (int i = 0; i < P; ++i) stacked.at(b, i) = img[static_cast<std::size_t>(i)];
    }
    Var images_v = t.constant(std::move(stacked));
    std::array<Var, 4> u_all = encode_rows(t, bind, images_v);
    Var conf_all = confidence_rows(t, bind, images_v);

    const bool perceptual = cfg_.use_perceptual && cfg_.lambda_p != 0.0;
    BatchLoss out;
    Var total{};
    for (int b = 0; b < B; ++b) {
      std::array<Var, 4> u;
      for (int k = 0; k < 4; ++k) {
        u[static_cast<std::size_t>(k)] = t.reshape(t.row(u_all[static_cast<std::size_t>(k)], b),
                                                   {1, cfg_.embed_dim});
      }
      AdjVars adj = adj_fn(t, u);
      FactorVars f = decode_sample(t, bind, u, adj);
      Var img_hat = render_image(t, f, false);
      Var img_flip = render_image(t, f, true);
      Var conf_row = t.row(conf_all, b);
      Var sigma = t.reshape(t.slice(conf_row, 0, P), {cfg_.grid, cfg_.grid});
      Var sigma_flip = t.reshape(t.slice(conf_row, P, P), {cfg_.grid, cfg_.grid});
      Var img_c = t.constant(Tensor({cfg_.grid, cfg_.grid},
                                    images[static_cast<std::size_t>(b)]->data()));
      Var feat_img{};
      if (perceptual) {
        if (b < static_cast<int>(feat_cache.size()) && feat_cache[static_cast<std::size_t>(b)]) {
          feat_img = t.constant(*feat_cache[static_cast<std::size_t>(b)]);
        } else {
          feat_img = feat_.features(t, t.reshape(img_c, {1, P}));
        }
      }
      Var loss = total_loss_terms(t, img_c, img_hat, img_flip, sigma, sigma_flip,
                                  perceptual ? &feat_ : nullptr, feat_img, cfg_);
      out.samples.push_back({loss, img_hat, f, adj});
      total = (b == 0) ? loss : t.add(total, loss);
    }
    out.total = t.scale(total, 1.0 / static_cast<double>(B));
    return out;
  }

 private:
  PipelineConfig cfg_;
  ParamStore params_;
  FeatureExtractor feat_;
};

// "CommonEmbedding": rows are u_V, u_D, u_L, u_A.
inline Tensor encode(ScrModel& model, const Tensor& image) {
  const PipelineConfig& cfg = model.config();
  if (static_cast<int>(image.numel()) != cfg.pixels()) {
    throw std::invalid_argument("encode: image must have G*G pixels, got " + image.shape_str());
  }
  Tape t;
  TapeBind bind(t, model.params(), /*trainable=*/false);
  Var img = t.constant(Tensor({1, cfg.pixels()}, image.data()));
  std::array<Var, 4> u = model.encode_rows(t, bind, img);
  Tensor out({4, cfg.embed_dim});
  for (int k = 0; k < 4; ++k) {
    const Tensor& row = t.val(u[static_cast<std::size_t>(k)]);
    for (int c = 0; c < cfg.embed_dim; ++c) out.at(k, c) = row[static_cast<std::size_t>(c)];
  }
  return out;
}

inline FactorSet decode_factors(ScrModel& model, const Tensor& embedding,
                                const AdjacencyMatrix& m) {
  const PipelineConfig& cfg = model.config();
  if (embedding.ndim() != 2 || embedding.dim(0) != 4 || embedding.dim(1) != cfg.embed_dim) {
    throw std::invalid_argument("decode_factors: embedding must be 4 x d");
  }
  if (!m.zero_diagonal_ok()) throw std::invalid_argument("decode_factors: diagonal must be zero");
  Tape t;
  TapeBind bind(t, model.params(), /*trainable=*/false);
  std::array<Var, 4> u;
  for (int k = 0; k < 4; ++k) {
    Tensor row({1, cfg.embed_dim});
    for (int c = 0; c < cfg.embed_dim; ++c) row.at(0, c) = embedding.at(k, c);
    u[static_cast<std::size_t>(k)] = t.constant(std::move(row));
  }
  AdjVars adj = static_adjacency(m)(t, u);
  FactorVars f = model.decode_sample(t, bind, u, adj);
  return {t.val(f.view), t.val(f.depth), t.val(f.light), t.val(f.albedo)};
}

// Full single-image forward: encode, build the adjacency, decode.
inline FactorSet predict_factors(ScrModel& model, const Tensor& image, const AdjacencyFn& adj_fn) {
  const PipelineConfig& cfg = model.config();
  Tape t;
  TapeBind bind(t, model.params(), /*trainable=*/false);
  Var img = t.constant(Tensor({1, cfg.pixels()}, image.data()));
  std::array<Var, 4> u_all = model.encode_rows(t, bind, img);
  std::array<Var, 4> u;
  for (int k = 0; k < 4; ++k) {
    u[static_cast<std::size_t>(k)] =
        t.reshape(u_all[static_cast<std::size_t>(k)], {1, cfg.embed_dim});
  }
  AdjVars adj = adj_fn(t, u);
  FactorVars f = model.decode_sample(t, bind, u, adj);
  return {t.val(f.view), t.val(f.depth), t.val(f.light), t.val(f.albedo)};
}

}  // namespace scr
