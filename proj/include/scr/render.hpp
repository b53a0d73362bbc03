#pragma once

#include <stdexcept>
#include <string>

#include "scr/tape.hpp"
#include "scr/tensor.hpp"

namespace scr {

// One scene's latent factors at desk scale:
//   view   = (sx, sy) pixel shift
//   depth  = G x G positive height field
//   light  = (lx, ly, lz, ambient); direction renormalized before shading
//   albedo = G x G in [0, 1]
struct FactorSet {
  Tensor view;
  Tensor depth;
  Tensor light;
  Tensor albedo;
};

struct FactorVars {
  Var view;
  Var depth;
  Var light;
  Var albedo;
};

inline void check_factors(const FactorSet& f, int grid) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("FactorSet: " + m); };
  if (f.view.numel() != 2) fail("view must have 2 entries");
  if (f.light.numel() != 4) fail("light must have 4 entries");
  if (f.depth.ndim() != 2 || f.depth.dim(0) != grid || f.depth.dim(1) != grid) {
    fail("depth must be " + std::to_string(grid) + "x" + std::to_string(grid));
  }
  if (f.albedo.ndim() != 2 || f.albedo.dim(0) != grid || f.albedo.dim(1) != grid) {
    fail("albedo shape mismatch");
  }
  for (std::size_t i = 0; i < f.depth.numel(); ++i) {
    if (!(f.depth[i] > 0.0)) fail("depth must be strictly positive");
  }
  for (std::size_t i = 0; i < f.albedo.numel(); ++i) {
    if (f.albedo[i] < 0.0 || f.albedo[i] > 1.0) fail("albedo must lie in [0,1]");
  }
}

inline FactorVars factor_constants(Tape& t, const FactorSet& f) {
  return {t.constant(f.view), t.constant(f.depth), t.constant(f.light), t.constant(f.albedo)};
}

// Lambertian-shaded height field with ambient term, albedo modulation and a
// bilinear viewpoint shift:
//   I = clamp( warp_V( A .* (ambient + relu(<n(D), l/|l|>)) ), 0, 1 )
// Normals come from central differences of the height field (clamped border).
// flipped=true renders with horizontally mirrored depth and albedo (the
// symmetry branch of the loss); view and light stay as given.
inline Var render_image(Tape& t, const FactorVars& f, bool flipped = false) {
  Var depth = flipped ? t.mirror_x(f.depth) : f.depth;
  Var albedo = flipped ? t.mirror_x(f.albedo) : f.albedo;

  Var dx = t.stencil_dx(depth);
  Var dy = t.stencil_dy(depth);

  Var lx = t.slice(f.light, 0, 1);
  Var ly = t.slice(f.light, 1, 1);
  Var lz = t.slice(f.light, 2, 1);
  Var ambient = t.slice(f.light, 3, 1);
  // max(norm, 1e-8) keeps a degenerate direction finite; exact for unit input
  Var norm = t.sqrt_(t.add(t.add(t.mul(lx, lx), t.mul(ly, ly)), t.mul(lz, lz)));
  norm = t.offset(t.relu(t.offset(norm, -1e-8)), 1e-8);
  lx = t.div(lx, norm);
  ly = t.div(ly, norm);
  lz = t.div(lz, norm);

  // n = (-dx, -dy, 1) / sqrt(dx^2 + dy^2 + 1); <n, l> per pixel
  Var len = t.sqrt_(t.offset(t.add(t.mul(dx, dx), t.mul(dy, dy)), 1.0));
  Var dot = t.div(
      t.add_scalar(t.add(t.mul_scalar(t.neg(dx), lx), t.mul_scalar(t.neg(dy), ly)), lz), len);
  Var shade = t.add_scalar(t.relu(dot), ambient);

  Var img = t.mul(albedo, shade);
  img = t.bilinear_translate(img, f.view);
  return t.clamp01(img);
}

inline Var flip_render_image(Tape& t, const FactorVars& f) { return render_image(t, f, true); }

// Tape-free wrappers used by data generation and tests; identical numerics to
// the training path because they run the same graph.
inline Tensor render_plain(const FactorSet& f, bool flipped = false) {
  Tape t;
  return t.val(render_image(t, factor_constants(t, f), flipped));
}

inline Tensor flip_render_plain(const FactorSet& f) { return render_plain(f, true); }

// Horizontal mirror of a plain grid (used by involution checks).
inline Tensor mirror_x_plain(const Tensor& grid) {
  Tape t;
  return t.val(t.mirror_x(t.constant(grid)));
}

}  // namespace scr
