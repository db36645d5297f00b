#pragma once

#include <vector>

#include "humanoid/ui.hpp"

namespace humanoid {

struct Plane {
  int w = 0, h = 0;
  std::vector<float> v;

  Plane() = default;
  Plane(int w_, int h_) : w(w_), h(h_), v(static_cast<size_t>(w_) * h_, 0.f) {}
  float& at(int x, int y) { return v[static_cast<size_t>(y) * w + x]; }
  float at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
  double sum() const;
};

// Two-channel UI skeleton: channel 0 text elements, channel 1 non-text.
struct SkeletonImage {
  Plane text;
  Plane non_text;
};

using ActionHeatmap = Plane;

struct RasterDims {
  int w = 45, h = 80;
};

// Screen-space rect scaled to grid pixels [x0,x1) x [y0,y1); zero-area
// boxes snap to their single nearest pixel.
struct GridBox {
  int x0, y0, x1, y1;
};
GridBox scale_rect(const Rect& r, int screen_w, int screen_h, RasterDims dims);

// Rasterizes leaf elements (never the root container) into the two
// channels; overlaps saturate at 1.
SkeletonImage render_skeleton(const UiState& state, RasterDims dims);

// Isotropic Gaussian label centered at the scaled target; variance is
// `variance_ref` px^2 at the 180x320 reference resolution and scales with
// the squared linear grid scale. Normalized to sum 1.
ActionHeatmap render_gaussian_label(const Action& action, int screen_w,
                                    int screen_h, RasterDims dims,
                                    double variance_ref = 20.0);

struct UiContext {
  UiState current;
  std::vector<std::pair<UiState, Action>> history;  // oldest first, <= 3
};

// 4 frames x H x W x 3, frame-major, channel-minor. History frames carry
// (text, non-text, action heatmap); the current frame's third channel is
// zero, and short histories are left-padded with zero frames.
struct ContextTensor {
  int w = 0, h = 0;
  std::vector<float> data;  // size 4*h*w*3

  float& at(int frame, int y, int x, int c) {
    return data[((static_cast<size_t>(frame) * h + y) * w + x) * 3 + c];
  }
  float at(int frame, int y, int x, int c) const {
    return data[((static_cast<size_t>(frame) * h + y) * w + x) * 3 + c];
  }
};

ContextTensor encode_context(const UiContext& ctx, RasterDims dims,
                             double variance_ref = 20.0);

// PGM debug dump (binary P5, values scaled to 0..255).
void write_pgm(const std::string& path, const Plane& p);

}  // namespace humanoid
