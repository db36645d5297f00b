#include "humanoid/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace humanoid {

double Plane::sum() const {
  double s = 0;
  for (float x : v) s += x;
  return s;
}

GridBox scale_rect(const Rect& r, int screen_w, int screen_h, RasterDims dims) {
  auto lo = [](long long a, long long n, long long d) {
    return static_cast<int>(a * n / d);  // floor for non-negative a
  };
  auto hi = [](long long a, long long n, long long d) {
    return static_cast<int>((a * n + d - 1) / d);  // ceil
  };
  GridBox b;
  b.x0 = lo(r.left, dims.w, screen_w);
  b.x1 = hi(r.right, dims.w, screen_w);
  b.y0 = lo(r.top, dims.h, screen_h);
  b.y1 = hi(r.bottom, dims.h, screen_h);
  b.x0 = std::clamp(b.x0, 0, dims.w);
  b.x1 = std::clamp(b.x1, 0, dims.w);
  b.y0 = std::clamp(b.y0, 0, dims.h);
  b.y1 = std::clamp(b.y1, 0, dims.h);
  // Zero-area box fills its single nearest pixel.
  if (b.x0 == b.x1) {
    if (b.x0 == dims.w) b.x0 = dims.w - 1;
    b.x1 = b.x0 + 1;
  }
  if (b.y0 == b.y1) {
    if (b.y0 == dims.h) b.y0 = dims.h - 1;
    b.y1 = b.y0 + 1;
  }
  return b;
}

namespace {

void render_element(const UiElement& e, bool is_root, const UiState& st,
                    RasterDims dims, SkeletonImage& img) {
  if (e.children.empty() && !is_root) {
    GridBox b = scale_rect(e.bounds, st.screen_w, st.screen_h, dims);
    Plane& ch = e.is_text ? img.text : img.non_text;
    for (int y = b.y0; y < b.y1; ++y)
      for (int x = b.x0; x < b.x1; ++x) ch.at(x, y) = 1.f;
  }
  for (const auto& c : e.children) render_element(c, false, st, dims, img);
}

}  // namespace

SkeletonImage render_skeleton(const UiState& state, RasterDims dims) {
  if (dims.w <= 0 || dims.h <= 0) throw DataError("non-positive raster dims");
  SkeletonImage img;
  img.text = Plane(dims.w, dims.h);
  img.non_text = Plane(dims.w, dims.h);
  render_element(state.root, true, state, dims, img);
  return img;
}

ActionHeatmap render_gaussian_label(const Action& action, int screen_w,
                                    int screen_h, RasterDims dims,
                                    double variance_ref) {
  ActionHeatmap hm(dims.w, dims.h);
  const double gx = (action.x + 0.5) * dims.w / screen_w;
  const double gy = (action.y + 0.5) * dims.h / screen_h;
  const double scale2 =
      (static_cast<double>(dims.w) * dims.h) / (180.0 * 320.0);
  const double var = std::max(variance_ref * scale2, 1e-6);
  double total = 0;
  for (int y = 0; y < dims.h; ++y) {
    for (int x = 0; x < dims.w; ++x) {
      const double dx = (x + 0.5) - gx;
      const double dy = (y + 0.5) - gy;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * var));
      hm.at(x, y) = static_cast<float>(v);
      total += v;
    }
  }
  for (float& v : hm.v) v = static_cast<float>(v / total);
  return hm;
}

ContextTensor encode_context(const UiContext& ctx, RasterDims dims,
                             double variance_ref) {
  if (ctx.history.size() > 3) throw DataError("context history longer than 3");
  ContextTensor t;
  t.w = dims.w;
  t.h = dims.h;
  t.data.assign(static_cast<size_t>(4) * dims.h * dims.w * 3, 0.f);

  const int pad = 3 - static_cast<int>(ctx.history.size());
  for (size_t i = 0; i < ctx.history.size(); ++i) {
    const auto& [state, action] = ctx.history[i];
    const int frame = pad + static_cast<int>(i);
    SkeletonImage sk = render_skeleton(state, dims);
    ActionHeatmap hm = render_gaussian_label(action, state.screen_w,
                                             state.screen_h, dims, variance_ref);
    for (int y = 0; y < dims.h; ++y)
      for (int x = 0; x < dims.w; ++x) {
        t.at(frame, y, x, 0) = sk.text.at(x, y);
        t.at(frame, y, x, 1) = sk.non_text.at(x, y);
        t.at(frame, y, x, 2) = hm.at(x, y);
      }
  }
  SkeletonImage sk = render_skeleton(ctx.current, dims);
  for (int y = 0; y < dims.h; ++y)
    for (int x = 0; x < dims.w; ++x) {
      t.at(3, y, x, 0) = sk.text.at(x, y);
      t.at(3, y, x, 1) = sk.non_text.at(x, y);
      // channel 2 stays zero for the current frame
    }
  return t;
}

void write_pgm(const std::string& path, const Plane& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  float mx = 0;
  for (float v : p.v) mx = std::max(mx, v);
  if (mx <= 0) mx = 1;
  out << "P5\n" << p.w << " " << p.h << "\n255\n";
  for (float v : p.v)
    out.put(static_cast<char>(std::clamp(int(v / mx * 255.f), 0, 255)));
}

}  // namespace humanoid
