#include "smoothrace/sim/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "smoothrace/error.hpp"

namespace smoothrace::sim {

CameraMode parse_camera(const std::string& name) {
  if (name == "topdown_local") return CameraMode::topdown_local;
  if (name == "pseudo_forward") return CameraMode::pseudo_forward;
  throw ParameterError("unknown camera '" + name + "'");
}

std::string to_string(CameraMode mode) {
  return mode == CameraMode::topdown_local ? "topdown_local" : "pseudo_forward";
}

void RenderParams::validate() const {
  if (width < 8 || height < 8) throw ParameterError("render size must be at least 8x8");
  const double vals[3] = {surface_intensity, offtrack_intensity, line_intensity};
  for (double v : vals)
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("render intensities must lie in [0,1]");
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (std::abs(vals[i] - vals[j]) < 0.05)
        throw ParameterError("render intensities must differ pairwise by at least 0.05");
  if (!(view_distance > 0.0)) throw ParameterError("view_distance must be positive");
}

namespace {

// Camera-frame sample location for pixel (col,row): forward and leftward
// distances from the car in meters.
struct Ray {
  double forward;
  double left;
};

Ray topdown_ray(const RenderParams& p, int col, int row) {
  const double px = p.view_distance / p.height;
  // A quarter of the window lies behind the car.
  const double forward = (p.height - row - 0.5) * px - 0.25 * p.view_distance;
  const double left = -(col + 0.5 - 0.5 * p.width) * px;
  return {forward, left};
}

Ray forward_ray(const RenderParams& p, int col, int row) {
  // Ground distances spaced geometrically from near (bottom) to far (top).
  const double near = 0.15;
  const double far = p.view_distance;
  const double t = (p.height - row - 0.5) / p.height;
  const double forward = near * std::pow(far / near, t);
  const double half_fov_tan = std::tan(0.5 * 1.2);  // ~69 degree horizontal field
  const double left = -((col + 0.5) / p.width - 0.5) * 2.0 * forward * half_fov_tan;
  return {forward, left};
}

}  // namespace

Observation render_observation(const Track& track, const CarState& state,
                               const RenderParams& params) {
  params.validate();
  Observation img(params.width, params.height);
  const double ch = std::cos(state.heading);
  const double sh = std::sin(state.heading);
  const double half = track.half_width();
  const double px = params.view_distance / params.height;
  const double line_half = 0.5 * px;

  // Only segments that can be within reach of the view window matter.
  double reach = 0.0;
  for (int corner = 0; corner < 4; ++corner) {
    const int c = (corner & 1) ? params.width - 1 : 0;
    const int r = (corner & 2) ? params.height - 1 : 0;
    const Ray ray = params.camera == CameraMode::topdown_local ? topdown_ray(params, c, r)
                                                               : forward_ray(params, c, r);
    reach = std::max(reach, std::hypot(ray.forward, ray.left));
  }
  reach += half + line_half + px;
  std::vector<std::size_t> near_segments;
  for (std::size_t i = 0; i < track.segments(); ++i) {
    const Vec2 a = track.segment_start(i);
    const Vec2 d = state.position - a;
    const double t = std::clamp(dot(d, track.tangent(i)), 0.0, track.segment_length(i));
    const Vec2 q = a + t * track.tangent(i);
    if (norm(state.position - q) <= reach) near_segments.push_back(i);
  }

  for (int row = 0; row < params.height; ++row) {
    for (int col = 0; col < params.width; ++col) {
      const Ray ray = params.camera == CameraMode::topdown_local ? topdown_ray(params, col, row)
                                                                 : forward_ray(params, col, row);
      const Vec2 w{state.position.x + ray.forward * ch - ray.left * sh,
                   state.position.y + ray.forward * sh + ray.left * ch};
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i : near_segments) {
        const Vec2 a = track.segment_start(i);
        const double t = std::clamp(dot(w - a, track.tangent(i)), 0.0, track.segment_length(i));
        const Vec2 q = a + t * track.tangent(i);
        const Vec2 r = w - q;
        best = std::min(best, dot(r, r));
      }
      const double d = std::sqrt(best);
      double value;
      if (std::abs(d - half) <= line_half)
        value = params.line_intensity;
      else if (d < half)
        value = params.surface_intensity;
      else
        value = params.offtrack_intensity;
      img.at(col, row) = static_cast<float>(value);
    }
  }
  return img;
}

}  // namespace smoothrace::sim
