#pragma once

#include <string>

#include "smoothrace/image.hpp"
#include "smoothrace/sim/car.hpp"
#include "smoothrace/sim/track.hpp"

namespace smoothrace::sim {

enum class CameraMode { topdown_local, pseudo_forward };

CameraMode parse_camera(const std::string& name);
std::string to_string(CameraMode mode);

struct RenderParams {
  int width = 32;
  int height = 24;
  CameraMode camera = CameraMode::topdown_local;
  double surface_intensity = 0.45;
  double offtrack_intensity = 0.1;
  double line_intensity = 0.9;
  double view_distance = 4.0;  // forward extent of the view window, meters

  void validate() const;
  friend bool operator==(const RenderParams&, const RenderParams&) = default;
};

/// Rasterizes the scene around the car. Deterministic in all inputs.
Observation render_observation(const Track& track, const CarState& state,
                               const RenderParams& params);

}  // namespace smoothrace::sim
