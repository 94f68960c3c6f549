#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace smoothrace::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

enum class TrackPreset { oval, s_curve, paper_like_loop };

TrackPreset parse_track_preset(const std::string& name);
std::string to_string(TrackPreset preset);

struct Projection {
  std::size_t segment = 0;
  double lateral_offset = 0.0;  // positive to the left of travel direction
  double progress_s = 0.0;      // arc length from vertex 0, in [0, length)
  double t = 0.0;               // position along the segment in [0,1]
};

/// Closed polyline track. Vertices are traversed in order and the last one
/// connects back to the first.
class Track {
 public:
  Track(std::vector<Vec2> centerline, double half_width, std::string name);

  const std::vector<Vec2>& centerline() const { return points_; }
  double half_width() const { return half_width_; }
  double length() const { return length_; }
  const std::string& name() const { return name_; }
  std::size_t segments() const { return points_.size(); }

  Vec2 segment_start(std::size_t i) const { return points_[i]; }
  Vec2 segment_end(std::size_t i) const { return points_[(i + 1) % points_.size()]; }
  double segment_length(std::size_t i) const { return seg_len_[i]; }
  /// Arc length at vertex i.
  double vertex_s(std::size_t i) const { return cum_s_[i]; }
  /// Unit tangent of segment i.
  Vec2 tangent(std::size_t i) const { return tangent_[i]; }

  /// Point and heading on the centerline at arc length s (wrapped).
  Vec2 point_at(double s) const;
  double heading_at(double s) const;

  Projection project(Vec2 p) const;
  /// Unsigned distance from p to the polyline.
  double distance(Vec2 p) const;

  /// Arc-length difference b - a wrapped into (-length/2, length/2].
  double wrap_delta(double a, double b) const;

  /// Signed discrete curvature at each vertex (turning angle / mean adjacent length).
  std::vector<double> vertex_curvature() const;

 private:
  std::vector<Vec2> points_;
  std::vector<double> seg_len_;
  std::vector<double> cum_s_;
  std::vector<Vec2> tangent_;
  double half_width_;
  double length_ = 0.0;
  std::string name_;
};

Track make_track(TrackPreset preset, double half_width);

/// Plain-text table: header "# halfwidth=<m>" followed by one "x y" pair per line.
void write_track(std::ostream& os, const Track& track);
Track read_track(std::istream& is, const std::string& name = "imported");

}  // namespace smoothrace::sim
