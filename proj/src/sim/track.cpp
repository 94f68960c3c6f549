#include "smoothrace/sim/track.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "smoothrace/error.hpp"

namespace smoothrace::sim {

TrackPreset parse_track_preset(const std::string& name) {
  if (name == "oval") return TrackPreset::oval;
  if (name == "s_curve") return TrackPreset::s_curve;
  if (name == "paper_like_loop") return TrackPreset::paper_like_loop;
  throw ParameterError("unknown track preset '" + name + "'");
}

std::string to_string(TrackPreset preset) {
  switch (preset) {
    case TrackPreset::oval: return "oval";
    case TrackPreset::s_curve: return "s_curve";
    case TrackPreset::paper_like_loop: return "paper_like_loop";
  }
  return "?";
}

Track::Track(std::vector<Vec2> centerline, double half_width, std::string name)
    : points_(std::move(centerline)), half_width_(half_width), name_(std::move(name)) {
  if (points_.size() < 8) throw ParameterError("track needs at least 8 centerline points");
  if (!(half_width_ > 0.0) || !std::isfinite(half_width_))
    throw ParameterError("track half_width must be positive");
  const std::size_t n = points_.size();
  seg_len_.resize(n);
  cum_s_.resize(n);
  tangent_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = points_[i];
    const Vec2 b = points_[(i + 1) % n];
    if (!std::isfinite(a.x) || !std::isfinite(a.y))
      throw ParameterError("track point " + std::to_string(i) + " is not finite");
    const double len = norm(b - a);
    if (len <= 1e-6) throw ParameterError("track segment " + std::to_string(i) + " is degenerate");
    seg_len_[i] = len;
    tangent_[i] = (1.0 / len) * (b - a);
    cum_s_[i] = length_;
    length_ += len;
  }
}

Vec2 Track::point_at(double s) const {
  s = std::fmod(s, length_);
  if (s < 0) s += length_;
  auto it = std::upper_bound(cum_s_.begin(), cum_s_.end(), s);
  const std::size_t i = static_cast<std::size_t>(std::distance(cum_s_.begin(), it)) - 1;
  const double t = (s - cum_s_[i]) / seg_len_[i];
  return points_[i] + t * (segment_end(i) - points_[i]);
}

double Track::heading_at(double s) const {
  s = std::fmod(s, length_);
  if (s < 0) s += length_;
  auto it = std::upper_bound(cum_s_.begin(), cum_s_.end(), s);
  const std::size_t i = static_cast<std::size_t>(std::distance(cum_s_.begin(), it)) - 1;
  return std::atan2(tangent_[i].y, tangent_[i].x);
}

Projection Track::project(Vec2 p) const {
  Projection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Vec2 a = points_[i];
    const Vec2 d = p - a;
    double t = dot(d, tangent_[i]) / seg_len_[i];
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 q = a + (t * seg_len_[i]) * tangent_[i];
    const Vec2 r = p - q;
    const double d2 = dot(r, r);
    if (d2 < best_d2) {
      best_d2 = d2;
      best.segment = i;
      best.t = t;
      const double side = cross(tangent_[i], r);
      best.lateral_offset = side >= 0 ? std::sqrt(d2) : -std::sqrt(d2);
    }
  }
  double s = cum_s_[best.segment] + best.t * seg_len_[best.segment];
  if (s >= length_) s -= length_;
  best.progress_s = s;
  return best;
}

double Track::distance(Vec2 p) const { return std::abs(project(p).lateral_offset); }

double Track::wrap_delta(double a, double b) const {
  double d = std::fmod(b - a, length_);
  if (d > 0.5 * length_) d -= length_;
  if (d <= -0.5 * length_) d += length_;
  return d;
}

std::vector<double> Track::vertex_curvature() const {
  const std::size_t n = points_.size();
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t prev = (i + n - 1) % n;
    const double turn = std::atan2(cross(tangent_[prev], tangent_[i]), dot(tangent_[prev], tangent_[i]));
    k[i] = turn / (0.5 * (seg_len_[prev] + seg_len_[i]));
  }
  return k;
}

namespace {

// Star-shaped loop r(theta) sampled uniformly in theta, traversed
// counter-clockwise. When symmetric, the second half is the exact point
// reflection of the first.
template <typename Radius>
std::vector<Vec2> polar_loop(std::size_t n, Radius radius, double sx, double sy, bool symmetric) {
  std::vector<Vec2> pts(n);
  const std::size_t half = symmetric ? n / 2 : n;
  for (std::size_t i = 0; i < half; ++i) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    const double r = radius(th);
    pts[i] = {sx * r * std::cos(th), sy * r * std::sin(th)};
  }
  for (std::size_t i = half; i < n; ++i) pts[i] = {-pts[i - half].x, -pts[i - half].y};
  return pts;
}

}  // namespace

Track make_track(TrackPreset preset, double half_width) {
  if (!(half_width >= 0.2 && half_width <= 2.0))
    throw ParameterError("half_width must lie in [0.2, 2.0] m");
  switch (preset) {
    case TrackPreset::oval:
      return Track(polar_loop(64, [](double) { return 1.0; }, 3.0, 1.8, true), half_width, "oval");
    case TrackPreset::s_curve:
      return Track(polar_loop(128, [](double th) { return 3.0 * (1.0 + 0.35 * std::cos(2 * th)); },
                              1.0, 1.0, true),
                   half_width, "s_curve");
    case TrackPreset::paper_like_loop:
      return Track(polar_loop(160,
                              [](double th) {
                                return 3.5 * (1.0 + 0.22 * std::cos(3 * th) + 0.1 * std::sin(2 * th));
                              },
                              1.15, 0.9, false),
                   half_width, "paper_like_loop");
  }
  throw ParameterError("unknown track preset");
}

void write_track(std::ostream& os, const Track& track) {
  os.precision(17);
  os << "# halfwidth=" << track.half_width() << "\n";
  for (const Vec2& p : track.centerline()) os << p.x << " " << p.y << "\n";
}

Track read_track(std::istream& is, const std::string& name) {
  std::string line;
  double half_width = -1.0;
  std::vector<Vec2> pts;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("halfwidth=");
      if (pos != std::string::npos) half_width = std::stod(line.substr(pos + 10));
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    Vec2 p;
    if (!(row >> p.x >> p.y)) throw FileError("malformed track row: '" + line + "'");
    pts.push_back(p);
  }
  if (half_width < 0) throw FileError("track file lacks '# halfwidth=<m>' header");
  return Track(std::move(pts), half_width, name);
}

}  // namespace smoothrace::sim
