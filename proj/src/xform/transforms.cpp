#include "smoothrace/xform/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "smoothrace/error.hpp"

namespace smoothrace::xform {

namespace {

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

double sample_border(const Image& img, int x, int y) {
  x = std::clamp(x, 0, img.width - 1);
  y = std::clamp(y, 0, img.height - 1);
  return img.at(x, y);
}

double bilinear(const Image& img, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const int x0 = int(fx), y0 = int(fy);
  const double ax = x - fx, ay = y - fy;
  const double top = (1.0 - ax) * sample_border(img, x0, y0) + ax * sample_border(img, x0 + 1, y0);
  const double bottom = (1.0 - ax) * sample_border(img, x0, y0 + 1) + ax * sample_border(img, x0 + 1, y0 + 1);
  return (1.0 - ay) * top + ay * bottom;
}

// out(x,y) = in(map(x,y)) with centered coordinates.
template <typename Map>
Image resample(const Image& img, Map map) {
  Image out(img.width, img.height);
  const double cx = 0.5 * (img.width - 1), cy = 0.5 * (img.height - 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const auto [sx, sy] = map(x - cx, y - cy);
      out.at(x, y) = clamp01(bilinear(img, sx + cx, sy + cy));
    }
  return out;
}

}  // namespace

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

Image brightness(const Image& img, double delta) {
  if (delta == 0.0) return img;
  Image out = img;
  for (float& p : out.pixels) p = clamp01(double(p) + delta);
  return out;
}

Image contrast(const Image& img, double factor) {
  if (!(factor >= 0.0)) throw ParameterError("contrast factor must be non-negative");
  if (factor == 1.0) return img;
  double mean = 0.0;
  for (float p : img.pixels) mean += p;
  mean /= double(img.size());
  Image out = img;
  for (float& p : out.pixels) p = clamp01(mean + factor * (double(p) - mean));
  return out;
}

Image salt_pepper(const Image& img, double density, Rng& rng) {
  if (!(density >= 0.0 && density <= 1.0)) throw ParameterError("salt-and-pepper density must lie in [0,1]");
  if (density == 0.0) return img;
  Image out = img;
  for (float& p : out.pixels)
    if (rng.bernoulli(density)) p = rng.bernoulli(0.5) ? 1.0f : 0.0f;
  return out;
}

std::vector<double> gaussian_kernel_1d(double sigma) {
  const int radius = int(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (!(sigma >= 0.0)) throw ParameterError("blur sigma must be non-negative");
  if (sigma == 0.0) return img;
  const auto k = gaussian_kernel_1d(sigma);
  const int r = int(k.size() / 2);
  std::vector<double> tmp(img.size());
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * img.at(reflect_index(x + i, img.width), y);
      tmp[std::size_t(y) * img.width + x] = acc;
    }
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        acc += k[i + r] * tmp[std::size_t(reflect_index(y + i, img.height)) * img.width + x];
      out.at(x, y) = clamp01(acc);
    }
  return out;
}

Image rotate(const Image& img, double angle_deg) {
  if (angle_deg == 0.0) return img;
  double c, s;
  const double quarter = angle_deg / 90.0;
  if (quarter == std::round(quarter)) {
    // Exact trigonometry for multiples of 90 degrees.
    const int q = ((int(std::round(quarter)) % 4) + 4) % 4;
    const double cs[4] = {1, 0, -1, 0}, sn[4] = {0, 1, 0, -1};
    c = cs[q];
    s = sn[q];
  } else {
    const double rad = angle_deg * std::numbers::pi / 180.0;
    c = std::cos(rad);
    s = std::sin(rad);
  }
  return resample(img, [c, s](double dx, double dy) {
    return std::pair{c * dx - s * dy, s * dx + c * dy};
  });
}

Image shift(const Image& img, double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) return img;
  return resample(img, [dx, dy](double x, double y) { return std::pair{x - dx, y - dy}; });
}

Image scale(const Image& img, double factor) {
  if (!(factor > 0.0)) throw ParameterError("scale factor must be positive");
  if (factor == 1.0) return img;
  return resample(img, [factor](double x, double y) { return std::pair{x / factor, y / factor}; });
}

Image convolve_rescale(const Image& img, const std::vector<double>& kernel, int k) {
  if (k <= 0 || k % 2 == 0) throw ParameterError("convolution kernel size must be odd");
  if (kernel.size() != std::size_t(k) * k) throw ShapeError("kernel must have k*k weights");
  const int r = k / 2;
  std::vector<double> raw(img.size());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int ky = -r; ky <= r; ++ky)
        for (int kx = -r; kx <= r; ++kx)
          acc += kernel[std::size_t(ky + r) * k + (kx + r)] *
                 img.at(reflect_index(x + kx, img.width), reflect_index(y + ky, img.height));
      raw[std::size_t(y) * img.width + x] = acc;
      lo = std::min(lo, acc);
      hi = std::max(hi, acc);
    }
  if (!(hi > lo)) return img;
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < raw.size(); ++i) out.pixels[i] = clamp01((raw[i] - lo) / (hi - lo));
  return out;
}

RandomKernel sample_random_kernel(Rng& rng, const std::vector<int>& kernel_sizes) {
  if (kernel_sizes.empty()) throw ParameterError("rand_conv needs at least one kernel size");
  for (int k : kernel_sizes)
    if (k <= 0 || k % 2 == 0) throw ParameterError("rand_conv kernel sizes must be odd");
  RandomKernel out;
  out.k = kernel_sizes[rng.index(kernel_sizes.size())];
  out.weights.resize(std::size_t(out.k) * out.k);
  for (double& v : out.weights) v = rng.normal(0.0, 1.0 / out.k);
  return out;
}

Image rand_conv(const Image& img, Rng& rng, const std::vector<int>& kernel_sizes) {
  const RandomKernel kernel = sample_random_kernel(rng, kernel_sizes);
  return convolve_rescale(img, kernel.weights, kernel.k);
}

void TransformParams::validate() const {
  const Range* ranges[] = {&brightness_delta, &contrast_factor, &blur_sigma, &rotation_deg, &shift_px, &scale_factor};
  for (const Range* r : ranges)
    if (!(r->lo <= r->hi)) throw ParameterError("transform range is not ordered");
  if (!(salt_pepper_density >= 0.0 && salt_pepper_density <= 1.0))
    throw ParameterError("salt_pepper_density must lie in [0,1]");
  if (contrast_factor.lo < 0.0) throw ParameterError("contrast factor range must be non-negative");
  if (blur_sigma.lo < 0.0) throw ParameterError("blur sigma range must be non-negative");
  if (scale_factor.lo <= 0.0) throw ParameterError("scale factor range must be positive");
  for (int k : randconv_kernels)
    if (k <= 0 || k % 2 == 0) throw ParameterError("randconv kernel sizes must be odd");
}

std::string to_string(Photometric t) {
  switch (t) {
    case Photometric::brightness: return "brightness";
    case Photometric::contrast: return "contrast";
    case Photometric::salt_pepper: return "salt_pepper";
    case Photometric::blur: return "blur";
  }
  return "?";
}

std::string to_string(Geometric t) {
  switch (t) {
    case Geometric::rotation: return "rotation";
    case Geometric::shift: return "shift";
    case Geometric::scale: return "scale";
  }
  return "?";
}

Image random_photometric(const Image& img, const TransformSuite& suite, Rng& rng) {
  if (suite.photometric.empty()) throw ParameterError("no photometric transforms configured");
  const auto& p = suite.params;
  switch (suite.photometric[rng.index(suite.photometric.size())]) {
    case Photometric::brightness: return brightness(img, p.brightness_delta.sample(rng));
    case Photometric::contrast: return contrast(img, p.contrast_factor.sample(rng));
    case Photometric::salt_pepper: return salt_pepper(img, p.salt_pepper_density, rng);
    case Photometric::blur: return gaussian_blur(img, p.blur_sigma.sample(rng));
  }
  return img;
}

Image random_geometric(const Image& img, const TransformSuite& suite, Rng& rng) {
  if (suite.geometric.empty()) throw ParameterError("no geometric transforms configured");
  const auto& p = suite.params;
  switch (suite.geometric[rng.index(suite.geometric.size())]) {
    case Geometric::rotation: return rotate(img, p.rotation_deg.sample(rng));
    case Geometric::shift: {
      const double dx = p.shift_px.sample(rng);
      const double dy = p.shift_px.sample(rng);
      return shift(img, dx, dy);
    }
    case Geometric::scale: return scale(img, p.scale_factor.sample(rng));
  }
  return img;
}

}  // namespace smoothrace::xform
