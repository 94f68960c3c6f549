#pragma once

#include <string>
#include <vector>

#include "smoothrace/image.hpp"
#include "smoothrace/rng.hpp"

namespace smoothrace::xform {

// Photometric transforms change intensities only; geometric transforms
// resample positions. Every transform keeps the image size and the [0,1]
// range, and identity parameters return the input bit-exactly.

Image brightness(const Image& img, double delta);
/// pixel' = mean + factor * (pixel - mean), clamped. factor == 0 collapses
/// to the mean; negative factors are rejected.
Image contrast(const Image& img, double factor);
Image salt_pepper(const Image& img, double density, Rng& rng);
/// Separable Gaussian, radius ceil(3 sigma), reflect padding.
Image gaussian_blur(const Image& img, double sigma);

/// Inverse-mapped bilinear resampling about the image center; samples that
/// fall outside take the nearest border value.
Image rotate(const Image& img, double angle_deg);
Image shift(const Image& img, double dx, double dy);
Image scale(const Image& img, double factor);

/// Convolves with a k x k kernel (row-major, reflect padding) and rescales
/// the result linearly onto [0,1]. A constant result returns the input.
Image convolve_rescale(const Image& img, const std::vector<double>& kernel, int k);

struct RandomKernel {
  int k = 1;
  std::vector<double> weights;  // k x k, row-major
};
/// k drawn uniformly from kernel_sizes, weights drawn from N(0, 1/k^2).
RandomKernel sample_random_kernel(Rng& rng, const std::vector<int>& kernel_sizes);

/// Random convolution: k drawn uniformly from kernel_sizes, weights drawn
/// fresh from N(0, 1/k^2) on every call.
Image rand_conv(const Image& img, Rng& rng, const std::vector<int>& kernel_sizes = {1, 3, 5, 7});

/// Reflect index into [0, n): -1 -> 1, n -> n-2 (edge not repeated).
int reflect_index(int i, int n);
std::vector<double> gaussian_kernel_1d(double sigma);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double sample(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
  friend bool operator==(const Range&, const Range&) = default;
};

struct TransformParams {
  Range brightness_delta{-0.2, 0.2};
  Range contrast_factor{0.7, 1.3};
  double salt_pepper_density = 0.02;
  Range blur_sigma{0.5, 1.5};
  Range rotation_deg{-5.0, 5.0};
  Range shift_px{-3.0, 3.0};
  Range scale_factor{0.9, 1.1};
  std::vector<int> randconv_kernels{1, 3, 5, 7};

  void validate() const;
  friend bool operator==(const TransformParams&, const TransformParams&) = default;
};

enum class Photometric { brightness, contrast, salt_pepper, blur };
enum class Geometric { rotation, shift, scale };

std::string to_string(Photometric t);
std::string to_string(Geometric t);

/// The transforms a similar-state generator may choose from.
struct TransformSuite {
  TransformParams params;
  std::vector<Photometric> photometric{Photometric::brightness, Photometric::contrast,
                                       Photometric::salt_pepper, Photometric::blur};
  std::vector<Geometric> geometric{Geometric::rotation, Geometric::shift, Geometric::scale};

  bool empty() const { return photometric.empty() && geometric.empty(); }
  friend bool operator==(const TransformSuite&, const TransformSuite&) = default;
};

/// One uniformly chosen photometric transform with randomly drawn parameters.
Image random_photometric(const Image& img, const TransformSuite& suite, Rng& rng);
/// One uniformly chosen geometric transform with randomly drawn parameters.
Image random_geometric(const Image& img, const TransformSuite& suite, Rng& rng);

}  // namespace smoothrace::xform
