#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "smoothrace/nn/network.hpp"

namespace smoothrace::nn {

struct NamedNetwork {
  std::string name;
  NetworkSpec spec;
  ParamSet params;
};

struct Checkpoint {
  std::int64_t step = 0;
  std::string config_hash;
  std::vector<NamedNetwork> networks;
  /// Scalars that are not network weights (e.g. the entropy temperature).
  std::vector<std::pair<std::string, double>> scalars;

  const NamedNetwork& network(const std::string& name) const;
  double scalar(const std::string& name) const;
};

/// Writes `<path>.json` (manifest: names, shapes, step, config hash) and
/// `<path>.bin` (little-endian float32 values in manifest order). `path` is
/// given without extension. Returns the two written paths.
std::vector<std::filesystem::path> save_checkpoint(const Checkpoint& ckpt,
                                                   const std::filesystem::path& path);

/// Accepts the manifest path with or without the .json extension.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace smoothrace::nn
