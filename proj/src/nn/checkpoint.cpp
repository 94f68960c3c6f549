#include "smoothrace/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "smoothrace/error.hpp"

namespace smoothrace::nn {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "smoothrace-checkpoint";
constexpr int kFormatVersion = 1;

json spec_to_json(const NetworkSpec& s) {
  json conv = json::array();
  for (const auto& c : s.conv) conv.push_back({{"out_channels", c.out_channels}, {"kernel", c.kernel}, {"stride", c.stride}});
  return {{"in_channels", s.in_channels}, {"in_height", s.in_height}, {"in_width", s.in_width},
          {"conv", conv}, {"dense", s.dense}, {"activation", to_string(s.activation)},
          {"head", to_string(s.head)}, {"action_dim", s.action_dim}, {"side_dim", s.side_dim}};
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec s;
  s.in_channels = j.at("in_channels");
  s.in_height = j.at("in_height");
  s.in_width = j.at("in_width");
  s.conv.clear();
  for (const auto& c : j.at("conv")) s.conv.push_back({c.at("out_channels"), c.at("kernel"), c.at("stride")});
  s.dense = j.at("dense").get<std::vector<int>>();
  s.activation = parse_activation(j.at("activation"));
  s.head = parse_head(j.at("head"));
  s.action_dim = j.at("action_dim");
  s.side_dim = j.at("side_dim");
  return s;
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  os.write(reinterpret_cast<const char*>(&bits), 4);
}

float get_f32(std::istream& is) {
  std::uint32_t bits = 0;
  is.read(reinterpret_cast<char*>(&bits), 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

}  // namespace

const NamedNetwork& Checkpoint::network(const std::string& name) const {
  for (const auto& n : networks)
    if (n.name == name) return n;
  throw FileError("checkpoint has no network '" + name + "'");
}

double Checkpoint::scalar(const std::string& name) const {
  for (const auto& [k, v] : scalars)
    if (k == name) return v;
  throw FileError("checkpoint has no scalar '" + name + "'");
}

std::vector<std::filesystem::path> save_checkpoint(const Checkpoint& ckpt,
                                                   const std::filesystem::path& path) {
  const auto manifest_path = std::filesystem::path(path.string() + ".json");
  const auto blob_path = std::filesystem::path(path.string() + ".bin");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());

  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw FileError("cannot write " + blob_path.string());
  json nets = json::array();
  std::size_t offset = 0;
  for (const auto& net : ckpt.networks) {
    json params = json::array();
    for (const auto& p : net.params.entries) {
      params.push_back({{"name", p.name}, {"shape", p.value.shape}, {"offset", offset}, {"count", p.value.size()}});
      for (Real v : p.value.values) put_f32(blob, static_cast<float>(v));
      offset += p.value.size();
    }
    nets.push_back({{"name", net.name}, {"spec", spec_to_json(net.spec)}, {"adam_step", net.params.step},
                    {"params", params}});
  }
  if (!blob) throw FileError("failed writing " + blob_path.string());

  json scalars = json::object();
  for (const auto& [k, v] : ckpt.scalars) scalars[k] = v;
  const json manifest = {{"format", kFormat},        {"version", kFormatVersion},
                         {"dtype", "float32-le"},    {"step", ckpt.step},
                         {"config_hash", ckpt.config_hash}, {"blob", blob_path.filename().string()},
                         {"scalar_count", offset},   {"networks", nets},
                         {"scalars", scalars}};
  std::ofstream out(manifest_path);
  if (!out) throw FileError("cannot write " + manifest_path.string());
  out << manifest.dump(2) << "\n";
  return {manifest_path, blob_path};
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::filesystem::path manifest_path = path;
  if (manifest_path.extension() != ".json") manifest_path = path.string() + ".json";
  std::ifstream in(manifest_path);
  if (!in) throw FileError("cannot open checkpoint manifest " + manifest_path.string());
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw FileError("malformed checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  if (m.value("format", "") != kFormat) throw FileError(manifest_path.string() + " is not a checkpoint manifest");

  const auto blob_path = manifest_path.parent_path() / m.at("blob").get<std::string>();
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw FileError("cannot open checkpoint data " + blob_path.string());

  Checkpoint ck;
  ck.step = m.at("step");
  ck.config_hash = m.at("config_hash");
  for (const auto& [k, v] : m.at("scalars").items()) ck.scalars.emplace_back(k, v.get<double>());
  for (const auto& jn : m.at("networks")) {
    NamedNetwork net;
    net.name = jn.at("name");
    net.spec = spec_from_json(jn.at("spec"));
    net.params.step = jn.value("adam_step", std::int64_t{0});
    for (const auto& jp : jn.at("params")) {
      Parameter p;
      p.name = jp.at("name");
      p.value = Tensor(jp.at("shape").get<std::vector<std::size_t>>());
      for (auto& v : p.value.values) v = static_cast<Real>(get_f32(blob));
      p.m = Tensor(p.value.shape);
      p.v = Tensor(p.value.shape);
      net.params.entries.push_back(std::move(p));
    }
    ck.networks.push_back(std::move(net));
  }
  if (!blob) throw FileError("checkpoint data " + blob_path.string() + " is truncated");
  return ck;
}

}  // namespace smoothrace::nn
