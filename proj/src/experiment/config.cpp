#include "smoothrace/experiment/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smoothrace/error.hpp"

namespace smoothrace::experiment {

using nlohmann::json;

namespace {

// Reads one JSON object, requiring every key it is asked for and rejecting
// any key nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& at(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) throw ConfigError(key_path(key), "missing key");
    return *it;
  }

  template <class T>
  T get(const std::string& key) {
    const json& v = at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(key_path(key), "expected a boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(key_path(key), "expected a string");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
      } else {
        if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(key_path(key), e.what());
    }
  }

  Section sub(const std::string& key) { return Section(at(key), key_path(key)); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto parse_enum(const std::string& key, const std::string& value, F parse) {
  try {
    return parse(value);
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

xform::Photometric parse_photometric(const std::string& s) {
  for (auto t : {xform::Photometric::brightness, xform::Photometric::contrast, xform::Photometric::salt_pepper,
                 xform::Photometric::blur})
    if (xform::to_string(t) == s) return t;
  throw ParameterError("unknown photometric transform '" + s + "'");
}

xform::Geometric parse_geometric(const std::string& s) {
  for (auto t : {xform::Geometric::rotation, xform::Geometric::shift, xform::Geometric::scale})
    if (xform::to_string(t) == s) return t;
  throw ParameterError("unknown geometric transform '" + s + "'");
}

json range_json(const xform::Range& r) { return json::array({r.lo, r.hi}); }

xform::Range read_range(Section& s, const std::string& key) {
  const json& v = s.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(s.key_path(key), "expected [lo, hi]");
  return {v[0].get<double>(), v[1].get<double>()};
}

json noise_json(const sim::ActuationNoise& n) { return {{"steer_std", n.steer_std}, {"speed_std", n.speed_std}}; }

sim::ActuationNoise read_noise(Section s) {
  sim::ActuationNoise n{s.get<double>("steer_std"), s.get<double>("speed_std")};
  s.finish();
  return n;
}

template <class T, class F>
std::vector<T> read_list(Section& s, const std::string& key, F item) {
  const json& v = s.at(key);
  if (!v.is_array()) throw ConfigError(s.key_path(key), "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(item(v[i], s.key_path(key) + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(schema_version));
  if (total_steps < 0) throw ConfigError("total_steps", "must be non-negative");
  if (eval_every < 0) throw ConfigError("eval_every", "must be non-negative");
  if (log_every <= 0) throw ConfigError("log_every", "must be positive");
  if (n_eval_runs < 0) throw ConfigError("n_eval_runs", "must be non-negative");
  if (eval_every > 0 && n_eval_runs < 1) throw ConfigError("n_eval_runs", "periodic evaluation needs at least one run");
  if (!(half_width >= 0.2 && half_width <= 2.0)) throw ConfigError("track.half_width", "must lie in [0.2, 2.0]");
  if (!(dt > 0.0)) throw ConfigError("env.dt", "must be positive");
  if (max_steps <= 0) throw ConfigError("env.max_steps", "must be positive");
  if (!(train_noise.steer_std >= 0.0 && train_noise.speed_std >= 0.0))
    throw ConfigError("env.train_actuation_noise", "standard deviations must be non-negative");
  if (!(eval_noise.steer_std >= 0.0 && eval_noise.speed_std >= 0.0))
    throw ConfigError("env.eval_actuation_noise", "standard deviations must be non-negative");
  if (!(shift.noise_sigma >= 0.0)) throw ConfigError("shift.noise_sigma", "must be non-negative");
  if (!(randconv_prob >= 0.0 && randconv_prob <= 1.0)) throw ConfigError("randconv.prob", "must lie in [0,1]");
  try {
    render.validate();
  } catch (const Error& e) {
    throw ConfigError("render", e.what());
  }
  try {
    actor_spec(*this).validate();
    nn::Network probe(actor_spec(*this));
  } catch (const Error& e) {
    throw ConfigError("network", e.what());
  }
  sac.validate();
  try {
    reg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("transforms", e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["seed"] = c.seed;
  j["total_steps"] = c.total_steps;
  j["eval_every"] = c.eval_every;
  j["log_every"] = c.log_every;
  j["n_eval_runs"] = c.n_eval_runs;
  j["output_dir"] = c.output_dir;
  j["track"] = {{"preset", sim::to_string(c.track)}, {"half_width", c.half_width}};
  j["env"] = {{"dt", c.dt},
              {"max_steps", c.max_steps},
              {"train_actuation_noise", noise_json(c.train_noise)},
              {"eval_actuation_noise", noise_json(c.eval_noise)}};
  j["render"] = {{"width", c.render.width},
                 {"height", c.render.height},
                 {"camera", sim::to_string(c.render.camera)},
                 {"surface_intensity", c.render.surface_intensity},
                 {"offtrack_intensity", c.render.offtrack_intensity},
                 {"line_intensity", c.render.line_intensity},
                 {"view_distance", c.render.view_distance}};
  j["shift"] = {{"brightness", c.shift.brightness}, {"noise_sigma", c.shift.noise_sigma}, {"invert", c.shift.invert}};
  json conv = json::array();
  for (const auto& l : c.network.conv)
    conv.push_back({{"out_channels", l.out_channels}, {"kernel", l.kernel}, {"stride", l.stride}});
  j["network"] = {{"conv", conv}, {"dense", c.network.dense}, {"activation", nn::to_string(c.network.activation)}};
  const auto& s = c.sac;
  j["sac"] = {{"gamma", s.gamma},
              {"alpha_init", s.alpha_init},
              {"lr", s.lr},
              {"batch_size", s.batch_size},
              {"global_buffer", s.global_buffer},
              {"local_buffer", s.local_buffer},
              {"workers", s.workers},
              {"tau", s.tau},
              {"target_entropy", s.target_entropy},
              {"updates_per_step", s.updates_per_step},
              {"warmup_steps", s.warmup_steps}};
  const auto& r = c.reg;
  json photo = json::array(), geo = json::array();
  for (auto t : r.suite.photometric) photo.push_back(xform::to_string(t));
  for (auto t : r.suite.geometric) geo.push_back(xform::to_string(t));
  j["reg"] = {{"mode", reg::to_string(r.mode)},
              {"lambda_T", r.lambda_T},
              {"lambda_S", r.lambda_S},
              {"spatial_source", reg::to_string(r.spatial_source)},
              {"sigma", r.sigma},
              {"photometric_prob", r.photometric_prob},
              {"ir_control", r.ir_control},
              {"ir_speed", reg::to_string(r.ir_speed)},
              {"photometric", photo},
              {"geometric", geo}};
  const auto& p = r.suite.params;
  j["transforms"] = {{"brightness_delta", range_json(p.brightness_delta)},
                     {"contrast_factor", range_json(p.contrast_factor)},
                     {"salt_pepper_density", p.salt_pepper_density},
                     {"blur_sigma", range_json(p.blur_sigma)},
                     {"rotation_deg", range_json(p.rotation_deg)},
                     {"shift_px", range_json(p.shift_px)},
                     {"scale_factor", range_json(p.scale_factor)},
                     {"randconv_kernels", p.randconv_kernels}};
  j["randconv"] = {{"enabled", c.randconv}, {"prob", c.randconv_prob}};
  return j;
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  c.schema_version = root.get<int>("schema_version");
  if (c.schema_version != kSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version));
  c.seed = root.get<std::uint64_t>("seed");
  c.total_steps = root.get<std::int64_t>("total_steps");
  c.eval_every = root.get<std::int64_t>("eval_every");
  c.log_every = root.get<std::int64_t>("log_every");
  c.n_eval_runs = root.get<int>("n_eval_runs");
  c.output_dir = root.get<std::string>("output_dir");

  {
    Section t = root.sub("track");
    c.track = parse_enum("track.preset", t.get<std::string>("preset"), sim::parse_track_preset);
    c.half_width = t.get<double>("half_width");
    t.finish();
  }
  {
    Section e = root.sub("env");
    c.dt = e.get<double>("dt");
    c.max_steps = e.get<int>("max_steps");
    c.train_noise = read_noise(e.sub("train_actuation_noise"));
    c.eval_noise = read_noise(e.sub("eval_actuation_noise"));
    e.finish();
  }
  {
    Section r = root.sub("render");
    c.render.width = r.get<int>("width");
    c.render.height = r.get<int>("height");
    c.render.camera = parse_enum("render.camera", r.get<std::string>("camera"), sim::parse_camera);
    c.render.surface_intensity = r.get<double>("surface_intensity");
    c.render.offtrack_intensity = r.get<double>("offtrack_intensity");
    c.render.line_intensity = r.get<double>("line_intensity");
    c.render.view_distance = r.get<double>("view_distance");
    r.finish();
  }
  {
    Section s = root.sub("shift");
    c.shift.brightness = s.get<double>("brightness");
    c.shift.noise_sigma = s.get<double>("noise_sigma");
    c.shift.invert = s.get<bool>("invert");
    s.finish();
  }
  {
    Section n = root.sub("network");
    c.network.conv = read_list<nn::ConvLayerSpec>(n, "conv", [](const json& v, const std::string& path) {
      Section l(v, path);
      nn::ConvLayerSpec spec{l.get<int>("out_channels"), l.get<int>("kernel"), l.get<int>("stride")};
      l.finish();
      return spec;
    });
    c.network.dense = read_list<int>(n, "dense", [](const json& v, const std::string& path) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      return v.get<int>();
    });
    c.network.activation =
        parse_enum("network.activation", n.get<std::string>("activation"), nn::parse_activation);
    n.finish();
  }
  {
    Section s = root.sub("sac");
    c.sac.gamma = s.get<double>("gamma");
    c.sac.alpha_init = s.get<double>("alpha_init");
    c.sac.lr = s.get<double>("lr");
    c.sac.batch_size = s.get<int>("batch_size");
    c.sac.global_buffer = s.get<int>("global_buffer");
    c.sac.local_buffer = s.get<int>("local_buffer");
    c.sac.workers = s.get<int>("workers");
    c.sac.tau = s.get<double>("tau");
    c.sac.target_entropy = s.get<double>("target_entropy");
    c.sac.updates_per_step = s.get<double>("updates_per_step");
    c.sac.warmup_steps = s.get<std::int64_t>("warmup_steps");
    s.finish();
  }
  {
    Section r = root.sub("reg");
    c.reg.mode = parse_enum("reg.mode", r.get<std::string>("mode"), reg::parse_reg_mode);
    c.reg.lambda_T = r.get<double>("lambda_T");
    c.reg.lambda_S = r.get<double>("lambda_S");
    c.reg.spatial_source =
        parse_enum("reg.spatial_source", r.get<std::string>("spatial_source"), reg::parse_spatial_source);
    c.reg.sigma = r.get<double>("sigma");
    c.reg.photometric_prob = r.get<double>("photometric_prob");
    c.reg.ir_control = r.get<bool>("ir_control");
    c.reg.ir_speed = parse_enum("reg.ir_speed", r.get<std::string>("ir_speed"), reg::parse_ir_speed_source);
    auto names = [](const json& v, const std::string& path) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
      return v.get<std::string>();
    };
    c.reg.suite.photometric.clear();
    for (const auto& n : read_list<std::string>(r, "photometric", names))
      c.reg.suite.photometric.push_back(parse_enum("reg.photometric", n, parse_photometric));
    c.reg.suite.geometric.clear();
    for (const auto& n : read_list<std::string>(r, "geometric", names))
      c.reg.suite.geometric.push_back(parse_enum("reg.geometric", n, parse_geometric));
    r.finish();
  }
  {
    Section t = root.sub("transforms");
    auto& p = c.reg.suite.params;
    p.brightness_delta = read_range(t, "brightness_delta");
    p.contrast_factor = read_range(t, "contrast_factor");
    p.salt_pepper_density = t.get<double>("salt_pepper_density");
    p.blur_sigma = read_range(t, "blur_sigma");
    p.rotation_deg = read_range(t, "rotation_deg");
    p.shift_px = read_range(t, "shift_px");
    p.scale_factor = read_range(t, "scale_factor");
    p.randconv_kernels = read_list<int>(t, "randconv_kernels", [](const json& v, const std::string& path) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      return v.get<int>();
    });
    t.finish();
  }
  {
    Section r = root.sub("randconv");
    c.randconv = r.get<bool>("enabled");
    c.randconv_prob = r.get<double>("prob");
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

std::string to_text(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }
  return from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write config " + path.string());
  out << to_text(cfg);
  if (!out) throw FileError("failed writing config " + path.string());
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

sim::Track build_track(const ExperimentConfig& cfg) { return sim::make_track(cfg.track, cfg.half_width); }

nn::NetworkSpec actor_spec(const ExperimentConfig& cfg) {
  nn::NetworkSpec s = nn::policy_spec(cfg.render.height, cfg.render.width);
  s.conv = cfg.network.conv;
  s.dense = cfg.network.dense;
  s.activation = cfg.network.activation;
  return s;
}

nn::NetworkSpec critic_spec(const ExperimentConfig& cfg) {
  nn::NetworkSpec s = actor_spec(cfg);
  s.head = nn::Head::q_value;
  s.side_dim = s.action_dim;
  return s;
}

sac::TrainSetup build_train_setup(const ExperimentConfig& cfg) {
  const sim::Track track = build_track(cfg);
  sac::TrainSetup s;
  s.make_env = [track, cfg](int) {
    return sim::Env(track, cfg.render, cfg.dt, cfg.max_steps, {}, cfg.train_noise);
  };
  s.make_eval_env = [track, cfg](int) {
    return sim::Env(track, cfg.render, cfg.dt, cfg.max_steps, {}, cfg.eval_noise);
  };
  s.sac = cfg.sac;
  s.reg = cfg.reg;
  s.actor_spec = actor_spec(cfg);
  s.critic_spec = critic_spec(cfg);
  s.randconv = cfg.randconv;
  s.randconv_prob = cfg.randconv_prob;
  s.randconv_kernels = cfg.reg.suite.params.randconv_kernels;
  s.seed = cfg.seed;
  s.total_steps = cfg.total_steps;
  s.eval_every = cfg.eval_every;
  s.log_every = cfg.log_every;
  s.n_eval_runs = cfg.n_eval_runs;
  s.config_hash = config_hash(cfg);
  return s;
}

metrics::EvalSetup build_eval_setup(const ExperimentConfig& cfg) {
  return {build_track(cfg), cfg.render, cfg.dt, cfg.max_steps, cfg.eval_noise};
}

}  // namespace smoothrace::experiment
