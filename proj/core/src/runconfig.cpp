#include "geocond/runconfig.hpp"

#include <fstream>
#include <sstream>

#include "geocond/errors.hpp"
#include "json.hpp"

namespace geocond {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known) throw ValidationError("unknown key \"" + it.key() + "\" in " + where);
  }
}

obm::TriangularDist parse_tri(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(where + " must be a [min, mode, max] array");
  obm::TriangularDist d;
  d.min = j[0].get<double>();
  d.mode = j[1].get<double>();
  d.max = j[2].get<double>();
  return d;
}

template <typename T>
void maybe(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

}  // namespace

void RunConfig::validate() const {
  if (workers < 0) throw ValidationError("workers must be >= 0");
  if (obm_count < 1) throw ValidationError("obm count must be >= 1");
  obm.validate();
  gan.validate();
  inpaint.validate();
}

RunConfig parse_run_config(const std::string& text, const std::string& source_name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(source_name + ": invalid JSON: " + e.what());
  }
  if (!root.is_object()) throw ValidationError(source_name + ": top level must be an object");
  reject_unknown(root, {"seed", "workers", "obm", "gan", "inpaint"}, source_name);

  RunConfig config;
  try {
    maybe(root, "seed", config.seed);
    maybe(root, "workers", config.workers);

    if (root.contains("obm")) {
      const json& o = root.at("obm");
      reject_unknown(o,
                     {"orientation", "amplitude", "wavelength", "channel_width",
                      "target_proportion", "height", "width", "count"},
                     source_name + ":obm");
      if (o.contains("orientation"))
        config.obm.orientation = parse_tri(o.at("orientation"), "obm.orientation");
      if (o.contains("amplitude"))
        config.obm.amplitude = parse_tri(o.at("amplitude"), "obm.amplitude");
      if (o.contains("wavelength"))
        config.obm.wavelength = parse_tri(o.at("wavelength"), "obm.wavelength");
      maybe(o, "channel_width", config.obm.channel_width);
      maybe(o, "target_proportion", config.obm.target_proportion);
      maybe(o, "height", config.obm.height);
      maybe(o, "width", config.obm.width);
      maybe(o, "count", config.obm_count);
    }

    if (root.contains("gan")) {
      const json& g = root.at("gan");
      reject_unknown(g,
                     {"image_size", "latent_dim", "batch_size", "epochs", "lr", "beta1",
                      "beta2", "batch_norm"},
                     source_name + ":gan");
      maybe(g, "image_size", config.gan.image_size);
      maybe(g, "latent_dim", config.gan.latent_dim);
      maybe(g, "batch_size", config.gan.batch_size);
      maybe(g, "epochs", config.gan.epochs);
      maybe(g, "lr", config.gan.lr);
      maybe(g, "beta1", config.gan.beta1);
      maybe(g, "beta2", config.gan.beta2);
      maybe(g, "batch_norm", config.gan.batch_norm);
    }

    if (root.contains("inpaint")) {
      const json& i = root.at("inpaint");
      reject_unknown(
          i, {"lambda", "lr", "iterations", "beta1", "beta2", "restarts", "radius"},
          source_name + ":inpaint");
      maybe(i, "lambda", config.inpaint.lambda);
      maybe(i, "lr", config.inpaint.lr);
      maybe(i, "iterations", config.inpaint.iterations);
      maybe(i, "beta1", config.inpaint.beta1);
      maybe(i, "beta2", config.inpaint.beta2);
      maybe(i, "restarts", config.inpaint.restarts);
      if (i.contains("radius")) {
        const json& r = i.at("radius");
        if (r.is_string()) {
          if (r.get<std::string>() != "auto")
            throw ValidationError("inpaint.radius must be an integer or \"auto\"");
          config.inpaint.radius = inpaint::kRadiusAuto;
        } else {
          config.inpaint.radius = r.get<int>();
        }
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(source_name + ": bad field type: " + e.what());
  }

  config.gan.seed = config.seed;
  config.inpaint.seed = config.seed;
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.filename().string());
}

std::string canonical_json(const RunConfig& c) {
  json root;
  root["seed"] = c.seed;
  root["workers"] = c.workers;
  root["obm"] = {
      {"orientation", {c.obm.orientation.min, c.obm.orientation.mode, c.obm.orientation.max}},
      {"amplitude", {c.obm.amplitude.min, c.obm.amplitude.mode, c.obm.amplitude.max}},
      {"wavelength", {c.obm.wavelength.min, c.obm.wavelength.mode, c.obm.wavelength.max}},
      {"channel_width", c.obm.channel_width},
      {"target_proportion", c.obm.target_proportion},
      {"height", c.obm.height},
      {"width", c.obm.width},
      {"count", c.obm_count},
  };
  root["gan"] = {
      {"image_size", c.gan.image_size},   {"latent_dim", c.gan.latent_dim},
      {"batch_size", c.gan.batch_size},   {"epochs", c.gan.epochs},
      {"lr", c.gan.lr},                   {"beta1", c.gan.beta1},
      {"beta2", c.gan.beta2},             {"batch_norm", c.gan.batch_norm},
  };
  root["inpaint"] = {
      {"lambda", c.inpaint.lambda},       {"lr", c.inpaint.lr},
      {"iterations", c.inpaint.iterations}, {"beta1", c.inpaint.beta1},
      {"beta2", c.inpaint.beta2},         {"restarts", c.inpaint.restarts},
      {"radius", c.inpaint.radius},
  };
  return root.dump();
}

std::string config_hash(const RunConfig& config) {
  const std::string text = canonical_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace geocond
