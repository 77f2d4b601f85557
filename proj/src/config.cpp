#include "citepref/config.hpp"

#include <set>

#include <yaml-cpp/yaml.h>

#include "citepref/factors.hpp"

namespace citepref {

namespace {

template <typename T>
T get(const YAML::Node& node, const char* key, T fallback) {
  const auto child = node[key];
  if (!child) return fallback;
  try {
    return child.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void reject_unknown(const YAML::Node& node, const std::set<std::string>& known, const std::string& where) {
  if (!node.IsMap()) throw ConfigError(where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

BackendSpec parse_backend(const YAML::Node& node) {
  BackendSpec b;
  b.id = get<std::string>(node, "id", "");
  if (b.id.empty()) throw ConfigError("every backend needs an id");
  const auto kind = get<std::string>(node, "kind", "simulator");
  const std::string where = "backend '" + b.id + "'";
  if (kind == "simulator") {
    reject_unknown(node,
                   {"id", "kind", "gamma0", "gamma1", "sigma_s", "sigma_so", "no_url_rate", "foreign_url_rate",
                    "multi_url_rate", "factor_gamma0"},
                   where);
    b.kind = BackendKind::Simulator;
    b.sim.gamma0 = get(node, "gamma0", b.sim.gamma0);
    b.sim.gamma1 = get(node, "gamma1", b.sim.gamma1);
    b.sim.sigma_s = get(node, "sigma_s", b.sim.sigma_s);
    b.sim.sigma_so = get(node, "sigma_so", b.sim.sigma_so);
    b.sim.no_url_rate = get(node, "no_url_rate", b.sim.no_url_rate);
    b.sim.foreign_url_rate = get(node, "foreign_url_rate", b.sim.foreign_url_rate);
    b.sim.multi_url_rate = get(node, "multi_url_rate", b.sim.multi_url_rate);
    if (const auto fg = node["factor_gamma0"]) {
      if (!fg.IsMap()) throw ConfigError(where + ": factor_gamma0 must map factor ids to values");
      for (const auto& kv : fg) {
        int id = 0;
        double value = 0.0;
        try {
          id = kv.first.as<int>();
          value = kv.second.as<double>();
        } catch (const YAML::Exception&) {
          throw ConfigError(where + ": factor_gamma0 must map factor ids to numbers");
        }
        if (!find_factor(id)) throw ConfigError(where + ": unknown factor id " + std::to_string(id));
        b.sim.factor_gamma0[id] = value;
      }
    }
    try {
      b.sim.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  } else if (kind == "http") {
    reject_unknown(node,
                   {"id", "kind", "dialect", "base_url", "path", "model", "token_env", "timeout_seconds",
                    "max_output_tokens", "temperature", "output_limit_field", "requests_per_second", "token", "api_key"},
                   where);
    if (node["token"] || node["api_key"]) {
      throw ConfigError(where + ": credentials do not belong in the config; set token_env to an environment variable");
    }
    b.kind = BackendKind::Http;
    auto& h = b.http;
    h.id = b.id;
    try {
      h.dialect = parse_dialect(get<std::string>(node, "dialect", "openai"));
    } catch (const std::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
    h.base_url = get<std::string>(node, "base_url", "");
    h.path = get<std::string>(node, "path", "");
    h.model = get<std::string>(node, "model", "");
    h.token_env = get<std::string>(node, "token_env", "");
    h.timeout = std::chrono::seconds(get<int>(node, "timeout_seconds", 120));
    h.max_output_tokens = get<int>(node, "max_output_tokens", 1024);
    if (node["temperature"]) h.temperature = get<double>(node, "temperature", 0.0);
    h.output_limit_field = get<std::string>(node, "output_limit_field", "");
    h.requests_per_second = get<double>(node, "requests_per_second", 0.0);
    if (h.base_url.empty() || h.model.empty() || h.token_env.empty()) {
      throw ConfigError(where + ": http backends need base_url, model and token_env");
    }
    if (h.max_output_tokens < 1 || h.timeout.count() < 1) throw ConfigError(where + ": limits must be positive");
  } else {
    throw ConfigError(where + ": kind must be 'simulator' or 'http'");
  }
  return b;
}

}  // namespace

std::vector<std::string> RunConfig::model_ids() const {
  std::vector<std::string> out;
  for (const auto& b : backends) out.push_back(b.id);
  return out;
}

void RunConfig::validate() const {
  if (reps < 1) throw ConfigError("reps must be at least 1");
  if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (corpus_path.has_value() == synth.has_value()) throw ConfigError("set exactly one of corpus / synth_corpus");
  if (synth && (synth->factors.empty() || synth->per_factor < 1)) {
    throw ConfigError("synth_corpus needs at least one factor and per_factor >= 1");
  }
  if (backends.empty()) throw ConfigError("at least one backend is required");
  std::set<std::string> ids;
  for (const auto& b : backends) {
    if (!ids.insert(b.id).second) throw ConfigError("duplicate backend id '" + b.id + "'");
  }
  try {
    analysis.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig parse_run_config(const std::string& yaml, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  reject_unknown(root,
                 {"corpus", "synth_corpus", "backends", "reps", "seed", "parallelism", "alpha", "output_dir", "fit",
                  "retry"},
                 "config");
  RunConfig c;
  if (root["corpus"]) {
    std::filesystem::path p = get<std::string>(root, "corpus", "");
    c.corpus_path = (p.is_absolute() ? p : base_dir / p).lexically_normal();
  }
  if (const auto s = root["synth_corpus"]) {
    reject_unknown(s, {"factors", "per_factor"}, "synth_corpus");
    SynthConfig sc;
    if (s["factors"]) sc.factors = get<std::vector<int>>(s, "factors", {});
    sc.per_factor = get<int>(s, "per_factor", 4);
    for (int id : sc.factors) {
      if (!find_factor(id)) throw ConfigError("synth_corpus: unknown factor id " + std::to_string(id));
    }
    c.synth = sc;
  }
  c.reps = get<int>(root, "reps", c.reps);
  c.seed = get<std::uint64_t>(root, "seed", c.seed);
  c.parallelism = get<int>(root, "parallelism", c.parallelism);
  c.alpha = get<double>(root, "alpha", c.alpha);
  c.analysis.alpha = c.alpha;
  {
    std::filesystem::path out = get<std::string>(root, "output_dir", "out");
    c.output_dir = (out.is_absolute() ? out : base_dir / out).lexically_normal();
  }
  if (const auto f = root["fit"]) {
    reject_unknown(f, {"reporting_cap", "max_evaluations", "rho_begin", "rho_end", "glm_start"}, "fit");
    c.analysis.reporting_cap = get(f, "reporting_cap", c.analysis.reporting_cap);
    c.analysis.optimizer.max_evaluations = get(f, "max_evaluations", c.analysis.optimizer.max_evaluations);
    c.analysis.optimizer.rho_begin = get(f, "rho_begin", c.analysis.optimizer.rho_begin);
    c.analysis.optimizer.rho_end = get(f, "rho_end", c.analysis.optimizer.rho_end);
    c.analysis.glm_start = get(f, "glm_start", c.analysis.glm_start);
  }
  if (const auto r = root["retry"]) {
    reject_unknown(r, {"max_attempts", "initial_delay_ms", "max_delay_ms"}, "retry");
    c.retry.max_attempts = get(r, "max_attempts", c.retry.max_attempts);
    c.retry.initial_delay = std::chrono::milliseconds(get<int>(r, "initial_delay_ms", 500));
    c.retry.max_delay = std::chrono::milliseconds(get<int>(r, "max_delay_ms", 30000));
    if (c.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be at least 1");
  }
  if (const auto b = root["backends"]) {
    if (!b.IsSequence()) throw ConfigError("backends must be a list");
    for (const auto& node : b) c.backends.push_back(parse_backend(node));
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto text = read_file(path);
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_run_config(text, base);
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, std::uint64_t seed) {
  if (spec.kind == BackendKind::Simulator) {
    SimConfig sim = spec.sim;
    sim.seed = seed;
    return std::make_unique<SimulatorBackend>(spec.id, sim);
  }
  return std::make_unique<HttpBackend>(spec.http);
}

BrandProfile parse_brand_profile(const std::string& yaml) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("brand profile is not valid YAML: ") + e.what());
  }
  reject_unknown(root, {"names", "domains"}, "brand profile");
  BrandProfile b;
  b.names = get<std::vector<std::string>>(root, "names", {});
  b.domains = get<std::vector<std::string>>(root, "domains", {});
  if (b.names.empty() && b.domains.empty()) throw ConfigError("brand profile needs at least one name or domain");
  return b;
}

BrandProfile load_brand_profile(const std::filesystem::path& path) { return parse_brand_profile(read_file(path)); }

}  // namespace citepref
