#include "ocgs/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "ocgs/error.hpp"

namespace ocgs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorKind::config, "bad numeric value for " + key + ": '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw Error(ErrorKind::config, "bad integer value for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error(ErrorKind::config, "bad boolean value for " + key + ": '" + v + "'");
}

// Single table drives both serialization and parsing so the two never drift apart.
template <typename Config, typename Visitor>
void visit_fields(Config& c, Visitor&& v) {
  v("iterations", c.iterations);
  v("seed", c.seed);
  v("deterministic", c.deterministic);
  v("threads", c.threads);
  v("alpha_coeff", c.alpha_coeff);
  v("beta_coeff", c.beta_coeff);
  v("gamma_coeff", c.gamma_coeff);
  v("lambda_dssim", c.lambda_dssim);
  v("distortion_from_iter", c.distortion_from_iter);
  v("normal_from_iter", c.normal_from_iter);
  v("use_masks", c.use_masks);
  v("occlusion_prune", c.occlusion_prune);
  v("occlusion_prune_interval", c.occlusion_prune_interval);
  v("densify_from_iter", c.densify_from_iter);
  v("densify_interval", c.densify_interval);
  v("densify_until_iter", c.densify_until_iter);
  v("densify_grad_threshold", c.densify_grad_threshold);
  v("percent_dense", c.percent_dense);
  v("opacity_reset_interval", c.opacity_reset_interval);
  v("opacity_prune_threshold", c.opacity_prune_threshold);
  v("max_screen_radius", c.max_screen_radius);
  v("max_world_scale_ratio", c.max_world_scale_ratio);
  v("sh_degree_max", c.sh_degree_max);
  v("sh_upgrade_interval", c.sh_upgrade_interval);
  v("lr_position_init", c.lr_position_init);
  v("lr_position_final", c.lr_position_final);
  v("lr_sh_dc", c.lr_sh_dc);
  v("lr_sh_rest", c.lr_sh_rest);
  v("lr_opacity", c.lr_opacity);
  v("lr_scale", c.lr_scale);
  v("lr_rotation", c.lr_rotation);
  v("alpha_termination_threshold", c.alpha_termination_threshold);
  v("min_splat_alpha", c.min_splat_alpha);
  v("background", c.background);
}

struct Writer {
  std::map<std::string, std::string>& out;
  void operator()(const char* k, bool b) const { out[k] = b ? "true" : "false"; }
  void operator()(const char* k, int i) const { out[k] = std::to_string(i); }
  void operator()(const char* k, std::uint64_t i) const { out[k] = std::to_string(i); }
  void operator()(const char* k, double d) const { out[k] = fmt_double(d); }
  void operator()(const char* k, const Eigen::Vector3d& v) const {
    out[k] = fmt_double(v[0]) + "," + fmt_double(v[1]) + "," + fmt_double(v[2]);
  }
};

struct Setter {
  const std::string& key;
  const std::string& value;
  bool& found;
  void operator()(const char* k, bool& b) const {
    if (key == k) b = parse_bool(key, value), found = true;
  }
  void operator()(const char* k, int& i) const {
    if (key == k) i = static_cast<int>(parse_int(key, value)), found = true;
  }
  void operator()(const char* k, std::uint64_t& i) const {
    if (key == k) i = static_cast<std::uint64_t>(parse_int(key, value)), found = true;
  }
  void operator()(const char* k, double& d) const {
    if (key == k) d = parse_double(key, value), found = true;
  }
  void operator()(const char* k, Eigen::Vector3d& v) const {
    if (key != k) return;
    std::stringstream ss(value);
    std::string part;
    int n = 0;
    while (std::getline(ss, part, ',')) {
      if (n >= 3) break;
      v[n++] = parse_double(key, trim(part));
    }
    if (n != 3) throw Error(ErrorKind::config, "expected r,g,b for " + key);
    found = true;
  }
};

}  // namespace

TrainConfig TrainConfig::resolved(std::size_t n_views) const {
  TrainConfig c = *this;
  if (c.occlusion_prune_interval == 0) c.occlusion_prune_interval = n_views <= 64 ? 100 : 600;
  if (c.densify_until_iter == 0) c.densify_until_iter = c.iterations / 2;
  return c;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::config, m); };
  if (iterations < 0) fail("iterations must be >= 0");
  if (occlusion_prune_interval < 0 || densify_interval < 1 || opacity_reset_interval < 1 ||
      sh_upgrade_interval < 1)
    fail("all intervals must be >= 1");
  if (gamma_coeff < 0 || alpha_coeff < 0 || beta_coeff < 0) fail("loss coefficients must be >= 0");
  if (!(alpha_termination_threshold > 0 && alpha_termination_threshold <= 1))
    fail("alpha_termination_threshold must lie in (0,1]");
  if (!(min_splat_alpha >= 0 && min_splat_alpha < 1)) fail("min_splat_alpha must lie in [0,1)");
  if (!(opacity_prune_threshold > 0 && opacity_prune_threshold < 1))
    fail("opacity_prune_threshold must lie in (0,1)");
  if (!(lambda_dssim >= 0 && lambda_dssim <= 1)) fail("lambda_dssim must lie in [0,1]");
  if (sh_degree_max < 0 || sh_degree_max > 3) fail("sh_degree_max must lie in [0,3]");
}

RenderSettings TrainConfig::render_settings() const {
  RenderSettings s;
  s.alpha_termination_threshold = alpha_termination_threshold;
  s.min_splat_alpha = min_splat_alpha;
  return s;
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  std::map<std::string, std::string> out;
  TrainConfig copy = *this;
  visit_fields(copy, Writer{out});
  return out;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  bool found = false;
  visit_fields(*this, Setter{key, value, found});
  if (!found) throw Error(ErrorKind::config, "unknown config key '" + key + "'");
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot read config " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::config, path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

void save_config(const std::filesystem::path& path, const TrainConfig& config) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::config, "cannot write config " + path.string());
  for (const auto& [k, v] : config.to_map()) out << k << " = " << v << "\n";
}

}  // namespace ocgs
