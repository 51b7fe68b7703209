#include "sfw/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sfw/io.hpp"

namespace sfw {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct RawConfig {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::set<std::string> consumed;

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
  }

  std::string take(const std::string& section, const std::string& key) {
    consumed.insert(section + "." + key);
    return sections.at(section).at(key);
  }
};

RawConfig parse_raw(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments (# at start or after whitespace)
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      raw.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": key outside of a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (raw.sections[section].count(key))
      throw ConfigError("duplicate config key: " + section + "." + key);
    raw.sections[section][key] = value;
  }
  return raw;
}

double to_double(const std::string& v, const std::string& where) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config value for " + where + " is not a number: '" + v + "'");
  }
}

long long to_int(const std::string& v, const std::string& where) {
  try {
    std::size_t pos = 0;
    long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config value for " + where + " is not an integer: '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config value for " + where + " is not a boolean: '" + v + "'");
}

template <typename T, typename F>
void maybe(RawConfig& raw, const std::string& section, const std::string& key, T& field, F conv) {
  if (raw.has(section, key)) field = conv(raw.take(section, key), section + "." + key);
}

std::vector<double> to_double_list(const std::string& v, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item, where));
  }
  return out;
}

}  // namespace

KernelSpec RunConfig::effective_kernel() const {
  KernelSpec spec = kernel;
  const bool laplace = spec.variant == KernelVariant::LaplaceUnnormalized ||
                       spec.variant == KernelVariant::LaplaceNormalized;
  if (laplace && laplace_s_count > 0)
    spec.laplace_s = uniform_laplace_samples(laplace_s_count, laplace_s_scale);
  spec.validate();
  return spec;
}

RunConfig parse_config_text(const std::string& text) {
  RawConfig raw = parse_raw(text);
  RunConfig cfg;

  static const std::set<std::string> kSections = {"run",   "kernel",     "solver",
                                                  "noise", "simulation", "evaluation"};
  for (const auto& [name, _] : raw.sections)
    if (!kSections.count(name)) throw ConfigError("unknown config section: [" + name + "]");

  auto dbl = [](const std::string& v, const std::string& w) { return to_double(v, w); };
  auto integer = [](const std::string& v, const std::string& w) { return static_cast<int>(to_int(v, w)); };
  auto boolean = [](const std::string& v, const std::string& w) { return to_bool(v, w); };
  auto str = [](const std::string& v, const std::string&) { return v; };

  maybe(raw, "run", "seed", cfg.seed,
        [](const std::string& v, const std::string& w) { return static_cast<std::uint64_t>(to_int(v, w)); });
  maybe(raw, "run", "out_dir", cfg.out_dir, str);
  maybe(raw, "run", "threads", cfg.threads, integer);
  maybe(raw, "run", "frames_format", cfg.frames_format, str);
  if (cfg.frames_format != "binary" && cfg.frames_format != "csv")
    throw ConfigError("run.frames_format must be 'binary' or 'csv'");

  if (!raw.has("kernel", "variant"))
    throw ConfigError("missing required config key: kernel.variant");
  cfg.kernel.variant = kernel_variant_from_string(raw.take("kernel", "variant"));
  const bool is_1d = cfg.kernel.variant == KernelVariant::Gaussian1D ||
                     cfg.kernel.variant == KernelVariant::LaplaceUnnormalized ||
                     cfg.kernel.variant == KernelVariant::LaplaceNormalized;
  if (is_1d) {
    cfg.kernel.box = point1d(1.0);
    maybe(raw, "kernel", "b1", cfg.kernel.box[0], dbl);
  } else {
    cfg.kernel.box = point3d(6.4, 6.4, 0.8);
    maybe(raw, "kernel", "b1", cfg.kernel.box[0], dbl);
    maybe(raw, "kernel", "b2", cfg.kernel.box[1], dbl);
    maybe(raw, "kernel", "b3", cfg.kernel.box[2], dbl);
  }
  maybe(raw, "kernel", "sigma", cfg.kernel.sigma, dbl);
  maybe(raw, "kernel", "detector_samples", cfg.kernel.detector_samples, integer);
  if (raw.has("kernel", "laplace_s")) {
    auto list = to_double_list(raw.take("kernel", "laplace_s"), "kernel.laplace_s");
    cfg.kernel.laplace_s = Eigen::Map<const Vec>(list.data(), static_cast<Eigen::Index>(list.size()));
  }
  maybe(raw, "kernel", "laplace_s_count", cfg.laplace_s_count, integer);
  maybe(raw, "kernel", "laplace_s_scale", cfg.laplace_s_scale, dbl);
  maybe(raw, "kernel", "n1", cfg.kernel.n1, integer);
  maybe(raw, "kernel", "n2", cfg.kernel.n2, integer);
  maybe(raw, "kernel", "planes", cfg.kernel.planes, integer);
  maybe(raw, "kernel", "na", cfg.kernel.na, dbl);
  maybe(raw, "kernel", "n_i", cfg.kernel.n_i, dbl);
  maybe(raw, "kernel", "n_t", cfg.kernel.n_t, dbl);
  maybe(raw, "kernel", "lambda_exc", cfg.kernel.lambda_exc, dbl);
  // PSF widths default to 0.42 lambda / NA unless given explicitly.
  const double psf_default = 0.42 * cfg.kernel.lambda_exc / cfg.kernel.na;
  cfg.kernel.psf_sigma = psf_default;
  cfg.kernel.astig_sigma0 = psf_default;
  cfg.kernel.astig_d = cfg.kernel.lambda_exc * cfg.kernel.n_i / (2.0 * cfg.kernel.na * cfg.kernel.na);
  maybe(raw, "kernel", "psf_sigma", cfg.kernel.psf_sigma, dbl);
  maybe(raw, "kernel", "astig_sigma0", cfg.kernel.astig_sigma0, dbl);
  maybe(raw, "kernel", "astig_alpha", cfg.kernel.astig_alpha, dbl);
  maybe(raw, "kernel", "astig_beta", cfg.kernel.astig_beta, dbl);
  maybe(raw, "kernel", "astig_d", cfg.kernel.astig_d, dbl);
  maybe(raw, "kernel", "helix_omega", cfg.kernel.helix_omega, dbl);
  maybe(raw, "kernel", "helix_theta_speed", cfg.kernel.helix_theta_speed, dbl);
  maybe(raw, "kernel", "tirf_sqrt_depth", cfg.kernel.tirf_sqrt_depth, boolean);

  maybe(raw, "solver", "lambda", cfg.lambda, dbl);
  maybe(raw, "solver", "positive", cfg.positive, boolean);
  maybe(raw, "solver", "max_outer", cfg.max_outer, integer);
  maybe(raw, "solver", "stop_tol", cfg.stop_tol, dbl);
  maybe(raw, "solver", "fista_max_iters", cfg.lasso.max_iters, integer);
  maybe(raw, "solver", "fista_tol", cfg.lasso.tol, dbl);
  maybe(raw, "solver", "bfgs_max_iters", cfg.descent.max_iters, integer);
  maybe(raw, "solver", "bfgs_grad_tol", cfg.descent.grad_tol, dbl);
  maybe(raw, "solver", "bfgs_memory", cfg.descent.memory, integer);
  cfg.lasso.sign_mode = cfg.positive ? SignMode::NonNegative : SignMode::Free;
  if (raw.has("solver", "grid")) {
    auto list = to_double_list(raw.take("solver", "grid"), "solver.grid");
    cfg.grid.clear();
    for (double v : list) cfg.grid.push_back(static_cast<int>(v));
  }

  maybe(raw, "noise", "enabled", cfg.noise_enabled, boolean);
  maybe(raw, "noise", "n_photon", cfg.noise.n_photon, dbl);
  maybe(raw, "noise", "gauss_variance", cfg.noise.gauss_variance, dbl);

  maybe(raw, "simulation", "n_total", cfg.n_total, integer);
  maybe(raw, "simulation", "n_per_frame", cfg.n_per_frame, integer);
  maybe(raw, "simulation", "jitter_radius", cfg.jitter_radius, dbl);

  maybe(raw, "evaluation", "radius_jaccard", cfg.radius_jaccard, dbl);
  maybe(raw, "evaluation", "radius_rmse", cfg.radius_rmse, dbl);
  if (raw.has("evaluation", "lambda_grid"))
    cfg.lambda_grid = to_double_list(raw.take("evaluation", "lambda_grid"), "evaluation.lambda_grid");
  maybe(raw, "evaluation", "training_frames", cfg.training_frames, integer);

  for (const auto& [section, keys] : raw.sections)
    for (const auto& [key, _] : keys)
      if (!raw.consumed.count(section + "." + key))
        throw ConfigError("unknown config key: " + section + "." + key);
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string dump_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[run]\n";
  out << "seed = " << cfg.seed << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  out << "threads = " << cfg.threads << "\n";
  out << "frames_format = " << cfg.frames_format << "\n";

  const auto& k = cfg.kernel;
  const bool is_1d = k.variant == KernelVariant::Gaussian1D ||
                     k.variant == KernelVariant::LaplaceUnnormalized ||
                     k.variant == KernelVariant::LaplaceNormalized;
  out << "\n[kernel]\n";
  out << "variant = " << to_string(k.variant) << "\n";
  out << "b1 = " << format_double(k.box[0]) << "\n";
  if (!is_1d) {
    out << "b2 = " << format_double(k.box[1]) << "\n";
    out << "b3 = " << format_double(k.box[2]) << "\n";
  }
  if (k.variant == KernelVariant::Gaussian1D) {
    out << "sigma = " << format_double(k.sigma) << "\n";
    out << "detector_samples = " << k.detector_samples << "\n";
  }
  if (k.variant == KernelVariant::LaplaceUnnormalized ||
      k.variant == KernelVariant::LaplaceNormalized) {
    if (cfg.laplace_s_count > 0) {
      out << "laplace_s_count = " << cfg.laplace_s_count << "\n";
      out << "laplace_s_scale = " << format_double(cfg.laplace_s_scale) << "\n";
    } else {
      out << "laplace_s = ";
      for (Eigen::Index i = 0; i < k.laplace_s.size(); ++i) {
        if (i) out << ",";
        out << format_double(k.laplace_s[i]);
      }
      out << "\n";
    }
  }
  if (!is_1d) {
    out << "n1 = " << k.n1 << "\n";
    out << "n2 = " << k.n2 << "\n";
    out << "planes = " << k.planes << "\n";
    out << "na = " << format_double(k.na) << "\n";
    out << "n_i = " << format_double(k.n_i) << "\n";
    out << "n_t = " << format_double(k.n_t) << "\n";
    out << "lambda_exc = " << format_double(k.lambda_exc) << "\n";
    out << "psf_sigma = " << format_double(k.psf_sigma) << "\n";
    if (k.variant == KernelVariant::Astigmatism) {
      out << "astig_sigma0 = " << format_double(k.astig_sigma0) << "\n";
      out << "astig_alpha = " << format_double(k.astig_alpha) << "\n";
      out << "astig_beta = " << format_double(k.astig_beta) << "\n";
      out << "astig_d = " << format_double(k.astig_d) << "\n";
    }
    if (k.variant == KernelVariant::DoubleHelix) {
      out << "helix_omega = " << format_double(k.helix_omega) << "\n";
      out << "helix_theta_speed = " << format_double(k.helix_theta_speed) << "\n";
    }
    if (k.variant == KernelVariant::MaTirf)
      out << "tirf_sqrt_depth = " << (k.tirf_sqrt_depth ? "true" : "false") << "\n";
  }

  out << "\n[solver]\n";
  if (cfg.lambda > 0.0) out << "lambda = " << format_double(cfg.lambda) << "\n";
  out << "positive = " << (cfg.positive ? "true" : "false") << "\n";
  out << "max_outer = " << cfg.max_outer << "\n";
  out << "stop_tol = " << format_double(cfg.stop_tol) << "\n";
  out << "fista_max_iters = " << cfg.lasso.max_iters << "\n";
  out << "fista_tol = " << format_double(cfg.lasso.tol) << "\n";
  out << "bfgs_max_iters = " << cfg.descent.max_iters << "\n";
  out << "bfgs_grad_tol = " << format_double(cfg.descent.grad_tol) << "\n";
  out << "bfgs_memory = " << cfg.descent.memory << "\n";
  if (!cfg.grid.empty()) {
    out << "grid = ";
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
      if (i) out << ",";
      out << cfg.grid[i];
    }
    out << "\n";
  }

  out << "\n[noise]\n";
  out << "enabled = " << (cfg.noise_enabled ? "true" : "false") << "\n";
  out << "n_photon = " << format_double(cfg.noise.n_photon) << "\n";
  out << "gauss_variance = " << format_double(cfg.noise.gauss_variance) << "\n";

  out << "\n[simulation]\n";
  out << "n_total = " << cfg.n_total << "\n";
  out << "n_per_frame = " << cfg.n_per_frame << "\n";
  out << "jitter_radius = " << format_double(cfg.jitter_radius) << "\n";

  out << "\n[evaluation]\n";
  out << "radius_jaccard = " << format_double(cfg.radius_jaccard) << "\n";
  out << "radius_rmse = " << format_double(cfg.radius_rmse) << "\n";
  if (!cfg.lambda_grid.empty()) {
    out << "lambda_grid = ";
    for (std::size_t i = 0; i < cfg.lambda_grid.size(); ++i) {
      if (i) out << ",";
      out << format_double(cfg.lambda_grid[i]);
    }
    out << "\n";
  }
  out << "training_frames = " << cfg.training_frames << "\n";
  return out.str();
}

}  // namespace sfw
