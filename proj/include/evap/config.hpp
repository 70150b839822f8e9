#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "evap/common.hpp"
#include "evap/counting.hpp"
#include "evap/model.hpp"

namespace evap {

// Sectioned key = value text. `#` and `;` start comments; unknown sections
// and keys are errors at typed-extraction time.
struct ConfigFile {
  using Section = std::vector<std::pair<std::string, std::string>>;
  std::vector<std::pair<std::string, Section>> sections;

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  static ConfigFile parse(std::istream& in) {
    ConfigFile cfg;
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        require(line.back() == ']', "config line " + std::to_string(lineno) +
                                        ": unterminated section header");
        current = trim(line.substr(1, line.size() - 2));
        require(!current.empty(), "config line " + std::to_string(lineno) +
                                      ": empty section name");
        cfg.sections.emplace_back(current, Section{});
        continue;
      }
      const auto eq = line.find('=');
      require(eq != std::string::npos,
              "config line " + std::to_string(lineno) + ": expected key = value");
      require(!current.empty(), "config line " + std::to_string(lineno) +
                                    ": key outside any [section]");
      cfg.sections.back().second.emplace_back(trim(line.substr(0, eq)),
                                              trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  static ConfigFile parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open config file: " + path);
    return parse(in);
  }

  std::string echo() const {
    std::string out;
    for (const auto& [name, body] : sections) {
      out += "[" + name + "]\n";
      for (const auto& [k, v] : body) out += k + " = " + v + "\n";
    }
    return out;
  }
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw Error("config key '" + key + "': cannot parse number from '" + v + "'");
  }
  require(pos == v.size(), "config key '" + key + "': trailing junk in '" + v + "'");
  return out;
}

inline std::int64_t to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  std::int64_t out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw Error("config key '" + key + "': cannot parse integer from '" + v + "'");
  }
  require(pos == v.size(), "config key '" + key + "': trailing junk in '" + v + "'");
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw Error("config key '" + key + "': expected boolean, got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    out.push_back(to_double(key, ConfigFile::trim(item)));
  }
  require(!out.empty(), "config key '" + key + "': empty list");
  return out;
}

}  // namespace detail

struct RunConfig {
  // [model]
  std::string model_type = "lattice";
  int d = 6;
  double spacing = 1.0;
  std::string potential = "soft-coulomb";
  double softening = 1.0;
  double lambda = 0.0;
  std::string preset;  // large-volume | semi-classical | inverse-N; overrides lambda
  double nu = 0.0;
  std::string boundary = "hard-wall";
  double kinetic_prefactor = 0.5;
  std::vector<double> external;
  bool include_exchange = true;  // false runs the Hartree-only comparison

  // [run]
  std::string scenario = "simulate";
  int N = 2;
  std::string initial = "slater";  // slater | perturbed
  double perturbation_angle = 0.2;
  std::uint64_t seed = 1;
  int workers = 1;
  std::uint64_t fock_cap = 200000;
  int instances = 100;
  std::string out_dir = "out";

  // [time]
  double t_max = 1.0;
  double dt = 1e-3;
  int stride = 10;
  double tol = 1e-12;
  double fd_delta = 1e-3;
  int fd_substeps = 64;
  bool selftest = true;

  // [weight]
  double theta = 1.0 / 3.0;
  std::vector<double> g_table;  // explicit table overrides theta

  // [bounds]
  std::vector<double> bounds_lambda{0.0, 0.01, 0.1};
  std::vector<double> bounds_K{1.0, 10.0, 100.0};
  std::vector<double> bounds_N{2.0, 4.0, 8.0};
  std::vector<double> bounds_t{0.0, 0.5, 1.0};
  double bounds_delta0 = 0.1;
  double bounds_S0 = 0.5;

  std::string config_echo;

  void validate() const {
    require(model_type == "lattice", "unknown model type: " + model_type);
    require(d >= 1, "model dimension must be positive");
    require(N >= 0 && N <= d, "N must lie in [0, d]");
    require(t_max > 0.0, "t_max must be positive");
    require(dt > 0.0, "dt must be positive");
    require(stride >= 1, "stride must be >= 1");
    require(theta > 0.0 && theta <= 1.0, "theta must lie in (0, 1]");
    require(scenario == "simulate" || scenario == "audit" || scenario == "fdll-check" ||
                scenario == "bounds",
            "unknown scenario: " + scenario);
    require(initial == "slater" || initial == "perturbed",
            "initial state must be slater or perturbed");
    require(workers >= 1, "workers must be >= 1");
    require(instances >= 1, "instances must be >= 1");
    require(binomial(d, N) <= fock_cap,
            "Fock dimension " + std::to_string(binomial(d, N)) +
                " exceeds the cap " + std::to_string(fock_cap));
  }

  FiniteBasisModel build_model() const {
    LatticeModelSpec spec;
    spec.d = d;
    spec.spacing = spacing;
    spec.potential.kind = potential;
    spec.potential.softening = softening;
    spec.nu = nu;
    spec.boundary = boundary;
    spec.external = external;
    spec.kinetic_prefactor = kinetic_prefactor;
    spec.lambda = lambda;
    if (!preset.empty()) {
      const ScalingPreset p = apply_scaling_preset(preset, N);
      spec.lambda = p.lambda;
      spec.kinetic_prefactor = p.kinetic_prefactor;
    }
    return build_lattice_model(spec);
  }

  WeightFunction weight() const {
    if (!g_table.empty()) return WeightFunction::from_values(g_table);
    return weight_g_theta(std::max(1, N), theta);
  }

  static RunConfig from_config(const ConfigFile& file) {
    RunConfig cfg;
    cfg.config_echo = file.echo();
    for (const auto& [section, body] : file.sections) {
      for (const auto& [key, value] : body) {
        cfg.apply(section, key, value);
      }
    }
    return cfg;
  }

  static RunConfig from_file(const std::string& path) {
    return from_config(ConfigFile::parse_file(path));
  }

  static RunConfig from_string(const std::string& text) {
    return from_config(ConfigFile::parse_string(text));
  }

 private:
  void apply(const std::string& section, const std::string& key,
             const std::string& value) {
    using detail::to_bool;
    using detail::to_double;
    using detail::to_int;
    using detail::to_list;
    auto unknown = [&]() -> Error {
      return Error("unknown config key '" + key + "' in section [" + section + "]");
    };
    if (section == "model") {
      if (key == "type") model_type = value;
      else if (key == "d") d = static_cast<int>(to_int(key, value));
      else if (key == "spacing") spacing = to_double(key, value);
      else if (key == "potential") potential = value;
      else if (key == "softening") softening = to_double(key, value);
      else if (key == "lambda") lambda = to_double(key, value);
      else if (key == "preset") preset = value;
      else if (key == "nu") nu = to_double(key, value);
      else if (key == "boundary") boundary = value;
      else if (key == "kinetic_prefactor") kinetic_prefactor = to_double(key, value);
      else if (key == "external") external = to_list(key, value);
      else if (key == "exchange") include_exchange = to_bool(key, value);
      else throw unknown();
    } else if (section == "run") {
      if (key == "scenario") scenario = value;
      else if (key == "N") N = static_cast<int>(to_int(key, value));
      else if (key == "initial") initial = value;
      else if (key == "perturbation_angle") perturbation_angle = to_double(key, value);
      else if (key == "seed") seed = static_cast<std::uint64_t>(to_int(key, value));
      else if (key == "workers") workers = static_cast<int>(to_int(key, value));
      else if (key == "fock_cap") fock_cap = static_cast<std::uint64_t>(to_int(key, value));
      else if (key == "instances") instances = static_cast<int>(to_int(key, value));
      else if (key == "out") out_dir = value;
      else throw unknown();
    } else if (section == "time") {
      if (key == "t_max") t_max = to_double(key, value);
      else if (key == "dt") dt = to_double(key, value);
      else if (key == "stride") stride = static_cast<int>(to_int(key, value));
      else if (key == "tol") tol = to_double(key, value);
      else if (key == "fd_delta") fd_delta = to_double(key, value);
      else if (key == "fd_substeps") fd_substeps = static_cast<int>(to_int(key, value));
      else if (key == "selftest") selftest = to_bool(key, value);
      else throw unknown();
    } else if (section == "weight") {
      if (key == "theta") theta = to_double(key, value);
      else if (key == "g") g_table = to_list(key, value);
      else throw unknown();
    } else if (section == "bounds") {
      if (key == "lambda_grid") bounds_lambda = to_list(key, value);
      else if (key == "k_grid") bounds_K = to_list(key, value);
      else if (key == "n_grid") bounds_N = to_list(key, value);
      else if (key == "t_grid") bounds_t = to_list(key, value);
      else if (key == "delta0") bounds_delta0 = to_double(key, value);
      else if (key == "s0") bounds_S0 = to_double(key, value);
      else throw unknown();
    } else {
      throw Error("unknown config section [" + section + "]");
    }
  }
};

}  // namespace evap
