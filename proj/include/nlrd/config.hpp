#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlrd/experiments.hpp"
#include "nlrd/network.hpp"

namespace nlrd {

/// Network part of an experiment config. Presets take diffusivities, rate
/// constants, kernel kind and placement; a custom network is given in full
/// with every separation kernel's width set by the experiment's epsilon.
struct NetworkConfig {
  std::string preset = "reversible_abc";  // reversible_abc | reversible_abcd | custom
  std::vector<double> diffusivities;       // empty: preset default
  double kappa1 = 1.0;
  double kappa2 = 0.05;
  KernelKind kernel = KernelKind::Doi;
  std::vector<Center> binding{{0.5, 0.0}, {0.5, 1.0}};
  double pair_probability = 1.0;
  NetworkSpec custom;  // preset == "custom"; kernel widths are placeholders
};

struct ExperimentConfig {
  int dimension = 1;
  int grid_points = 512;
  double length = 0.0;  // 2 pi
  double dt = 1e-3;
  double final_time = 1.0;
  double save_interval = 0.01;
  std::vector<double> profile_times;  // empty: final time only
  NetworkConfig network;
  double epsilon = 0.0;             // single-width runs
  std::vector<double> epsilons;     // convergence study widths
  double gamma = 1e4;
  std::size_t runs = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::vector<SpeciesInitial> initial;
};

/// Defaults for the given dimension: L = 2 pi, N = 512 (1d) / 256 (2d),
/// dt = 1e-3, D = (1, 0.5, 0.1), kappa = (1, 0.05), epsilon = L / 128,
/// epsilons = L * (2^-3 .. 2^-6) in 1d and L * (2^-3 .. 2^-5) in 2d.
ExperimentConfig default_config(int dimension);

/// Parses a JSON config. Missing keys take default_config values. Throws
/// std::invalid_argument with line context on malformed input and with the
/// key name on invalid values.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

/// Checks ranges; `convergence` additionally enforces >= 3 widths and the
/// min epsilon >= 4h guard.
void validate_config(const ExperimentConfig& config, bool convergence);

PeriodicGrid config_grid(const ExperimentConfig& config);
NetworkFactory network_factory(const ExperimentConfig& config);
std::vector<Field> config_initial(const ExperimentConfig& config);
std::vector<double> config_save_times(const ExperimentConfig& config);
std::vector<double> config_profile_times(const ExperimentConfig& config);

/// Pretty-printed JSON with every resolved field plus the command name.
std::string config_manifest(const ExperimentConfig& config, const std::string& command);

}  // namespace nlrd
