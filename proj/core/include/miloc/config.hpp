#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include "miloc/channel.hpp"
#include "miloc/estimators.hpp"
#include "miloc/geometry.hpp"

namespace miloc {

enum class Estimator { NumLs, PairMl, TurboLs, Multilateration };
enum class InitKind { Perfect, Random, PairMl };

const char* to_string(Estimator e);
const char* to_string(Scheme s);
std::string init_label(InitKind kind, int restarts);

/// Experiment description. Defaults reproduce the reference setup: 1.5 m
/// cube, four wall anchors, 5-turn 5 cm coils at 500 kHz, sigma = 1e-5.
struct ExperimentConfig {
  double room_size_m = 1.5;
  std::string anchor_layout = "default";  // "default" or "x y z; x y z; ..."
  double nu = 5.0;
  double diameter_m = 0.05;
  double resistance_ohm = 1.0;
  double frequency_hz = 500e3;
  double mu = 4e-7 * std::numbers::pi;
  double sigma = 1e-5;
  double min_dist_factor = 3.0;

  std::vector<std::size_t> agents = {10};
  std::size_t topologies = 100;
  std::size_t noise = 20;
  Scheme scheme = Scheme::Cooperative;
  Estimator estimator = Estimator::NumLs;
  InitKind init = InitKind::Perfect;
  int random_restarts = 1;
  std::uint64_t seed = 1;
  std::string out = "out";
  unsigned threads = 0;  // 0: hardware concurrency
  bool reference_solve = true;
  bool timing = false;

  Room room() const { return Room::cube(room_size_m); }
  std::vector<Deployment> anchors() const;
  CoilParams coil() const { return CoilParams::from_diameter(diameter_m, nu, resistance_ohm); }
  GlobalParams globals() const { return GlobalParams{frequency_hz, mu, sigma}; }
  CouplingTable coupling() const { return CouplingTable(coil(), globals()); }
  double min_dist() const { return min_dist_factor * diameter_m; }

  /// Throws Config on an invalid combination of values.
  void validate() const;
};

/// Applies one `key = value` assignment. Unknown keys and malformed values
/// throw Config.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Flat `key = value` text; '#' starts a comment.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Resolved config with every key materialized, parseable by parse_config.
std::string echo_config(const ExperimentConfig& cfg);

/// "5", "1..10" or "1,5,10".
std::vector<std::size_t> parse_agent_list(const std::string& text);

}  // namespace miloc
