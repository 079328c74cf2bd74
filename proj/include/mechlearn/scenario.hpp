#pragma once

// Sandbox scenario and experiment configuration files (JSON).

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mechlearn/agents.hpp"
#include "mechlearn/auction.hpp"
#include "mechlearn/optimizer.hpp"

namespace mechlearn {

inline constexpr int kScenarioVersion = 1;

struct Scenario {
  BidSpace space;
  std::vector<double> position_discounts{1.0};
  Profiles advertisers;
  std::uint64_t users_min = 100;
  std::uint64_t users_max = 100;
  // Agent population: explicit labels, fixed proportions shuffled per seed,
  // or (neither set) proportions drawn from the simplex per seed.
  std::optional<std::vector<AgentKind>> kinds;
  std::optional<std::array<double, 3>> proportions;
  SandboxOptions sandbox;

  void validate() const;
  Mechanism mechanism(double alpha) const;
  MixtureAssignment agents(std::uint64_t seed) const;
  BidState initial_bids() const;
};

Scenario parse_scenario(const std::string& json_text);
std::string scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);

enum class ModelKind { Parametric, Tabular };

struct ExperimentConfig {
  std::filesystem::path scenario_path;
  Scenario scenario;
  std::size_t train_periods = 100;
  std::size_t test_periods = 200;
  std::size_t horizon = 1000;  // N, simulated periods per fitness evaluation
  ModelKind model = ModelKind::Parametric;
  FitOptions fit;
  BucketConfig buckets;
  double epsilon = 1e-3;
  GpConfig gp;
  double delta = 0.01;
  std::vector<double> alpha_grid = default_alpha_grid();
  std::uint64_t seed = 1;
  std::size_t replicates = 20;
  std::filesystem::path output_dir = "out";

  void validate() const;
};

// Relative paths inside the config resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace mechlearn
