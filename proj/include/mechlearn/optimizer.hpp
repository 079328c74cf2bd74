#pragma once

// Mechanism search over the quality-score exponent alpha: a real-coded
// genetic search driven by empirical revenue, plus the two baseline
// selectors (directly learnt on historical bids, and worst-case equilibrium
// analysis).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "mechlearn/auction.hpp"
#include "mechlearn/behavior.hpp"
#include "mechlearn/revenue.hpp"

namespace mechlearn {

struct GpConfig {
  std::size_t population = 10;
  std::size_t generations = 50;
  double crossover_rate = 0.7;
  double mutation_rate = 0.2;
  double reproduction_rate = 0.1;
  double alpha_min = 0.0;
  double alpha_max = 3.0;
  double mutation_sigma = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Individual {
  double alpha = 0.0;
  std::optional<double> fitness;
};

struct GenerationStats {
  std::size_t generation = 0;
  double best_so_far = 0.0;
  double generation_best = 0.0;
  double mean_fitness = 0.0;
  double best_alpha = 0.0;  // alpha of the best-so-far individual
};

struct GpResult {
  Individual best;
  std::vector<GenerationStats> history;
  std::vector<std::vector<double>> populations;  // alphas evaluated in each generation
  std::size_t evaluations = 0;
};

using FitnessFn = std::function<double(double alpha)>;

// Seeds may also be passed explicitly; an empty span draws the first
// generation uniformly over [alpha_min, alpha_max].
GpResult gp_optimize(const FitnessFn& fitness, const GpConfig& config,
                     std::span<const double> initial_population = {});

// Fitness = delta-cached empirical revenue of `base` with alpha replaced.
GpResult gp_optimize(const BehaviorModel& model, std::span<const AdvertiserProfile> profiles,
                     const Mechanism& base, const GpConfig& config,
                     const TrajectoryConfig& simulation, DeltaCache& cache);

// generation, best_so_far, generation_best, mean_fitness, best_alpha (tab-separated).
void write_optimizer_report(std::ostream& out, const GpResult& result);

struct GridChoice {
  double alpha = 0.0;
  std::vector<double> revenue;  // objective at each grid point
};

std::vector<double> default_alpha_grid();  // 0, 0.1, ..., 3

// Alpha maximizing mean expected revenue over the fixed historical bids.
// `users` is paired with the history when the lengths agree; otherwise its
// mean is used for every period. Ties keep the first grid point.
GridChoice dla_select(std::span<const BidState> history, std::span<const std::uint64_t> users,
                      std::span<const AdvertiserProfile> profiles, const Mechanism& base,
                      std::span<const double> alpha_grid);

// Worst-case symmetric-Nash-equilibrium revenue per user for one alpha.
double wca_revenue(std::span<const AdvertiserProfile> profiles, const Mechanism& mech);

GridChoice wca_select(std::span<const AdvertiserProfile> profiles,
                      std::span<const double> alpha_grid, const Mechanism& base);

}  // namespace mechlearn
