#include "mechlearn/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mechlearn/agents.hpp"
#include "mechlearn/error.hpp"
#include "mechlearn/rng.hpp"

namespace mechlearn {

void GpConfig::validate() const {
  if (population < 2) throw InvalidInput("gp: population must be at least 2");
  if (generations < 1) throw InvalidInput("gp: needs at least one generation");
  for (double r : {crossover_rate, mutation_rate, reproduction_rate})
    if (!(r >= 0.0)) throw InvalidInput("gp: negative operator rate");
  if (std::abs(crossover_rate + mutation_rate + reproduction_rate - 1.0) > 1e-9)
    throw InvalidInput("gp: operator rates must sum to 1");
  if (!(alpha_max > alpha_min)) throw InvalidInput("gp: alpha range is degenerate");
  if (!(mutation_sigma >= 0.0)) throw InvalidInput("gp: mutation sigma must be nonnegative");
}

namespace {

std::size_t roulette(std::span<const double> fitness, Rng& rng) {
  const double lo = *std::min_element(fitness.begin(), fitness.end());
  double total = 0.0;
  for (double f : fitness) total += f - lo;
  if (!(total > 0.0))
    return std::min(fitness.size() - 1,
                    static_cast<std::size_t>(uniform01(rng) * static_cast<double>(fitness.size())));
  const double target = uniform01(rng) * total;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    cumulative += fitness[i] - lo;
    if (target < cumulative) return i;
  }
  return fitness.size() - 1;
}

}  // namespace

GpResult gp_optimize(const FitnessFn& fitness, const GpConfig& config,
                     std::span<const double> initial_population) {
  config.validate();
  Rng rng(config.seed);
  auto clamp = [&](double a) { return std::clamp(a, config.alpha_min, config.alpha_max); };

  std::vector<double> alphas(config.population);
  for (std::size_t k = 0; k < alphas.size(); ++k)
    alphas[k] = k < initial_population.size()
                    ? clamp(initial_population[k])
                    : config.alpha_min + uniform01(rng) * (config.alpha_max - config.alpha_min);

  // Offspring per generation besides the elite, split by operator rate.
  const auto split = largest_remainder(
      {config.crossover_rate, config.mutation_rate, config.reproduction_rate},
      config.population - 1);

  GpResult result;
  std::vector<double> scores(config.population);
  for (std::size_t g = 0; g < config.generations; ++g) {
    result.populations.push_back(alphas);
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      scores[k] = fitness(alphas[k]);
      ++result.evaluations;
      if (!result.best.fitness || scores[k] > *result.best.fitness)
        result.best = Individual{alphas[k], scores[k]};
    }
    GenerationStats stats;
    stats.generation = g + 1;
    stats.best_so_far = *result.best.fitness;
    stats.generation_best = *std::max_element(scores.begin(), scores.end());
    stats.mean_fitness =
        std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    stats.best_alpha = result.best.alpha;
    result.history.push_back(stats);
    if (g + 1 == config.generations) break;

    std::vector<double> next;
    next.reserve(config.population);
    next.push_back(result.best.alpha);  // elitism of one
    for (std::size_t k = 0; k < split[0]; ++k) {
      const double a = alphas[roulette(scores, rng)];
      const double b = alphas[roulette(scores, rng)];
      next.push_back(clamp(b + uniform01(rng) * (a - b)));
    }
    for (std::size_t k = 0; k < split[1]; ++k) {
      const double a = alphas[roulette(scores, rng)];
      if (config.mutation_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, config.mutation_sigma);
        next.push_back(clamp(a + noise(rng)));
      } else {
        next.push_back(a);
      }
    }
    for (std::size_t k = 0; k < split[2]; ++k) next.push_back(alphas[roulette(scores, rng)]);
    alphas.swap(next);
  }
  return result;
}

GpResult gp_optimize(const BehaviorModel& model, std::span<const AdvertiserProfile> profiles,
                     const Mechanism& base, const GpConfig& config,
                     const TrajectoryConfig& simulation, DeltaCache& cache) {
  auto fitness = [&](double alpha) {
    Mechanism mech = base;
    mech.alpha = alpha;
    return cached_empirical_revenue(cache, model, profiles, mech, simulation).empirical_revenue;
  };
  return gp_optimize(fitness, config);
}

void write_optimizer_report(std::ostream& out, const GpResult& result) {
  const auto old_precision = out.precision(17);
  out << "generation\tbest_so_far\tgeneration_best\tmean_fitness\tbest_alpha\n";
  for (const auto& s : result.history)
    out << s.generation << '\t' << s.best_so_far << '\t' << s.generation_best << '\t'
        << s.mean_fitness << '\t' << s.best_alpha << '\n';
  out.precision(old_precision);
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 30; ++k) grid.push_back(k / 10.0);
  return grid;
}

namespace {

std::size_t first_argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best] + 1e-12 * std::max(1.0, std::abs(values[best]))) best = k;
  return best;
}

}  // namespace

GridChoice dla_select(std::span<const BidState> history, std::span<const std::uint64_t> users,
                      std::span<const AdvertiserProfile> profiles, const Mechanism& base,
                      std::span<const double> alpha_grid) {
  if (alpha_grid.empty()) throw InvalidInput("dla: empty alpha grid");
  if (history.empty()) throw InvalidInput("dla: empty bid history");
  if (users.empty()) throw InvalidInput("dla: empty user pool");
  const bool paired = users.size() == history.size();
  const double mean_users =
      std::accumulate(users.begin(), users.end(), 0.0,
                      [](double acc, std::uint64_t n) { return acc + static_cast<double>(n); }) /
      static_cast<double>(users.size());

  GridChoice choice;
  for (double alpha : alpha_grid) {
    Mechanism mech = base;
    mech.alpha = alpha;
    double total = 0.0;
    for (std::size_t t = 0; t < history.size(); ++t)
      total += expected_revenue(history[t], profiles, mech,
                                paired ? static_cast<double>(users[t]) : mean_users);
    choice.revenue.push_back(total / static_cast<double>(history.size()));
  }
  choice.alpha = alpha_grid[first_argmax(choice.revenue)];
  return choice;
}

double wca_revenue(std::span<const AdvertiserProfile> profiles, const Mechanism& mech) {
  mech.validate();
  validate_profiles(profiles);
  const std::size_t m = profiles.size();
  const std::size_t slots = shown_count(m, mech);
  const auto& beta = mech.position_discounts;

  std::vector<double> f(m), value_score(m);
  for (std::size_t i = 0; i < m; ++i) {
    f[i] = mech.quality(profiles[i].ctr);
    value_score[i] = f[i] * profiles[i].valuation;
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return value_score[a] > value_score[b]; });

  // score[j] = f * b of the ad at position j in the lower-envelope equilibrium.
  std::vector<double> score(slots + 1, 0.0);
  score[slots] = (m > slots ? f[order[slots]] : f[order[slots - 1]]) * mech.last_slot_price;
  for (std::size_t j = slots - 1; j >= 1; --j) {
    const std::size_t ad = order[j];
    score[j] = (value_score[ad] * (beta[j - 1] - beta[j]) + score[j + 1] * beta[j]) / beta[j - 1];
  }

  double revenue = 0.0;
  for (std::size_t j = 0; j < slots; ++j) {
    const std::size_t ad = order[j];
    if (!(f[ad] > 0.0)) throw DegenerateScore("wca: zero quality score in a shown slot");
    revenue += profiles[ad].ctr * beta[j] * (score[j + 1] / f[ad]);
  }
  return revenue;
}

GridChoice wca_select(std::span<const AdvertiserProfile> profiles,
                      std::span<const double> alpha_grid, const Mechanism& base) {
  if (alpha_grid.empty()) throw InvalidInput("wca: empty alpha grid");
  GridChoice choice;
  for (double alpha : alpha_grid) {
    Mechanism mech = base;
    mech.alpha = alpha;
    choice.revenue.push_back(wca_revenue(profiles, mech));
  }
  choice.alpha = alpha_grid[first_argmax(choice.revenue)];
  return choice;
}

}  // namespace mechlearn
