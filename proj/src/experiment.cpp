#include "mechlearn/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "mechlearn/error.hpp"
#include "mechlearn/revenue.hpp"
#include "mechlearn/rng.hpp"

namespace mechlearn {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kUsersStream = 0x7573;
constexpr std::uint64_t kClicksStream = 0x636c;
constexpr std::uint64_t kAgentsStream = 0x6167;
constexpr std::uint64_t kErsStream = 0x657273;
constexpr std::uint64_t kGpStream = 0x6770;
constexpr std::uint64_t kTrainStream = 0x7472;
constexpr std::uint64_t kTestStream = 0x7465;
constexpr std::uint64_t kMixtureStream = 0x6d78;

}  // namespace

SandboxRun run_sandbox(const Scenario& scenario, std::span<const AgentKind> kinds,
                       const BidState& initial, double alpha, std::size_t periods,
                       std::uint64_t seed) {
  const Mechanism mech = scenario.mechanism(alpha);
  const auto& profiles = scenario.advertisers;
  Rng user_rng(derive_seed(seed, kUsersStream));
  Rng click_rng(derive_seed(seed, kClicksStream));
  std::uniform_int_distribution<std::uint64_t> users_dist(scenario.users_min, scenario.users_max);

  SandboxRun run;
  run.revenue.reserve(periods);
  BidState bids = initial;
  for (std::size_t t = 1; t <= periods; ++t) {
    const std::uint64_t users = users_dist(user_rng);
    const auto outcome = run_auction(bids, profiles, mech, users, click_rng);
    run.revenue.push_back(outcome.revenue);
    run.users.push_back({t, users});
    for (std::size_t i = 0; i < profiles.size(); ++i)
      run.auctions.push_back({t, i, bids[i], outcome.kpi[i]});
    bids = step_population(kinds, bids, profiles, mech, scenario.space, scenario.sandbox,
                           derive_seed(derive_seed(seed, kAgentsStream), t));
  }
  run.final_bids = bids;
  return run;
}

SyntheticLog gen_synthetic(const Scenario& scenario, std::size_t periods, std::uint64_t seed) {
  scenario.validate();
  SyntheticLog log;
  log.agents = scenario.agents(derive_seed(seed, kMixtureStream));
  log.run = run_sandbox(scenario, log.agents.kinds, scenario.initial_bids(), 1.0, periods,
                        derive_seed(seed, kTrainStream));
  return log;
}

BehaviorModel learn_model(const ExperimentConfig& config,
                          const std::vector<AuctionLogRecord>& auctions) {
  const std::size_t periods = std::min(config.train_periods, log_periods(auctions));
  if (log_advertisers(auctions) != config.scenario.advertisers.size())
    throw DataError("auction log advertiser count does not match the scenario");
  const auto histories = transition_histories(auctions, periods);
  if (config.model == ModelKind::Tabular)
    return BehaviorModel(
        estimate_tabular(histories, config.scenario.space, config.buckets, config.epsilon));
  return BehaviorModel(fit_parametric(histories, config.scenario.space, config.fit));
}

BoaResult run_boa(const ExperimentConfig& config, const BehaviorModel& model,
                  const std::vector<AuctionLogRecord>& auctions,
                  const std::vector<UserLogRecord>& users, std::uint64_t seed,
                  const FitnessFn* fitness_override) {
  const std::size_t periods = std::min(config.train_periods, log_periods(auctions));
  const auto history = bid_history(auctions, periods);

  TrajectoryConfig ers;
  ers.horizon = config.horizon;
  ers.initial_bids = history.back();
  for (double& b : ers.initial_bids) b = config.scenario.space.snap(b);
  ers.user_pool = user_pool(users, periods);
  ers.seed = derive_seed(seed, kErsStream);

  GpConfig gp = config.gp;
  gp.seed = derive_seed(seed, kGpStream);

  DeltaCache cache(config.delta);
  const Mechanism base = config.scenario.mechanism(1.0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  FitnessFn fitness = [&](double alpha) {
    double value;
    if (fitness_override) {
      value = (*fitness_override)(alpha);
    } else {
      Mechanism mech = base;
      mech.alpha = alpha;
      value = cached_empirical_revenue(cache, model, config.scenario.advertisers, mech, ers)
                  .empirical_revenue;
    }
    lo = std::min(lo, value);
    hi = std::max(hi, value);
    return value;
  };

  BoaResult result;
  result.gp = gp_optimize(fitness, gp);
  result.alpha = result.gp.best.alpha;
  result.fitness = *result.gp.best.fitness;
  result.flat_fitness = hi - lo < 1e-9;
  result.simulations = cache.misses();
  result.cache_hits = cache.hits();
  return result;
}

void write_boa_result(std::ostream& out, const BoaResult& r) {
  nlohmann::json j{{"alpha", r.alpha},
                   {"fitness", r.fitness},
                   {"flat_fitness", r.flat_fitness},
                   {"evaluations", r.gp.evaluations},
                   {"simulations", r.simulations},
                   {"cache_hits", r.cache_hits}};
  out << j.dump(2) << '\n';
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double sign_test_p_value(std::size_t wins, std::size_t losses) {
  const std::size_t n = wins + losses;
  if (n == 0) return 1.0;
  double p = 0.0;
  for (std::size_t k = wins; k <= n; ++k)
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                  static_cast<double>(n) * std::log(2.0));
  return std::min(1.0, p);
}

EvaluationReport evaluate_replicates(const ExperimentConfig& config,
                                     const std::vector<std::string>& labels,
                                     const AlphaChooser& choose) {
  if (labels.empty()) throw ConfigError("evaluation: no mechanisms to compare");
  EvaluationReport report;
  report.labels = labels;
  const std::size_t k = labels.size();
  report.cumulative_average.assign(k, std::vector<double>(config.test_periods, 0.0));

  const std::size_t n = config.replicates;
  std::vector<ReplicateResult> reps(n);
  std::vector<std::exception_ptr> errors(n);
  auto run_one = [&](std::size_t r) {
    ReplicateContext ctx;
    ctx.index = r;
    ctx.seed = derive_seed(config.seed, r);
    ctx.training = gen_synthetic(config.scenario, config.train_periods, ctx.seed);

    ReplicateResult& rep = reps[r];
    rep.seed = ctx.seed;
    rep.agents = ctx.training.agents;
    rep.alphas = choose(ctx);
    if (rep.alphas.size() != k) throw ConfigError("evaluation: one alpha per label required");
    for (std::size_t l = 0; l < k; ++l) {
      auto run = run_sandbox(config.scenario, rep.agents.kinds, ctx.training.run.final_bids,
                             rep.alphas[l], config.test_periods,
                             derive_seed(ctx.seed, kTestStream));
      rep.mean_revenue.push_back(std::accumulate(run.revenue.begin(), run.revenue.end(), 0.0) /
                                 static_cast<double>(run.revenue.size()));
      rep.revenue.push_back(std::move(run.revenue));
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < n; r = next++) {
      try {
        run_one(r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < threads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (auto& rep : reps) {
    for (std::size_t l = 0; l < k; ++l) {
      double running = 0.0;
      for (std::size_t t = 0; t < rep.revenue[l].size(); ++t) {
        running += rep.revenue[l][t];
        report.cumulative_average[l][t] += running / static_cast<double>(t + 1);
      }
    }
    report.replicates.push_back(std::move(rep));
  }
  for (auto& series : report.cumulative_average)
    for (double& v : series) v /= static_cast<double>(config.replicates);

  for (std::size_t l = 0; l < k; ++l) {
    LabelSummary s;
    s.label = labels[l];
    std::vector<double> means, diffs;
    for (const auto& rep : report.replicates) {
      means.push_back(rep.mean_revenue[l]);
      const double d = rep.mean_revenue[0] - rep.mean_revenue[l];
      diffs.push_back(d);
      if (d > 0.0) ++s.reference_wins;
      else if (d < 0.0) ++s.reference_losses;
      else ++s.ties;
    }
    s.median = median(means);
    s.mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    s.median_difference = median(diffs);
    s.p_value = sign_test_p_value(s.reference_wins, s.reference_losses);
    report.summaries.push_back(s);
  }
  return report;
}

EvaluationReport evaluate_mechanisms(const ExperimentConfig& config,
                                     std::span<const LabeledMechanism> mechanisms) {
  std::vector<std::string> labels;
  std::vector<double> alphas;
  for (const auto& m : mechanisms) {
    labels.push_back(m.label);
    alphas.push_back(m.alpha);
  }
  return evaluate_replicates(config, labels, [&](const ReplicateContext&) { return alphas; });
}

EvaluationReport compare_mechanisms(const ExperimentConfig& config) {
  const Mechanism base = config.scenario.mechanism(1.0);
  const double wca = wca_select(config.scenario.advertisers, config.alpha_grid, base).alpha;
  return evaluate_replicates(
      config, {"BOA", "GSP", "WCA", "DLA"}, [&](const ReplicateContext& ctx) {
        const auto& log = ctx.training.run;
        const auto model = learn_model(config, log.auctions);
        const double boa = run_boa(config, model, log.auctions, log.users, ctx.seed).alpha;
        const std::size_t periods = log_periods(log.auctions);
        const double dla = dla_select(bid_history(log.auctions, periods),
                                      user_pool(log.users, periods), config.scenario.advertisers,
                                      base, config.alpha_grid)
                               .alpha;
        return std::vector<double>{boa, 1.0, wca, dla};
      });
}

void write_revenue_table(std::ostream& out, const EvaluationReport& report) {
  const auto old_precision = out.precision(10);
  out << "period";
  for (const auto& l : report.labels) out << '\t' << l;
  out << '\n';
  const std::size_t periods =
      report.cumulative_average.empty() ? 0 : report.cumulative_average.front().size();
  for (std::size_t t = 0; t < periods; ++t) {
    out << t + 1;
    for (const auto& series : report.cumulative_average) out << '\t' << series[t];
    out << '\n';
  }
  out.precision(old_precision);
}

void write_summary(std::ostream& out, const EvaluationReport& report) {
  const auto old_precision = out.precision(10);
  out << "mechanism\tmedian_revenue\tmean_revenue\treference_wins\treference_losses\tties\t"
         "median_difference\tsign_test_p\n";
  for (const auto& s : report.summaries)
    out << s.label << '\t' << s.median << '\t' << s.mean << '\t' << s.reference_wins << '\t'
        << s.reference_losses << '\t' << s.ties << '\t' << s.median_difference << '\t'
        << s.p_value << '\n';
  out.precision(old_precision);
}

void write_replicates(std::ostream& out, const EvaluationReport& report) {
  const auto old_precision = out.precision(10);
  out << "replicate\tseed\tbrm\tam\tsbm";
  for (const auto& l : report.labels) out << "\talpha_" << l;
  for (const auto& l : report.labels) out << "\trevenue_" << l;
  out << '\n';
  for (std::size_t r = 0; r < report.replicates.size(); ++r) {
    const auto& rep = report.replicates[r];
    std::array<std::size_t, 3> counts{};
    for (auto kind : rep.agents.kinds) ++counts[static_cast<std::size_t>(kind)];
    out << r << '\t' << rep.seed << '\t' << counts[0] << '\t' << counts[1] << '\t' << counts[2];
    for (double a : rep.alphas) out << '\t' << a;
    for (double v : rep.mean_revenue) out << '\t' << v;
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace mechlearn
