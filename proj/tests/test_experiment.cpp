#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mechlearn/error.hpp"
#include "mechlearn/experiment.hpp"
#include "mechlearn/revenue.hpp"

using namespace mechlearn;

namespace {

ExperimentConfig small_config(const char* name) {
  auto c = load_config(std::filesystem::path(MECHLEARN_CONFIG_DIR) / name);
  c.train_periods = 30;
  c.test_periods = 40;
  c.horizon = 100;
  c.replicates = 3;
  c.gp.generations = 5;
  c.scenario.sandbox.am_draws = 20;
  return c;
}

std::string auction_bytes(const SyntheticLog& log) {
  std::stringstream ss;
  write_auction_log(ss, log.run.auctions);
  write_user_log(ss, log.run.users);
  return ss.str();
}

}  // namespace

TEST(gen_synthetic, stable_population_keeps_bids) {
  auto c = small_config("sbm.json");
  auto log = gen_synthetic(c.scenario, 25, 3);
  auto history = bid_history(log.run.auctions, 25);
  for (const auto& bids : history) EXPECT_EQ(bids, c.scenario.initial_bids());
}

TEST(gen_synthetic, one_period_one_record_each) {
  auto c = small_config("mixture.json");
  auto log = gen_synthetic(c.scenario, 1, 3);
  EXPECT_EQ(log.run.auctions.size(), c.scenario.advertisers.size());
  EXPECT_EQ(log.run.users.size(), 1u);
}

TEST(gen_synthetic, deterministic_bytes_and_round_trip) {
  auto c = small_config("mixture.json");
  auto a = gen_synthetic(c.scenario, 20, 11);
  auto b = gen_synthetic(c.scenario, 20, 11);
  EXPECT_EQ(auction_bytes(a), auction_bytes(b));
  EXPECT_NE(auction_bytes(a), auction_bytes(gen_synthetic(c.scenario, 20, 12)));

  std::stringstream auctions, users;
  write_auction_log(auctions, a.run.auctions);
  write_user_log(users, a.run.users);
  EXPECT_EQ(read_auction_log(auctions), a.run.auctions);
  EXPECT_EQ(read_user_log(users), a.run.users);
}

TEST(gen_synthetic, bids_within_space_and_users_within_range) {
  auto c = small_config("mixture.json");
  auto log = gen_synthetic(c.scenario, 40, 2);
  for (const auto& r : log.run.auctions) EXPECT_EQ(c.scenario.space.snap(r.bid), r.bid);
  for (const auto& u : log.run.users) {
    EXPECT_GE(u.users, c.scenario.users_min);
    EXPECT_LE(u.users, c.scenario.users_max);
  }
}

TEST(run_boa, flat_fitness_flagged) {
  auto c = small_config("flat.json");
  auto log = gen_synthetic(c.scenario, c.train_periods, 1);
  auto model = learn_model(c, log.run.auctions);
  auto result = run_boa(c, model, log.run.auctions, log.run.users, 1);
  EXPECT_TRUE(result.flat_fitness);
}

TEST(run_boa, stub_fitness_hook) {
  auto c = small_config("mixture.json");
  c.gp.generations = 50;
  auto log = gen_synthetic(c.scenario, c.train_periods, 1);
  auto model = learn_model(c, log.run.auctions);
  FitnessFn stub = [](double a) { return -(a - 1.3) * (a - 1.3); };
  auto result = run_boa(c, model, log.run.auctions, log.run.users, 1, &stub);
  EXPECT_NEAR(result.alpha, 1.3, 0.05);
  EXPECT_FALSE(result.flat_fitness);
  EXPECT_EQ(result.simulations, 0u);
}

TEST(run_boa, deterministic_report) {
  auto c = small_config("mixture.json");
  auto log = gen_synthetic(c.scenario, c.train_periods, 4);
  auto model = learn_model(c, log.run.auctions);
  auto report = [&] {
    auto r = run_boa(c, model, log.run.auctions, log.run.users, 4);
    std::stringstream ss;
    write_optimizer_report(ss, r.gp);
    write_boa_result(ss, r);
    return ss.str();
  };
  EXPECT_EQ(report(), report());
}

TEST(learn_model, mismatched_log_rejected) {
  auto c = small_config("mixture.json");
  std::vector<AuctionLogRecord> records{{1, 0, 1.0, {}}, {2, 0, 1.0, {}}, {3, 0, 1.0, {}}};
  EXPECT_THROW(learn_model(c, records), DataError);
}

TEST(evaluate_mechanisms, labels_do_not_change_revenue) {
  auto c = small_config("mixture.json");
  std::vector<LabeledMechanism> mechanisms{{"A", 0.8}, {"B", 0.8}, {"C", 1.0}};
  auto report = evaluate_mechanisms(c, mechanisms);
  ASSERT_EQ(report.replicates.size(), 3u);
  for (const auto& rep : report.replicates) EXPECT_EQ(rep.revenue[0], rep.revenue[1]);
  EXPECT_EQ(report.cumulative_average[0], report.cumulative_average[1]);
  EXPECT_EQ(report.summaries[1].ties, 3u);
}

TEST(evaluate_mechanisms, period_accounting) {
  auto c = small_config("mixture.json");
  std::vector<LabeledMechanism> mechanisms{{"GSP", 1.0}};
  auto report = evaluate_mechanisms(c, mechanisms);
  for (std::size_t r = 0; r < report.replicates.size(); ++r) {
    const auto& rep = report.replicates[r];
    auto training = gen_synthetic(c.scenario, c.train_periods, rep.seed);
    auto run = run_sandbox(c.scenario, rep.agents.kinds, training.run.final_bids, 1.0,
                           c.test_periods, derive_seed(rep.seed, 0x7465));
    EXPECT_EQ(run.revenue, rep.revenue[0]);
    double total = 0.0;
    for (double v : run.revenue) total += v;
    EXPECT_DOUBLE_EQ(rep.mean_revenue[0], total / c.test_periods);
  }
}

TEST(evaluate_mechanisms, stable_population_dla_is_grid_optimum) {
  auto c = small_config("sbm.json");
  auto report = compare_mechanisms(c);
  const auto base = c.scenario.mechanism(1.0);
  const auto bids = c.scenario.initial_bids();
  std::size_t best = 0;
  std::vector<double> revenue;
  for (double alpha : c.alpha_grid) {
    Mechanism m = base;
    m.alpha = alpha;
    revenue.push_back(expected_revenue(bids, c.scenario.advertisers, m, 1.0));
  }
  for (std::size_t g = 1; g < revenue.size(); ++g)
    if (revenue[g] > revenue[best]) best = g;
  for (const auto& rep : report.replicates) EXPECT_EQ(rep.alphas[3], c.alpha_grid[best]);
}

TEST(evaluate_mechanisms, cumulative_average_stabilizes) {
  auto c = small_config("mixture.json");
  c.test_periods = 200;
  c.replicates = 4;
  std::vector<LabeledMechanism> mechanisms{{"GSP", 1.0}, {"squashed", 0.5}};
  auto report = evaluate_mechanisms(c, mechanisms);
  for (const auto& series : report.cumulative_average) {
    auto last = std::vector<double>(series.begin() + 150, series.end());
    const auto [lo, hi] = std::minmax_element(last.begin(), last.end());
    double mean = 0.0;
    for (double v : last) mean += v;
    mean /= last.size();
    EXPECT_LT(*hi - *lo, 0.05 * mean);
  }
}

TEST(evaluate_mechanisms, table_layout) {
  auto c = small_config("mixture.json");
  std::vector<LabeledMechanism> mechanisms{{"x", 1.0}, {"y", 2.0}};
  auto report = evaluate_mechanisms(c, mechanisms);
  std::stringstream ss;
  write_revenue_table(ss, report);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "period\tx\ty");
  int rows = 0;
  while (std::getline(ss, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 2);
  }
  EXPECT_EQ(rows, 40);
}

TEST(sign_test, binomial_tail) {
  EXPECT_DOUBLE_EQ(sign_test_p_value(0, 0), 1.0);
  EXPECT_NEAR(sign_test_p_value(10, 0), 1.0 / 1024, 1e-12);
  EXPECT_NEAR(sign_test_p_value(15, 5), 21700.0 / 1048576.0, 1e-12);
  EXPECT_NEAR(sign_test_p_value(0, 6), 1.0, 1e-12);
}

TEST(median, odd_and_even) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_EQ(median({}), 0.0);
}
