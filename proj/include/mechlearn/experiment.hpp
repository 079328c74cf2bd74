#pragma once

// End-to-end orchestration: synthetic log generation in the agent sandbox,
// the bilevel pipeline (behavior learning -> revenue simulation -> mechanism
// search), and head-to-head evaluation of mechanisms against responsive
// advertiser populations.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mechlearn/behavior.hpp"
#include "mechlearn/logs.hpp"
#include "mechlearn/optimizer.hpp"
#include "mechlearn/scenario.hpp"

namespace mechlearn {

struct SandboxRun {
  std::vector<AuctionLogRecord> auctions;
  std::vector<UserLogRecord> users;
  std::vector<double> revenue;  // per period
  BidState final_bids;          // state entering the period after the last one
};

// Runs `kinds` against each other for `periods` periods under quality
// exponent `alpha`, starting from `initial`.
SandboxRun run_sandbox(const Scenario& scenario, std::span<const AgentKind> kinds,
                       const BidState& initial, double alpha, std::size_t periods,
                       std::uint64_t seed);

struct SyntheticLog {
  MixtureAssignment agents;
  SandboxRun run;
};

// Training data: the scenario's population under standard GSP (alpha = 1).
SyntheticLog gen_synthetic(const Scenario& scenario, std::size_t periods, std::uint64_t seed);

BehaviorModel learn_model(const ExperimentConfig& config,
                          const std::vector<AuctionLogRecord>& auctions);

struct BoaResult {
  double alpha = 1.0;
  double fitness = 0.0;
  bool flat_fitness = false;  // max - min evaluated fitness < 1e-9
  GpResult gp;
  std::size_t simulations = 0;
  std::size_t cache_hits = 0;
};

// `fitness_override` replaces the simulated empirical revenue (test hook).
BoaResult run_boa(const ExperimentConfig& config, const BehaviorModel& model,
                  const std::vector<AuctionLogRecord>& auctions,
                  const std::vector<UserLogRecord>& users, std::uint64_t seed,
                  const FitnessFn* fitness_override = nullptr);

void write_boa_result(std::ostream& out, const BoaResult& result);

struct LabeledMechanism {
  std::string label;
  double alpha = 1.0;
};

struct ReplicateContext {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  SyntheticLog training;
};

struct ReplicateResult {
  std::uint64_t seed = 0;
  MixtureAssignment agents;
  std::vector<double> alphas;                 // per label
  std::vector<std::vector<double>> revenue;   // per label, per test period
  std::vector<double> mean_revenue;           // per label
};

struct LabelSummary {
  std::string label;
  double median = 0.0;
  double mean = 0.0;
  // Paired against the first label: replicates where the first label earned
  // strictly more / strictly less / the same.
  std::size_t reference_wins = 0;
  std::size_t reference_losses = 0;
  std::size_t ties = 0;
  double median_difference = 0.0;  // median of (reference - this)
  double p_value = 1.0;            // one-sided sign test, reference > this
};

struct EvaluationReport {
  std::vector<std::string> labels;
  std::vector<ReplicateResult> replicates;
  std::vector<std::vector<double>> cumulative_average;  // per label, per period
  std::vector<LabelSummary> summaries;
};

using AlphaChooser = std::function<std::vector<double>(const ReplicateContext&)>;

// For each replicate: draw the agent mixture, generate train_periods of GSP
// history, pick one alpha per label, then run every mechanism for
// test_periods from the end-of-training bids with identical randomness.
EvaluationReport evaluate_replicates(const ExperimentConfig& config,
                                     const std::vector<std::string>& labels,
                                     const AlphaChooser& choose);

EvaluationReport evaluate_mechanisms(const ExperimentConfig& config,
                                     std::span<const LabeledMechanism> mechanisms);

// BOA vs GSP (alpha = 1) vs WCA vs DLA, each chosen per replicate from that
// replicate's training history.
EvaluationReport compare_mechanisms(const ExperimentConfig& config);

// P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
double sign_test_p_value(std::size_t wins, std::size_t losses);

double median(std::vector<double> values);

void write_revenue_table(std::ostream& out, const EvaluationReport& report);
void write_summary(std::ostream& out, const EvaluationReport& report);
void write_replicates(std::ostream& out, const EvaluationReport& report);

}  // namespace mechlearn
