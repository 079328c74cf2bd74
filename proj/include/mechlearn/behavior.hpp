#pragma once

// Markov model of how an advertiser moves its bid given its own last bid and
// the KPI report it received for that period.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "mechlearn/auction.hpp"
#include "mechlearn/rng.hpp"

namespace mechlearn {

// One logged step (b_i^t, kpi_i^t, b_i^{t+1}) for a single advertiser.
struct BidTransition {
  double bid = 0.0;
  KpiReport kpi;
  double next_bid = 0.0;
};

using AdvertiserHistory = std::vector<BidTransition>;

// Quantile bin edges for each KPI signal. A value falls in the bin given by
// the number of edges strictly below it.
struct KpiBuckets {
  std::vector<double> impressions;
  std::vector<double> clicks;
  std::vector<double> cpc;

  std::size_t bucket_count() const;
  std::size_t bucket(const KpiReport& kpi) const;

  // Edges at the 1/bins, ..., (bins-1)/bins sample quantiles.
  static KpiBuckets from_quantiles(std::span<const KpiReport> reports, std::size_t bins);
};

bool operator==(const KpiBuckets& a, const KpiBuckets& b);

struct BucketConfig {
  std::size_t bins_per_signal = 3;
};

class TabularTransition {
 public:
  TabularTransition() = default;
  // All rows start uniform.
  TabularTransition(BidSpace space, std::vector<KpiBuckets> buckets, double epsilon);

  const BidSpace& space() const { return space_; }
  std::size_t advertiser_count() const { return buckets_.size(); }
  std::size_t levels() const { return levels_; }
  double epsilon() const { return epsilon_; }
  const KpiBuckets& buckets(std::size_t advertiser) const { return buckets_[advertiser]; }

  std::span<const double> row(std::size_t advertiser, std::size_t bucket,
                              std::size_t from) const;
  // Stores `probabilities` verbatim; callers are responsible for stochasticity.
  void set_row(std::size_t advertiser, std::size_t bucket, std::size_t from,
               std::span<const double> probabilities);

 private:
  std::size_t offset(std::size_t bucket, std::size_t from) const;

  BidSpace space_;
  std::size_t levels_ = 0;
  double epsilon_ = 0.0;
  std::vector<KpiBuckets> buckets_;
  std::vector<std::vector<double>> tables_;  // per advertiser: bucket x from x to
};

inline constexpr std::size_t kFeatureCount = 5;
using Features = std::array<double, kFeatureCount>;

// z = (bid, impressions, clicks, avg_cpc, 1)
Features bid_features(double bid, const KpiReport& kpi);

struct ParametricTransition {
  BidSpace space;
  double bandwidth = 1.0;
  std::vector<double> bandwidths;   // per advertiser; empty means `bandwidth` for all
  std::vector<Features> weights;    // per advertiser
  std::vector<double> final_loss;   // per advertiser, mean squared residual

  std::size_t advertiser_count() const { return weights.size(); }
  double mean(std::size_t advertiser, double bid, const KpiReport& kpi) const;
  double bandwidth_of(std::size_t advertiser) const {
    return bandwidths.empty() ? bandwidth : bandwidths[advertiser];
  }
};

// Discrete truncated Gaussian over the levels of `space`, proportional to
// exp(-(level - mean)^2 / bandwidth^2).
std::vector<double> truncated_gaussian_row(const BidSpace& space, double mean, double bandwidth);

class BehaviorModel {
 public:
  BehaviorModel(TabularTransition tabular);
  BehaviorModel(ParametricTransition parametric);

  const BidSpace& space() const;
  std::size_t advertiser_count() const;
  bool is_parametric() const { return std::holds_alternative<ParametricTransition>(impl_); }
  const TabularTransition& tabular() const { return std::get<TabularTransition>(impl_); }
  const ParametricTransition& parametric() const { return std::get<ParametricTransition>(impl_); }

  void row_into(std::size_t advertiser, std::size_t from_index, const KpiReport& kpi,
                std::span<double> out) const;

 private:
  std::variant<TabularTransition, ParametricTransition> impl_;
};

TabularTransition estimate_tabular(std::span<const AdvertiserHistory> histories,
                                   const BidSpace& space, const BucketConfig& config,
                                   double epsilon = 1e-3);

struct FitOptions {
  double learning_rate = 0.1;
  std::size_t iterations = 500;
  double bandwidth = 1.0;
  // Per advertiser h = sqrt(2 * residual MSE), the Gaussian whose variance
  // matches the fit, floored at a quarter bid unit.
  bool fitted_bandwidth = false;
};

struct LeastSquaresFit {
  Features weights{};
  double loss = 0.0;
};

// Gradient descent on mean((<w, z> - y)^2). Non-intercept features are
// standardized internally; the returned weights are in the original units.
LeastSquaresFit fit_least_squares(std::span<const Features> features,
                                  std::span<const double> targets, double learning_rate,
                                  std::size_t iterations);

ParametricTransition fit_parametric(std::span<const AdvertiserHistory> histories,
                                    const BidSpace& space, const FitOptions& options = {});

std::vector<double> transition_row(const BehaviorModel& model, std::size_t advertiser,
                                   double current_bid, const KpiReport& kpi);

BidState sample_next_bids(const BehaviorModel& model, std::span<const double> current,
                          std::span<const KpiReport> kpis, Rng& rng);
BidState sample_next_bids(const BehaviorModel& model, std::span<const double> current,
                          std::span<const KpiReport> kpis, std::uint64_t seed);

// Dense joint kernel over {B}^m. State index = sum_i level_i * L^i.
struct JointTransition {
  std::size_t advertisers = 0;
  std::size_t levels = 0;
  std::size_t states = 0;
  std::vector<double> data;  // row-major states x states

  double at(std::size_t from, std::size_t to) const { return data[from * states + to]; }
  std::span<const double> row(std::size_t from) const {
    return {data.data() + from * states, states};
  }
  std::size_t encode(std::span<const std::size_t> level_indices) const;
  std::vector<std::size_t> decode(std::size_t state) const;
};

struct JointOptions {
  // 0 takes the exact expectation over the user pool and binomial clicks;
  // otherwise averages this many sampled periods per state.
  std::size_t num_user_samples = 0;
  std::uint64_t seed = 0;
  std::size_t state_cap = 10000;
};

std::size_t joint_state_count(std::size_t advertisers, std::size_t levels, std::size_t cap);

JointTransition joint_transition_matrix(const BehaviorModel& model,
                                        std::span<const AdvertiserProfile> profiles,
                                        const Mechanism& mech, std::span<const std::uint64_t> users,
                                        const JointOptions& options = {});

}  // namespace mechlearn
