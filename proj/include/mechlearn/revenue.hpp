#pragma once

// Empirical revenue simulation: roll bid trajectories forward under a
// candidate mechanism with a learned behavior model, plus the stationary
// distribution oracle that the long-run average converges to.

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "mechlearn/auction.hpp"
#include "mechlearn/behavior.hpp"

namespace mechlearn {

struct TrajectoryConfig {
  std::size_t horizon = 1000;
  BidState initial_bids;
  UserPool user_pool;
  std::uint64_t seed = 0;
  bool record_bids = false;

  void validate(const BidSpace& space, std::size_t advertisers) const;
};

struct RevenueEstimate {
  double empirical_revenue = 0.0;    // mean per-period revenue
  std::vector<double> per_period;
  std::vector<BidState> bids;        // bid vector of each period, if recorded
  bool cache_hit = false;
};

RevenueEstimate simulate_trajectory(const BehaviorModel& model,
                                    std::span<const AdvertiserProfile> profiles,
                                    const Mechanism& mech, const TrajectoryConfig& cfg);

// One line per period: t, comma-separated bid vector, period revenue.
void write_trajectory(std::ostream& out, const RevenueEstimate& estimate);

// Reuses the estimate of the nearest previously simulated alpha within
// `delta`; ties go to the smaller alpha. Safe for concurrent use.
class DeltaCache {
 public:
  explicit DeltaCache(double delta);

  double delta() const { return delta_; }
  std::optional<RevenueEstimate> lookup(double alpha) const;
  // Keeps the first estimate stored under an alpha.
  void insert(double alpha, RevenueEstimate estimate);

  std::size_t size() const;
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  friend RevenueEstimate cached_empirical_revenue(DeltaCache&, const BehaviorModel&,
                                                  std::span<const AdvertiserProfile>,
                                                  const Mechanism&, const TrajectoryConfig&);
  std::optional<RevenueEstimate> find_locked(double alpha) const;

  double delta_;
  mutable std::mutex mutex_;
  std::map<double, RevenueEstimate> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

RevenueEstimate cached_empirical_revenue(DeltaCache& cache, const BehaviorModel& model,
                                         std::span<const AdvertiserProfile> profiles,
                                         const Mechanism& mech, const TrajectoryConfig& cfg);

struct StationaryOptions {
  double tolerance = 1e-10;            // L1 residual of pi Q - pi
  std::size_t max_iterations = 1000000;
  JointOptions joint;
};

struct StationaryResult {
  std::vector<double> distribution;
  double expected_revenue = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
};

// Power iteration from a point mass on state 0. Throws ErgodicityError when
// the residual stops shrinking or the iteration budget runs out.
std::vector<double> stationary_distribution(const JointTransition& q,
                                            const StationaryOptions& options = {},
                                            std::size_t* iterations = nullptr,
                                            double* residual = nullptr);

// Long-run expected per-period revenue: sum_b pi(b) * E[revenue | b].
StationaryResult stationary_oracle(const BehaviorModel& model,
                                   std::span<const AdvertiserProfile> profiles,
                                   const Mechanism& mech, std::span<const std::uint64_t> users,
                                   const StationaryOptions& options = {});

struct VarianceRow {
  std::size_t horizon = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance of R over replicates
};

std::vector<VarianceRow> variance_diagnostic(const BehaviorModel& model,
                                             std::span<const AdvertiserProfile> profiles,
                                             const Mechanism& mech,
                                             const TrajectoryConfig& base,
                                             std::span<const std::size_t> horizons,
                                             std::size_t replicates, std::uint64_t seed);

}  // namespace mechlearn
