#include "mechlearn/revenue.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mechlearn/error.hpp"
#include "mechlearn/rng.hpp"

namespace mechlearn {

void TrajectoryConfig::validate(const BidSpace& space, std::size_t advertisers) const {
  if (horizon == 0) throw InvalidInput("trajectory: horizon must be at least 1");
  if (user_pool.empty()) throw InvalidInput("trajectory: empty user pool");
  if (initial_bids.size() != advertisers)
    throw InvalidInput("trajectory: initial bids do not match the advertiser count");
  for (double b : initial_bids)
    if (space.snap(b) != b) throw InvalidInput("trajectory: initial bid is not a bid level");
}

RevenueEstimate simulate_trajectory(const BehaviorModel& model,
                                    std::span<const AdvertiserProfile> profiles,
                                    const Mechanism& mech, const TrajectoryConfig& cfg) {
  if (model.advertiser_count() != profiles.size())
    throw InvalidInput("trajectory: model and profiles disagree on advertiser count");
  cfg.validate(model.space(), profiles.size());

  Rng rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, cfg.user_pool.size() - 1);
  RevenueEstimate est;
  est.per_period.reserve(cfg.horizon);
  if (cfg.record_bids) est.bids.reserve(cfg.horizon);

  BidState bids = cfg.initial_bids;
  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    const std::uint64_t users = cfg.user_pool[pick(rng)];
    const auto outcome = run_auction(bids, profiles, mech, users, rng);
    est.per_period.push_back(outcome.revenue);
    if (cfg.record_bids) est.bids.push_back(bids);
    bids = sample_next_bids(model, bids, outcome.kpi, rng);
  }
  est.empirical_revenue = std::accumulate(est.per_period.begin(), est.per_period.end(), 0.0) /
                          static_cast<double>(est.per_period.size());
  return est;
}

void write_trajectory(std::ostream& out, const RevenueEstimate& estimate) {
  out << "t\tbids\trevenue\n";
  const auto old_precision = out.precision(17);
  for (std::size_t t = 0; t < estimate.per_period.size(); ++t) {
    out << t + 1 << '\t';
    if (t < estimate.bids.size()) {
      const auto& b = estimate.bids[t];
      for (std::size_t i = 0; i < b.size(); ++i) out << (i ? "," : "") << b[i];
    }
    out << '\t' << estimate.per_period[t] << '\n';
  }
  out.precision(old_precision);
}

DeltaCache::DeltaCache(double delta) : delta_(delta) {
  if (!(delta >= 0.0)) throw InvalidInput("delta cache: delta must be nonnegative");
}

std::optional<RevenueEstimate> DeltaCache::find_locked(double alpha) const {
  if (entries_.empty()) return std::nullopt;
  auto above = entries_.lower_bound(alpha);
  const std::pair<const double, RevenueEstimate>* best = nullptr;
  double best_distance = 0.0;
  // Visit the lower neighbor first so that equal distances keep the smaller alpha.
  if (above != entries_.begin()) {
    const auto& below = *std::prev(above);
    best = &below;
    best_distance = alpha - below.first;
  }
  if (above != entries_.end()) {
    const double d = above->first - alpha;
    if (!best || d < best_distance) {
      best = &*above;
      best_distance = d;
    }
  }
  if (!best || best_distance > delta_) return std::nullopt;
  RevenueEstimate hit = best->second;
  hit.cache_hit = true;
  return hit;
}

std::optional<RevenueEstimate> DeltaCache::lookup(double alpha) const {
  std::lock_guard lock(mutex_);
  return find_locked(alpha);
}

void DeltaCache::insert(double alpha, RevenueEstimate estimate) {
  std::lock_guard lock(mutex_);
  estimate.cache_hit = false;
  entries_.emplace(alpha, std::move(estimate));
}

std::size_t DeltaCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::size_t DeltaCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t DeltaCache::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

RevenueEstimate cached_empirical_revenue(DeltaCache& cache, const BehaviorModel& model,
                                         std::span<const AdvertiserProfile> profiles,
                                         const Mechanism& mech, const TrajectoryConfig& cfg) {
  {
    std::lock_guard lock(cache.mutex_);
    if (auto hit = cache.find_locked(mech.alpha)) {
      ++cache.hits_;
      return *hit;
    }
    ++cache.misses_;
  }
  // Simulated outside the lock; a concurrent miss on the same alpha recomputes
  // the identical estimate and the second insert is a no-op.
  RevenueEstimate est = simulate_trajectory(model, profiles, mech, cfg);
  cache.insert(mech.alpha, est);
  return est;
}

std::vector<double> stationary_distribution(const JointTransition& q,
                                            const StationaryOptions& options,
                                            std::size_t* iterations, double* residual) {
  const std::size_t n = q.states;
  if (n == 0) throw InvalidInput("stationary distribution: empty chain");
  std::vector<double> pi(n, 0.0), next(n);
  pi[0] = 1.0;

  constexpr std::size_t kStallWindow = 1000;
  double window_start = std::numeric_limits<double>::infinity();
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      const double mass = pi[s];
      if (mass == 0.0) continue;
      const double* row = q.data.data() + s * n;
      for (std::size_t t = 0; t < n; ++t) next[t] += mass * row[t];
    }
    const double total = std::accumulate(next.begin(), next.end(), 0.0);
    r = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      next[s] /= total;
      r += std::abs(next[s] - pi[s]);
    }
    pi.swap(next);
    if (r <= options.tolerance) {
      if (iterations) *iterations = it;
      if (residual) *residual = r;
      return pi;
    }
    if (it % kStallWindow == 0) {
      if (!(r < 0.999 * window_start))
        throw ErgodicityError("power iteration stalled at L1 residual " + std::to_string(r));
      window_start = r;
    }
  }
  throw ErgodicityError("power iteration did not converge; L1 residual " + std::to_string(r));
}

StationaryResult stationary_oracle(const BehaviorModel& model,
                                   std::span<const AdvertiserProfile> profiles,
                                   const Mechanism& mech, std::span<const std::uint64_t> users,
                                   const StationaryOptions& options) {
  const auto q = joint_transition_matrix(model, profiles, mech, users, options.joint);
  StationaryResult result;
  result.distribution = stationary_distribution(q, options, &result.iterations, &result.residual);

  double mean_users = 0.0;
  for (auto n : users) mean_users += static_cast<double>(n);
  mean_users /= static_cast<double>(users.size());

  const BidSpace& space = model.space();
  BidState bids(profiles.size());
  for (std::size_t s = 0; s < q.states; ++s) {
    if (result.distribution[s] == 0.0) continue;
    const auto idx = q.decode(s);
    for (std::size_t i = 0; i < bids.size(); ++i) bids[i] = space.level(idx[i]);
    result.expected_revenue +=
        result.distribution[s] * expected_revenue(bids, profiles, mech, mean_users);
  }
  return result;
}

std::vector<VarianceRow> variance_diagnostic(const BehaviorModel& model,
                                             std::span<const AdvertiserProfile> profiles,
                                             const Mechanism& mech,
                                             const TrajectoryConfig& base,
                                             std::span<const std::size_t> horizons,
                                             std::size_t replicates, std::uint64_t seed) {
  if (replicates < 10) throw InvalidInput("variance diagnostic: needs at least 10 replicates");
  std::vector<VarianceRow> rows;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    std::vector<double> values(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
      TrajectoryConfig cfg = base;
      cfg.horizon = horizons[h];
      cfg.record_bids = false;
      cfg.seed = derive_seed(seed, h * replicates + r);
      values[r] = simulate_trajectory(model, profiles, mech, cfg).empirical_revenue;
    }
    const double mean =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(replicates);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    rows.push_back({horizons[h], mean, ss / static_cast<double>(replicates - 1)});
  }
  return rows;
}

}  // namespace mechlearn
