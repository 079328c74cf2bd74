#pragma once

// Generalized second price auction mechanics over a quality-score family
// f(ctr) = ctr^alpha.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mechlearn/rng.hpp"

namespace mechlearn {

// Finite, evenly spaced set of admissible bids {min_bid, min_bid + unit, ...}.
struct BidSpace {
  double min_bid = 0.0;
  double max_bid = 1.0;
  double unit = 1.0;

  void validate() const;
  std::size_t level_count() const;
  double level(std::size_t k) const { return min_bid + unit * static_cast<double>(k); }
  std::vector<double> levels() const;
  // Nearest level, clamped into range.
  std::size_t index_of(double bid) const;
  double snap(double bid) const { return level(index_of(bid)); }
  // Largest level not above `bid`; min_bid when bid is below the range.
  std::size_t floor_index(double bid) const;
};

bool operator==(const BidSpace& a, const BidSpace& b);

// Joint bid vector b^t, indexed by advertiser id. Every entry is a BidSpace level.
using BidState = std::vector<double>;

struct AdvertiserProfile {
  std::size_t id = 0;
  double ctr = 1.0;        // top-slot click probability
  double valuation = 0.0;  // value per click
  double initial_bid = 0.0;
};

using Profiles = std::vector<AdvertiserProfile>;

// Historical per-period user counts; each period resamples one entry uniformly.
using UserPool = std::vector<std::uint64_t>;

// Throws InvalidInput unless ids are 0..m-1 in order and ctr/valuation are in range.
void validate_profiles(std::span<const AdvertiserProfile> profiles);

struct Mechanism {
  double alpha = 1.0;
  std::size_t num_slots = 1;
  std::vector<double> position_discounts{1.0};
  // Price charged to the lowest-ranked ad, which has no successor to price
  // against. Normally the bid space minimum.
  double last_slot_price = 0.0;

  double quality(double ctr) const;
  void validate() const;
};

Mechanism make_mechanism(double alpha, std::vector<double> position_discounts,
                         const BidSpace& space);

struct KpiReport {
  std::uint64_t impressions = 0;
  std::uint64_t clicks = 0;
  double avg_cpc = 0.0;
};

bool operator==(const KpiReport& a, const KpiReport& b);

struct AuctionOutcome {
  std::vector<std::size_t> ranking;   // shown ads, top slot first
  std::vector<double> prices;         // per shown slot
  std::vector<std::uint64_t> clicks;  // per shown slot, summed over users
  std::uint64_t users = 0;
  double revenue = 0.0;
  std::vector<KpiReport> kpi;  // per advertiser

  std::size_t slot_of(std::size_t advertiser) const;  // npos if unshown
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

bool operator==(const AuctionOutcome& a, const AuctionOutcome& b);

std::vector<double> quality_scores(std::span<const AdvertiserProfile> profiles,
                                   const Mechanism& mech);

// Score-level primitives. `scores` are quality scores f_i, one per advertiser.
std::vector<std::size_t> rank_by_score(std::span<const double> scores,
                                       std::span<const double> bids);
std::vector<double> gsp_prices_from_scores(std::span<const std::size_t> ranking,
                                           std::span<const double> scores,
                                           std::span<const double> bids,
                                           std::size_t shown, double last_slot_price);

// Full ranking of all m ads by ctr^alpha * bid, ties to the lower id. The
// first min(num_slots, m) entries are shown.
std::vector<std::size_t> rank_ads(std::span<const double> bids,
                                  std::span<const AdvertiserProfile> profiles,
                                  const Mechanism& mech);

std::size_t shown_count(std::size_t advertisers, const Mechanism& mech);

// Per-click price for each shown slot. Each slot pays the score-weighted bid
// of the next ranked ad; the last ranked ad pays mech.last_slot_price.
std::vector<double> gsp_prices(std::span<const std::size_t> ranking,
                               std::span<const double> bids,
                               std::span<const AdvertiserProfile> profiles,
                               const Mechanism& mech);

std::vector<bool> simulate_clicks(std::span<const std::size_t> ranking,
                                  std::span<const AdvertiserProfile> profiles,
                                  const Mechanism& mech, Rng& rng);
std::vector<bool> simulate_clicks(std::span<const std::size_t> ranking,
                                  std::span<const AdvertiserProfile> profiles,
                                  const Mechanism& mech, std::uint64_t seed);

// One period: `users` independent impressions of the same ranked slate.
AuctionOutcome run_auction(std::span<const double> bids,
                           std::span<const AdvertiserProfile> profiles,
                           const Mechanism& mech, std::uint64_t users, Rng& rng);
AuctionOutcome run_auction(std::span<const double> bids,
                           std::span<const AdvertiserProfile> profiles,
                           const Mechanism& mech, std::uint64_t users,
                           std::uint64_t seed);

// Exact expectation of run_auction's revenue over click randomness.
double expected_revenue(std::span<const double> bids,
                        std::span<const AdvertiserProfile> profiles,
                        const Mechanism& mech, double users);

double advertiser_utility(std::size_t advertiser, const AuctionOutcome& outcome,
                          std::span<const AdvertiserProfile> profiles);

}  // namespace mechlearn
