#pragma once

// Simulated advertiser populations: best-response bidders with full bid
// visibility, analytical bidders maximizing expected utility against a
// competitor distribution, and stable bidders that never move.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mechlearn/auction.hpp"
#include "mechlearn/rng.hpp"

namespace mechlearn {

enum class AgentKind { BestResponse, Analytical, Stable };

std::string_view agent_kind_name(AgentKind kind);  // "BRM", "AM", "SBM"
AgentKind parse_agent_kind(std::string_view name);

// A competitor ad as the analytical bidder imagines it.
struct CompetitorAd {
  double bid = 0.0;
  double ctr = 1.0;
};

struct AmKnowledge {
  std::vector<CompetitorAd> ads;
  std::vector<double> ad_weights;        // empirical distribution over `ads`
  std::vector<std::size_t> counts;       // possible numbers of competitors
  std::vector<double> count_weights;
  std::size_t monte_carlo_draws = 200;

  void validate() const;
};

// Competitors = the other advertisers' current (bid, ctr), equally weighted;
// competitor count fixed at m - 1.
AmKnowledge am_knowledge_from_bids(std::size_t advertiser, std::span<const double> bids,
                                   std::span<const AdvertiserProfile> profiles,
                                   std::size_t monte_carlo_draws);

// Smallest bid level that wins the utility-maximizing slot against the other
// advertisers' current bids. Slot ties go to the higher slot; min_bid when no
// slot has positive utility.
double brm_bid(std::size_t advertiser, std::span<const double> bids,
               std::span<const AdvertiserProfile> profiles, const Mechanism& mech,
               const BidSpace& space);

// Bid level maximizing Monte-Carlo expected utility. Every candidate level is
// scored on the same competitor draws; ties go to the lower bid and a
// competitor with an equal ranking score outranks the bidder.
double am_bid(std::size_t advertiser, std::span<const AdvertiserProfile> profiles,
              const Mechanism& mech, const AmKnowledge& knowledge, const BidSpace& space,
              Rng& rng);
double am_bid(std::size_t advertiser, std::span<const AdvertiserProfile> profiles,
              const Mechanism& mech, const AmKnowledge& knowledge, const BidSpace& space,
              std::uint64_t seed);

inline double sbm_bid(double current_bid) { return current_bid; }

struct MixtureAssignment {
  std::array<double, 3> proportions{};  // BRM, AM, SBM
  std::vector<AgentKind> kinds;         // per advertiser
};

std::array<std::size_t, 3> largest_remainder(const std::array<double, 3>& proportions,
                                             std::size_t total);

// Proportions drawn uniformly from the simplex.
MixtureAssignment assign_mixture(std::size_t advertisers, std::uint64_t seed);
MixtureAssignment assign_mixture(std::size_t advertisers, const std::array<double, 3>& proportions,
                                 std::uint64_t seed);

struct SandboxOptions {
  std::size_t am_draws = 200;
  // Strategic bidders never bid above their value per click.
  bool cap_at_valuation = true;
};

// Synchronous update: every agent reacts to the same time-t bid vector.
BidState step_population(std::span<const AgentKind> kinds, std::span<const double> bids,
                         std::span<const AdvertiserProfile> profiles, const Mechanism& mech,
                         const BidSpace& space, const SandboxOptions& options,
                         std::uint64_t seed);

}  // namespace mechlearn
