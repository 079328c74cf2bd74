#include "mechlearn/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mechlearn/error.hpp"

namespace mechlearn {

std::string_view agent_kind_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::BestResponse: return "BRM";
    case AgentKind::Analytical: return "AM";
    case AgentKind::Stable: return "SBM";
  }
  return "?";
}

AgentKind parse_agent_kind(std::string_view name) {
  if (name == "BRM") return AgentKind::BestResponse;
  if (name == "AM") return AgentKind::Analytical;
  if (name == "SBM") return AgentKind::Stable;
  throw InvalidInput("unknown agent kind '" + std::string(name) + "'");
}

namespace {

void check_distribution(std::span<const double> w, std::size_t expected, const char* what) {
  if (w.size() != expected || w.empty())
    throw InvalidInput(std::string("AM knowledge: ") + what + " weights size mismatch");
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw InvalidInput(std::string("AM knowledge: negative ") + what + " weight");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw InvalidInput(std::string("AM knowledge: ") + what + " weights do not sum to 1");
}

}  // namespace

void AmKnowledge::validate() const {
  check_distribution(count_weights, counts.size(), "count");
  const bool needs_ads = std::any_of(counts.begin(), counts.end(), [](auto c) { return c > 0; });
  if (needs_ads) check_distribution(ad_weights, ads.size(), "competitor");
  if (monte_carlo_draws == 0) throw InvalidInput("AM knowledge: monte_carlo_draws must be >= 1");
}

AmKnowledge am_knowledge_from_bids(std::size_t advertiser, std::span<const double> bids,
                                   std::span<const AdvertiserProfile> profiles,
                                   std::size_t monte_carlo_draws) {
  AmKnowledge k;
  for (std::size_t j = 0; j < profiles.size(); ++j)
    if (j != advertiser) k.ads.push_back({bids[j], profiles[j].ctr});
  if (!k.ads.empty()) k.ad_weights.assign(k.ads.size(), 1.0 / static_cast<double>(k.ads.size()));
  k.counts = {k.ads.size()};
  k.count_weights = {1.0};
  k.monte_carlo_draws = monte_carlo_draws;
  return k;
}

double brm_bid(std::size_t advertiser, std::span<const double> bids,
               std::span<const AdvertiserProfile> profiles, const Mechanism& mech,
               const BidSpace& space) {
  const auto& me = profiles[advertiser];
  const double own_score = mech.quality(me.ctr);
  if (!(own_score > 0.0)) return space.min_bid;

  struct Rival {
    double key;
    std::size_t id;
  };
  std::vector<Rival> rivals;
  for (std::size_t k = 0; k < profiles.size(); ++k)
    if (k != advertiser) rivals.push_back({mech.quality(profiles[k].ctr) * bids[k], k});
  std::stable_sort(rivals.begin(), rivals.end(),
                   [](const Rival& a, const Rival& b) { return a.key > b.key; });

  const std::size_t slots = shown_count(profiles.size(), mech);
  const std::size_t levels = space.level_count();
  double best_utility = 0.0;
  double best_bid = space.min_bid;
  for (std::size_t j = 0; j < slots && j <= rivals.size(); ++j) {
    double price = mech.last_slot_price;
    std::size_t need = 0;
    if (j < rivals.size()) {
      const Rival& below = rivals[j];
      price = below.key / own_score;
      auto outranks = [&](std::size_t level) {
        const double key = own_score * space.level(level);
        return key > below.key || (key == below.key && advertiser < below.id);
      };
      need = space.floor_index(price);
      while (need < levels && !outranks(need)) ++need;
      if (need == levels) continue;  // unattainable within the bid space
    }
    // On a coarse grid the smallest level beating rivals[j] may also beat
    // rivals above it; score the slot and price actually obtained.
    const double key = own_score * space.level(need);
    std::size_t slot = 0;
    while (slot < j && (rivals[slot].key > key ||
                        (rivals[slot].key == key && rivals[slot].id < advertiser)))
      ++slot;
    if (slot < j) price = rivals[slot].key / own_score;
    const double utility = (me.valuation - price) * me.ctr * mech.position_discounts[slot];
    if (utility > best_utility) {
      best_utility = utility;
      best_bid = space.level(need);
    }
  }
  return best_bid;
}

namespace {

std::size_t draw_index(std::span<const double> weights, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    cumulative += weights[k];
    if (u < cumulative) return k;
  }
  return weights.size() - 1;
}

}  // namespace

double am_bid(std::size_t advertiser, std::span<const AdvertiserProfile> profiles,
              const Mechanism& mech, const AmKnowledge& knowledge, const BidSpace& space,
              Rng& rng) {
  knowledge.validate();
  const auto& me = profiles[advertiser];
  const double own_score = mech.quality(me.ctr);
  if (!(own_score > 0.0)) return space.min_bid;

  const std::size_t levels = space.level_count();
  std::vector<double> utility(levels, 0.0);
  std::vector<double> rival_keys;
  for (std::size_t d = 0; d < knowledge.monte_carlo_draws; ++d) {
    const std::size_t count = knowledge.counts[draw_index(knowledge.count_weights, rng)];
    rival_keys.clear();
    for (std::size_t c = 0; c < count; ++c) {
      const auto& ad = knowledge.ads[draw_index(knowledge.ad_weights, rng)];
      rival_keys.push_back(mech.quality(ad.ctr) * ad.bid);
    }
    std::sort(rival_keys.begin(), rival_keys.end(), std::greater<>());
    const std::size_t slots = std::min(mech.num_slots, count + 1);
    std::size_t above = count;  // rivals at or above our key; shrinks as the bid rises
    for (std::size_t level = 0; level < levels; ++level) {
      const double key = own_score * space.level(level);
      while (above > 0 && rival_keys[above - 1] < key) --above;
      if (above >= slots) continue;
      const double price =
          above < count ? std::min(rival_keys[above] / own_score, space.level(level))
                        : std::min(mech.last_slot_price, space.level(level));
      utility[level] += (me.valuation - price) * me.ctr * mech.position_discounts[above];
    }
  }

  std::size_t best = 0;
  for (std::size_t level = 1; level < levels; ++level)
    if (utility[level] > utility[best]) best = level;
  return utility[best] > 0.0 ? space.level(best) : space.min_bid;
}

double am_bid(std::size_t advertiser, std::span<const AdvertiserProfile> profiles,
              const Mechanism& mech, const AmKnowledge& knowledge, const BidSpace& space,
              std::uint64_t seed) {
  Rng rng(seed);
  return am_bid(advertiser, profiles, mech, knowledge, space, rng);
}

std::array<std::size_t, 3> largest_remainder(const std::array<double, 3>& proportions,
                                             std::size_t total) {
  double sum = 0.0;
  for (double p : proportions) {
    if (!(p >= 0.0)) throw InvalidInput("mixture: negative proportion");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("mixture: proportions must sum to 1");

  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = proportions[k] * static_cast<double>(total);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % 3, ++assigned) ++counts[order[k]];
  while (assigned > total) {  // only reachable through rounding in `exact`
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

MixtureAssignment assign_mixture(std::size_t advertisers, const std::array<double, 3>& proportions,
                                 std::uint64_t seed) {
  if (advertisers == 0) throw InvalidInput("mixture: needs at least one advertiser");
  MixtureAssignment out;
  out.proportions = proportions;
  const auto counts = largest_remainder(proportions, advertisers);
  const AgentKind kinds[3] = {AgentKind::BestResponse, AgentKind::Analytical, AgentKind::Stable};
  for (std::size_t k = 0; k < 3; ++k) out.kinds.insert(out.kinds.end(), counts[k], kinds[k]);
  Rng rng(seed);
  for (std::size_t i = out.kinds.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(out.kinds[i - 1], out.kinds[std::min(j, i - 1)]);
  }
  return out;
}

MixtureAssignment assign_mixture(std::size_t advertisers, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6d6978));
  std::array<double, 3> p{};
  double total = 0.0;
  for (double& x : p) {
    x = -std::log1p(-uniform01(rng));  // Exp(1); normalized triple is Dirichlet(1,1,1)
    total += x;
  }
  for (double& x : p) x /= total;
  p[2] = std::max(0.0, 1.0 - p[0] - p[1]);
  return assign_mixture(advertisers, p, seed);
}

BidState step_population(std::span<const AgentKind> kinds, std::span<const double> bids,
                         std::span<const AdvertiserProfile> profiles, const Mechanism& mech,
                         const BidSpace& space, const SandboxOptions& options,
                         std::uint64_t seed) {
  const std::size_t m = profiles.size();
  if (kinds.size() != m || bids.size() != m) throw InvalidInput("step_population: size mismatch");
  BidState next(m);
  for (std::size_t i = 0; i < m; ++i) {
    double b = bids[i];
    switch (kinds[i]) {
      case AgentKind::Stable:
        b = sbm_bid(bids[i]);
        break;
      case AgentKind::BestResponse:
        b = brm_bid(i, bids, profiles, mech, space);
        break;
      case AgentKind::Analytical: {
        const auto knowledge = am_knowledge_from_bids(i, bids, profiles, options.am_draws);
        b = am_bid(i, profiles, mech, knowledge, space, derive_seed(seed, i));
        break;
      }
    }
    if (options.cap_at_valuation && kinds[i] != AgentKind::Stable &&
        profiles[i].valuation >= space.min_bid)
      b = std::min(b, space.level(space.floor_index(profiles[i].valuation)));
    next[i] = space.snap(b);
  }
  return next;
}

}  // namespace mechlearn
