#include "mechlearn/auction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mechlearn/error.hpp"

namespace mechlearn {

namespace {

constexpr double kLevelSlack = 1e-9;

}  // namespace

void BidSpace::validate() const {
  if (!std::isfinite(min_bid) || !std::isfinite(max_bid) || !std::isfinite(unit))
    throw InvalidInput("bid space: non-finite bound");
  if (min_bid < 0.0) throw InvalidInput("bid space: negative min_bid");
  if (unit <= 0.0) throw InvalidInput("bid space: unit must be positive");
  if (level_count() < 2) throw InvalidInput("bid space: needs at least two levels");
}

std::size_t BidSpace::level_count() const {
  if (!(unit > 0.0) || max_bid < min_bid) return 0;
  return static_cast<std::size_t>(std::floor((max_bid - min_bid) / unit + kLevelSlack)) + 1;
}

std::vector<double> BidSpace::levels() const {
  std::vector<double> out(level_count());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = level(k);
  return out;
}

std::size_t BidSpace::index_of(double bid) const {
  const auto count = static_cast<long long>(level_count());
  long long k = std::llround((bid - min_bid) / unit);
  return static_cast<std::size_t>(std::clamp(k, 0LL, count - 1));
}

std::size_t BidSpace::floor_index(double bid) const {
  const auto count = static_cast<long long>(level_count());
  const double raw = std::floor((bid - min_bid) / unit + kLevelSlack);
  if (raw < 0.0) return 0;
  return static_cast<std::size_t>(std::min(static_cast<long long>(raw), count - 1));
}

bool operator==(const BidSpace& a, const BidSpace& b) {
  return a.min_bid == b.min_bid && a.max_bid == b.max_bid && a.unit == b.unit;
}

void validate_profiles(std::span<const AdvertiserProfile> profiles) {
  if (profiles.empty()) throw InvalidInput("empty advertiser list");
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    if (p.id != i)
      throw InvalidInput("advertiser ids must be contiguous from 0; position " +
                         std::to_string(i) + " has id " + std::to_string(p.id));
    if (!(p.ctr >= 0.0 && p.ctr <= 1.0))
      throw InvalidInput("advertiser " + std::to_string(i) + ": ctr outside [0, 1]");
    if (!(p.valuation >= 0.0) || !std::isfinite(p.valuation))
      throw InvalidInput("advertiser " + std::to_string(i) + ": negative valuation");
  }
}

double Mechanism::quality(double ctr) const { return std::pow(ctr, alpha); }

void Mechanism::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw InvalidInput("mechanism: alpha must be a nonnegative finite number");
  if (num_slots == 0) throw InvalidInput("mechanism: needs at least one slot");
  if (position_discounts.size() != num_slots)
    throw InvalidInput("mechanism: one position discount per slot required");
  if (position_discounts.front() != 1.0)
    throw InvalidInput("mechanism: top-slot discount must be 1");
  for (std::size_t j = 0; j < num_slots; ++j) {
    const double beta = position_discounts[j];
    if (!(beta > 0.0 && beta <= 1.0))
      throw InvalidInput("mechanism: discounts must lie in (0, 1]");
    if (j > 0 && beta > position_discounts[j - 1])
      throw InvalidInput("mechanism: discounts must be non-increasing");
  }
  if (!(last_slot_price >= 0.0)) throw InvalidInput("mechanism: negative last-slot price");
}

Mechanism make_mechanism(double alpha, std::vector<double> position_discounts,
                         const BidSpace& space) {
  Mechanism mech;
  mech.alpha = alpha;
  mech.num_slots = position_discounts.size();
  mech.position_discounts = std::move(position_discounts);
  mech.last_slot_price = space.min_bid;
  mech.validate();
  return mech;
}

bool operator==(const KpiReport& a, const KpiReport& b) {
  return a.impressions == b.impressions && a.clicks == b.clicks && a.avg_cpc == b.avg_cpc;
}

std::size_t AuctionOutcome::slot_of(std::size_t advertiser) const {
  auto it = std::find(ranking.begin(), ranking.end(), advertiser);
  return it == ranking.end() ? npos : static_cast<std::size_t>(it - ranking.begin());
}

bool operator==(const AuctionOutcome& a, const AuctionOutcome& b) {
  return a.ranking == b.ranking && a.prices == b.prices && a.clicks == b.clicks &&
         a.users == b.users && a.revenue == b.revenue && a.kpi == b.kpi;
}

std::vector<double> quality_scores(std::span<const AdvertiserProfile> profiles,
                                   const Mechanism& mech) {
  std::vector<double> scores(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) scores[i] = mech.quality(profiles[i].ctr);
  return scores;
}

std::vector<std::size_t> rank_by_score(std::span<const double> scores,
                                       std::span<const double> bids) {
  if (scores.empty()) throw InvalidInput("rank: no advertisers");
  if (scores.size() != bids.size()) throw InvalidInput("rank: score/bid size mismatch");
  std::vector<double> key(scores.size());
  for (std::size_t i = 0; i < key.size(); ++i) key[i] = scores[i] * bids[i];
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  return order;
}

std::vector<double> gsp_prices_from_scores(std::span<const std::size_t> ranking,
                                           std::span<const double> scores,
                                           std::span<const double> bids,
                                           std::size_t shown, double last_slot_price) {
  shown = std::min(shown, ranking.size());
  std::vector<double> prices(shown);
  for (std::size_t j = 0; j < shown; ++j) {
    const std::size_t own = ranking[j];
    const double own_score = scores[own];
    if (!(own_score > 0.0) || !std::isfinite(own_score))
      throw DegenerateScore("ad " + std::to_string(own) + " shown in slot " +
                            std::to_string(j + 1) + " has a zero quality score");
    double price = last_slot_price;
    if (j + 1 < ranking.size()) {
      const std::size_t next = ranking[j + 1];
      price = (scores[next] * bids[next]) / own_score;
    }
    // Second-price bound; only ever trims rounding.
    prices[j] = std::min(price, bids[own]);
  }
  return prices;
}

std::size_t shown_count(std::size_t advertisers, const Mechanism& mech) {
  return std::min(advertisers, mech.num_slots);
}

std::vector<std::size_t> rank_ads(std::span<const double> bids,
                                  std::span<const AdvertiserProfile> profiles,
                                  const Mechanism& mech) {
  if (profiles.empty()) throw InvalidInput("rank_ads: empty profile list");
  const auto scores = quality_scores(profiles, mech);
  return rank_by_score(scores, bids);
}

std::vector<double> gsp_prices(std::span<const std::size_t> ranking,
                               std::span<const double> bids,
                               std::span<const AdvertiserProfile> profiles,
                               const Mechanism& mech) {
  const auto scores = quality_scores(profiles, mech);
  return gsp_prices_from_scores(ranking, scores, bids, shown_count(profiles.size(), mech),
                                mech.last_slot_price);
}

namespace {

double click_probability(const AdvertiserProfile& p, const Mechanism& mech, std::size_t slot) {
  return std::clamp(p.ctr * mech.position_discounts[slot], 0.0, 1.0);
}

}  // namespace

std::vector<bool> simulate_clicks(std::span<const std::size_t> ranking,
                                  std::span<const AdvertiserProfile> profiles,
                                  const Mechanism& mech, Rng& rng) {
  const std::size_t shown = std::min(ranking.size(), mech.num_slots);
  std::vector<bool> clicks(shown);
  for (std::size_t j = 0; j < shown; ++j)
    clicks[j] = uniform01(rng) < click_probability(profiles[ranking[j]], mech, j);
  return clicks;
}

std::vector<bool> simulate_clicks(std::span<const std::size_t> ranking,
                                  std::span<const AdvertiserProfile> profiles,
                                  const Mechanism& mech, std::uint64_t seed) {
  Rng rng(seed);
  return simulate_clicks(ranking, profiles, mech, rng);
}

AuctionOutcome run_auction(std::span<const double> bids,
                           std::span<const AdvertiserProfile> profiles,
                           const Mechanism& mech, std::uint64_t users, Rng& rng) {
  if (bids.size() != profiles.size()) throw InvalidInput("run_auction: bid/profile size mismatch");
  const auto full = rank_ads(bids, profiles, mech);
  const auto prices = gsp_prices(full, bids, profiles, mech);
  const std::size_t shown = prices.size();

  AuctionOutcome out;
  out.users = users;
  out.ranking.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(shown));
  out.prices = prices;
  out.clicks.assign(shown, 0);
  out.kpi.assign(profiles.size(), KpiReport{});
  for (std::size_t j = 0; j < shown; ++j) {
    const std::size_t ad = out.ranking[j];
    const double p = click_probability(profiles[ad], mech, j);
    std::uint64_t clicks = 0;
    if (users > 0 && p >= 1.0) {
      clicks = users;
    } else if (users > 0 && p > 0.0) {
      std::binomial_distribution<std::uint64_t> draw(users, p);
      clicks = draw(rng);
    }
    out.clicks[j] = clicks;
    out.revenue += prices[j] * static_cast<double>(clicks);
    auto& kpi = out.kpi[ad];
    kpi.impressions = users;
    kpi.clicks = clicks;
    kpi.avg_cpc = clicks > 0 ? prices[j] : 0.0;
  }
  return out;
}

AuctionOutcome run_auction(std::span<const double> bids,
                           std::span<const AdvertiserProfile> profiles,
                           const Mechanism& mech, std::uint64_t users,
                           std::uint64_t seed) {
  Rng rng(seed);
  return run_auction(bids, profiles, mech, users, rng);
}

double expected_revenue(std::span<const double> bids,
                        std::span<const AdvertiserProfile> profiles,
                        const Mechanism& mech, double users) {
  const auto full = rank_ads(bids, profiles, mech);
  const auto prices = gsp_prices(full, bids, profiles, mech);
  double per_user = 0.0;
  for (std::size_t j = 0; j < prices.size(); ++j)
    per_user += prices[j] * click_probability(profiles[full[j]], mech, j);
  return users * per_user;
}

double advertiser_utility(std::size_t advertiser, const AuctionOutcome& outcome,
                          std::span<const AdvertiserProfile> profiles) {
  const std::size_t slot = outcome.slot_of(advertiser);
  if (slot == AuctionOutcome::npos) return 0.0;
  const auto clicks = outcome.clicks[slot];
  if (clicks == 0) return 0.0;
  return (profiles[advertiser].valuation - outcome.prices[slot]) * static_cast<double>(clicks);
}

}  // namespace mechlearn
