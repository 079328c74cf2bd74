#include "mechlearn/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "mechlearn/error.hpp"

namespace mechlearn {

namespace {

std::size_t bin_of(const std::vector<double>& edges, double value) {
  return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), value) -
                                  edges.begin());
}

std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins) {
  std::vector<double> edges;
  if (values.empty() || bins < 2) return edges;
  std::sort(values.begin(), values.end());
  const double last = static_cast<double>(values.size() - 1);
  for (std::size_t k = 1; k < bins; ++k) {
    const double pos = last * static_cast<double>(k) / static_cast<double>(bins);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    edges.push_back(values[lo] + frac * (values[hi] - values[lo]));
  }
  return edges;
}

void check_finite(const Features& z, std::size_t advertiser) {
  for (double v : z)
    if (!std::isfinite(v))
      throw InvalidInput("advertiser " + std::to_string(advertiser) + ": non-finite feature");
}

}  // namespace

std::size_t KpiBuckets::bucket_count() const {
  return (impressions.size() + 1) * (clicks.size() + 1) * (cpc.size() + 1);
}

std::size_t KpiBuckets::bucket(const KpiReport& kpi) const {
  const std::size_t bi = bin_of(impressions, static_cast<double>(kpi.impressions));
  const std::size_t bc = bin_of(clicks, static_cast<double>(kpi.clicks));
  const std::size_t bp = bin_of(cpc, kpi.avg_cpc);
  return (bi * (clicks.size() + 1) + bc) * (cpc.size() + 1) + bp;
}

KpiBuckets KpiBuckets::from_quantiles(std::span<const KpiReport> reports, std::size_t bins) {
  std::vector<double> imp, clk, cpc;
  imp.reserve(reports.size());
  clk.reserve(reports.size());
  cpc.reserve(reports.size());
  for (const auto& r : reports) {
    imp.push_back(static_cast<double>(r.impressions));
    clk.push_back(static_cast<double>(r.clicks));
    cpc.push_back(r.avg_cpc);
  }
  return KpiBuckets{quantile_edges(std::move(imp), bins), quantile_edges(std::move(clk), bins),
                    quantile_edges(std::move(cpc), bins)};
}

bool operator==(const KpiBuckets& a, const KpiBuckets& b) {
  return a.impressions == b.impressions && a.clicks == b.clicks && a.cpc == b.cpc;
}

TabularTransition::TabularTransition(BidSpace space, std::vector<KpiBuckets> buckets,
                                     double epsilon)
    : space_(space), levels_(space.level_count()), epsilon_(epsilon), buckets_(std::move(buckets)) {
  space_.validate();
  if (!(epsilon >= 0.0)) throw InvalidInput("tabular model: epsilon must be nonnegative");
  const double uniform = 1.0 / static_cast<double>(levels_);
  tables_.reserve(buckets_.size());
  for (const auto& b : buckets_)
    tables_.emplace_back(b.bucket_count() * levels_ * levels_, uniform);
}

std::size_t TabularTransition::offset(std::size_t bucket,
                                      std::size_t from) const {
  return (bucket * levels_ + from) * levels_;
}

std::span<const double> TabularTransition::row(std::size_t advertiser, std::size_t bucket,
                                               std::size_t from) const {
  return {tables_[advertiser].data() + offset(bucket, from), levels_};
}

void TabularTransition::set_row(std::size_t advertiser, std::size_t bucket, std::size_t from,
                                std::span<const double> probabilities) {
  if (probabilities.size() != levels_) throw InvalidInput("tabular model: row size mismatch");
  std::copy(probabilities.begin(), probabilities.end(),
            tables_[advertiser].begin() + static_cast<std::ptrdiff_t>(offset(bucket, from)));
}

Features bid_features(double bid, const KpiReport& kpi) {
  return {bid, static_cast<double>(kpi.impressions), static_cast<double>(kpi.clicks),
          kpi.avg_cpc, 1.0};
}

double ParametricTransition::mean(std::size_t advertiser, double bid, const KpiReport& kpi) const {
  const Features z = bid_features(bid, kpi);
  const Features& w = weights[advertiser];
  double mu = 0.0;
  for (std::size_t k = 0; k < kFeatureCount; ++k) mu += w[k] * z[k];
  return mu;
}

std::vector<double> truncated_gaussian_row(const BidSpace& space, double mean, double bandwidth) {
  if (!std::isfinite(mean)) throw InvalidInput("transition mean is not finite");
  const std::size_t count = space.level_count();
  std::vector<double> row(count);
  const double inv_h2 = 1.0 / (bandwidth * bandwidth);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) {
    const double d = space.level(k) - mean;
    row[k] = -d * d * inv_h2;
    top = std::max(top, row[k]);
  }
  double total = 0.0;
  for (double& v : row) {
    // Keep far tails strictly positive instead of underflowing to zero.
    v = std::max(std::exp(v - top), std::numeric_limits<double>::min());
    total += v;
  }
  for (double& v : row) v /= total;
  return row;
}

BehaviorModel::BehaviorModel(TabularTransition tabular) : impl_(std::move(tabular)) {}

BehaviorModel::BehaviorModel(ParametricTransition parametric) : impl_(std::move(parametric)) {
  const auto& p = std::get<ParametricTransition>(impl_);
  p.space.validate();
  if (!(p.bandwidth > 0.0)) throw InvalidInput("parametric model: bandwidth must be positive");
  if (!p.bandwidths.empty() && p.bandwidths.size() != p.weights.size())
    throw InvalidInput("parametric model: one bandwidth per advertiser required");
  for (double h : p.bandwidths)
    if (!(h > 0.0)) throw InvalidInput("parametric model: bandwidth must be positive");
}

const BidSpace& BehaviorModel::space() const {
  return std::visit(
      [](const auto& m) -> const BidSpace& {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, TabularTransition>)
          return m.space();
        else
          return m.space;
      },
      impl_);
}

std::size_t BehaviorModel::advertiser_count() const {
  return std::visit([](const auto& m) { return m.advertiser_count(); }, impl_);
}

void BehaviorModel::row_into(std::size_t advertiser, std::size_t from_index,
                             const KpiReport& kpi, std::span<double> out) const {
  if (const auto* tab = std::get_if<TabularTransition>(&impl_)) {
    const auto row = tab->row(advertiser, tab->buckets(advertiser).bucket(kpi), from_index);
    std::copy(row.begin(), row.end(), out.begin());
    return;
  }
  const auto& par = std::get<ParametricTransition>(impl_);
  const double mu = par.mean(advertiser, par.space.level(from_index), kpi);
  const auto row = truncated_gaussian_row(par.space, mu, par.bandwidth_of(advertiser));
  std::copy(row.begin(), row.end(), out.begin());
}

TabularTransition estimate_tabular(std::span<const AdvertiserHistory> histories,
                                   const BidSpace& space, const BucketConfig& config,
                                   double epsilon) {
  std::vector<KpiBuckets> buckets;
  buckets.reserve(histories.size());
  for (const auto& h : histories) {
    std::vector<KpiReport> reports;
    reports.reserve(h.size());
    for (const auto& step : h) reports.push_back(step.kpi);
    buckets.push_back(KpiBuckets::from_quantiles(reports, config.bins_per_signal));
  }
  TabularTransition model(space, buckets, epsilon);
  const std::size_t levels = model.levels();
  const double share = epsilon / static_cast<double>(levels);

  std::vector<double> row(levels);
  for (std::size_t i = 0; i < histories.size(); ++i) {
    const std::size_t bucket_count = buckets[i].bucket_count();
    std::vector<double> counts(bucket_count * levels * levels, 0.0);
    for (const auto& step : histories[i]) {
      const std::size_t b = buckets[i].bucket(step.kpi);
      const std::size_t from = space.index_of(step.bid);
      const std::size_t to = space.index_of(step.next_bid);
      counts[(b * levels + from) * levels + to] += 1.0;
    }
    for (std::size_t b = 0; b < bucket_count; ++b) {
      for (std::size_t from = 0; from < levels; ++from) {
        const double* c = counts.data() + (b * levels + from) * levels;
        double total = 0.0;
        for (std::size_t k = 0; k < levels; ++k) total += c[k];
        if (total == 0.0) continue;  // unseen context keeps the uniform default
        for (std::size_t k = 0; k < levels; ++k) row[k] = (c[k] / total + share) / (1.0 + epsilon);
        model.set_row(i, b, from, row);
      }
    }
  }
  return model;
}

LeastSquaresFit fit_least_squares(std::span<const Features> features,
                                  std::span<const double> targets, double learning_rate,
                                  std::size_t iterations) {
  const std::size_t n = features.size();
  if (n < 2) throw InvalidInput("least squares: need at least two observations");
  if (targets.size() != n) throw InvalidInput("least squares: feature/target size mismatch");
  if (!(learning_rate > 0.0)) throw InvalidInput("least squares: learning rate must be positive");

  constexpr std::size_t kSlopes = kFeatureCount - 1;  // last feature is the intercept
  std::array<double, kSlopes> mean{}, scale{};
  for (std::size_t k = 0; k < kSlopes; ++k) {
    double s = 0.0;
    for (const auto& z : features) s += z[k];
    mean[k] = s / static_cast<double>(n);
    double v = 0.0;
    for (const auto& z : features) v += (z[k] - mean[k]) * (z[k] - mean[k]);
    const double sd = std::sqrt(v / static_cast<double>(n));
    scale[k] = sd > 0.0 ? sd : 0.0;
  }
  std::vector<Features> x(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < kSlopes; ++k)
      x[t][k] = scale[k] > 0.0 ? (features[t][k] - mean[k]) / scale[k] : 0.0;
    x[t][kSlopes] = 1.0;
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  auto loss_of = [&](const Features& v) {
    double loss = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      double r = -targets[t];
      for (std::size_t k = 0; k < kFeatureCount; ++k) r += v[k] * x[t][k];
      loss += r * r;
    }
    return loss * inv_n;
  };

  Features v{};
  double loss = loss_of(v);
  std::size_t rising = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    Features grad{};
    for (std::size_t t = 0; t < n; ++t) {
      double r = -targets[t];
      for (std::size_t k = 0; k < kFeatureCount; ++k) r += v[k] * x[t][k];
      for (std::size_t k = 0; k < kFeatureCount; ++k) grad[k] += r * x[t][k];
    }
    for (std::size_t k = 0; k < kFeatureCount; ++k) v[k] -= learning_rate * 2.0 * inv_n * grad[k];
    const double next = loss_of(v);
    if (!std::isfinite(next)) throw StepSizeError("least squares: loss diverged to non-finite value");
    // Ignore rounding-level wobble once converged.
    rising = next > loss * (1.0 + 1e-12) + 1e-300 ? rising + 1 : 0;
    if (rising >= 10) throw StepSizeError("least squares: loss rose for 10 consecutive steps");
    loss = next;
  }

  LeastSquaresFit fit;
  fit.loss = loss;
  double intercept = v[kSlopes];
  for (std::size_t k = 0; k < kSlopes; ++k) {
    if (scale[k] > 0.0) {
      fit.weights[k] = v[k] / scale[k];
      intercept -= fit.weights[k] * mean[k];
    }
  }
  fit.weights[kSlopes] = intercept;
  return fit;
}

ParametricTransition fit_parametric(std::span<const AdvertiserHistory> histories,
                                    const BidSpace& space, const FitOptions& options) {
  space.validate();
  if (!(options.bandwidth > 0.0)) throw InvalidInput("parametric fit: bandwidth must be positive");
  ParametricTransition model;
  model.space = space;
  model.bandwidth = options.bandwidth;
  for (std::size_t i = 0; i < histories.size(); ++i) {
    const auto& h = histories[i];
    if (h.size() < 2)
      throw InvalidInput("advertiser " + std::to_string(i) + ": fewer than two observations");
    std::vector<Features> z;
    std::vector<double> y;
    z.reserve(h.size());
    y.reserve(h.size());
    for (const auto& step : h) {
      z.push_back(bid_features(step.bid, step.kpi));
      check_finite(z.back(), i);
      if (!std::isfinite(step.next_bid))
        throw InvalidInput("advertiser " + std::to_string(i) + ": non-finite target bid");
      y.push_back(step.next_bid);
    }
    const auto fit = fit_least_squares(z, y, options.learning_rate, options.iterations);
    model.weights.push_back(fit.weights);
    model.final_loss.push_back(fit.loss);
    if (options.fitted_bandwidth)
      model.bandwidths.push_back(std::max(std::sqrt(2.0 * fit.loss), 0.25 * space.unit));
  }
  return model;
}

std::vector<double> transition_row(const BehaviorModel& model, std::size_t advertiser,
                                   double current_bid, const KpiReport& kpi) {
  std::vector<double> row(model.space().level_count());
  model.row_into(advertiser, model.space().index_of(current_bid), kpi, row);
  return row;
}

namespace {

std::size_t sample_index(std::span<const double> row, double u) {
  double cumulative = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    cumulative += row[k];
    if (u < cumulative) return k;
  }
  // u landed in the rounding gap at the top; take the last positive entry.
  for (std::size_t k = row.size(); k-- > 0;)
    if (row[k] > 0.0) return k;
  return row.size() - 1;
}

}  // namespace

BidState sample_next_bids(const BehaviorModel& model, std::span<const double> current,
                          std::span<const KpiReport> kpis, Rng& rng) {
  const std::size_t m = current.size();
  if (m != model.advertiser_count() || kpis.size() != m)
    throw InvalidInput("sample_next_bids: size mismatch");
  const BidSpace& space = model.space();
  std::vector<double> row(space.level_count());
  BidState next(m);
  for (std::size_t i = 0; i < m; ++i) {
    model.row_into(i, space.index_of(current[i]), kpis[i], row);
    next[i] = space.level(sample_index(row, uniform01(rng)));
  }
  return next;
}

BidState sample_next_bids(const BehaviorModel& model, std::span<const double> current,
                          std::span<const KpiReport> kpis, std::uint64_t seed) {
  Rng rng(seed);
  return sample_next_bids(model, current, kpis, rng);
}

std::size_t JointTransition::encode(std::span<const std::size_t> level_indices) const {
  std::size_t state = 0;
  for (std::size_t i = level_indices.size(); i-- > 0;) state = state * levels + level_indices[i];
  return state;
}

std::vector<std::size_t> JointTransition::decode(std::size_t state) const {
  std::vector<std::size_t> idx(advertisers);
  for (std::size_t i = 0; i < advertisers; ++i) {
    idx[i] = state % levels;
    state /= levels;
  }
  return idx;
}

std::size_t joint_state_count(std::size_t advertisers, std::size_t levels, std::size_t cap) {
  std::size_t states = 1;
  for (std::size_t i = 0; i < advertisers; ++i) {
    if (states > cap / levels)
      throw TooLarge("joint state space exceeds the cap of " + std::to_string(cap));
    states *= levels;
  }
  if (states > cap) throw TooLarge("joint state space exceeds the cap of " + std::to_string(cap));
  return states;
}

namespace {

// out[sum_i d_i L^i] += weight * prod_i rows[i][d_i]
void add_outer_product(const std::vector<std::vector<double>>& rows, double weight,
                       std::span<double> out) {
  std::vector<double> acc{weight};
  for (std::size_t i = rows.size(); i-- > 0;) {
    const auto& r = rows[i];
    std::vector<double> next(acc.size() * r.size());
    for (std::size_t a = 0; a < acc.size(); ++a)
      for (std::size_t l = 0; l < r.size(); ++l) next[a * r.size() + l] = acc[a] * r[l];
    acc.swap(next);
  }
  for (std::size_t s = 0; s < acc.size(); ++s) out[s] += acc[s];
}

std::vector<double> binomial_pmf(std::uint64_t n, double p) {
  std::vector<double> pmf(n + 1, 0.0);
  if (p <= 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p >= 1.0) {
    pmf[n] = 1.0;
    return pmf;
  }
  const double nd = static_cast<double>(n);
  const double lp = std::log(p), lq = std::log1p(-p);
  double total = 0.0;
  for (std::uint64_t c = 0; c <= n; ++c) {
    const double cd = static_cast<double>(c);
    pmf[c] = std::exp(std::lgamma(nd + 1) - std::lgamma(cd + 1) - std::lgamma(nd - cd + 1) +
                      cd * lp + (nd - cd) * lq);
    total += pmf[c];
  }
  for (double& v : pmf) v /= total;
  return pmf;
}

}  // namespace

JointTransition joint_transition_matrix(const BehaviorModel& model,
                                        std::span<const AdvertiserProfile> profiles,
                                        const Mechanism& mech,
                                        std::span<const std::uint64_t> users,
                                        const JointOptions& options) {
  const std::size_t m = profiles.size();
  if (m != model.advertiser_count()) throw InvalidInput("joint kernel: model/profile size mismatch");
  if (users.empty()) throw InvalidInput("joint kernel: empty user pool");
  const BidSpace& space = model.space();

  JointTransition q;
  q.advertisers = m;
  q.levels = space.level_count();
  q.states = joint_state_count(m, q.levels, options.state_cap);
  q.data.assign(q.states * q.states, 0.0);

  std::map<std::uint64_t, double> pool;
  for (auto n : users) pool[n] += 1.0 / static_cast<double>(users.size());

  Rng rng(options.seed);
  std::vector<std::vector<double>> rows(m, std::vector<double>(q.levels));
  std::vector<double> scratch(q.levels);
  BidState bids(m);
  for (std::size_t s = 0; s < q.states; ++s) {
    const auto idx = q.decode(s);
    for (std::size_t i = 0; i < m; ++i) bids[i] = space.level(idx[i]);
    std::span<double> out(q.data.data() + s * q.states, q.states);

    if (options.num_user_samples > 0) {
      const double w = 1.0 / static_cast<double>(options.num_user_samples);
      for (std::size_t k = 0; k < options.num_user_samples; ++k) {
        const auto n = users[std::uniform_int_distribution<std::size_t>(0, users.size() - 1)(rng)];
        const auto outcome = run_auction(bids, profiles, mech, n, rng);
        for (std::size_t i = 0; i < m; ++i) model.row_into(i, idx[i], outcome.kpi[i], rows[i]);
        add_outer_product(rows, w, out);
      }
      continue;
    }

    const auto ranking = rank_ads(bids, profiles, mech);
    const auto prices = gsp_prices(ranking, bids, profiles, mech);
    for (const auto& [n, weight] : pool) {
      for (std::size_t i = 0; i < m; ++i) std::fill(rows[i].begin(), rows[i].end(), 0.0);
      std::vector<bool> shown(m, false);
      for (std::size_t j = 0; j < prices.size(); ++j) {
        const std::size_t ad = ranking[j];
        shown[ad] = true;
        const double p = std::clamp(profiles[ad].ctr * mech.position_discounts[j], 0.0, 1.0);
        const auto pmf = binomial_pmf(n, p);
        for (std::uint64_t c = 0; c <= n; ++c) {
          if (pmf[c] == 0.0) continue;
          const KpiReport kpi{n, c, c > 0 ? prices[j] : 0.0};
          model.row_into(ad, idx[ad], kpi, scratch);
          for (std::size_t l = 0; l < q.levels; ++l) rows[ad][l] += pmf[c] * scratch[l];
        }
      }
      for (std::size_t i = 0; i < m; ++i)
        if (!shown[i]) model.row_into(i, idx[i], KpiReport{}, rows[i]);
      add_outer_product(rows, weight, out);
    }
  }
  return q;
}

}  // namespace mechlearn
