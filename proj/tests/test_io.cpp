#include <gtest/gtest.h>

#include <sstream>

#include "mechlearn/error.hpp"
#include "mechlearn/logs.hpp"
#include "mechlearn/model_io.hpp"

using namespace mechlearn;

namespace {

void expect_same_rows(const BehaviorModel& a, const BehaviorModel& b) {
  ASSERT_EQ(a.advertiser_count(), b.advertiser_count());
  ASSERT_EQ(a.space(), b.space());
  const std::size_t levels = a.space().level_count();
  const std::vector<KpiReport> probes{{0, 0, 0.0}, {50, 3, 1.25}, {500, 90, 7.0}};
  for (std::size_t i = 0; i < a.advertiser_count(); ++i)
    for (std::size_t from = 0; from < levels; ++from)
      for (const auto& k : probes) {
        std::vector<double> ra(levels), rb(levels);
        a.row_into(i, from, k, ra);
        b.row_into(i, from, k, rb);
        EXPECT_EQ(ra, rb);
      }
}

}  // namespace

TEST(model_io, parametric_round_trip) {
  ParametricTransition p;
  p.space = BidSpace{0.5, 5.0, 0.5};
  p.bandwidth = 0.7;
  p.weights = {Features{0.1 / 3.0, 1e-17, -2.5, 0.3, 1.0 / 7.0}, Features{1, 0, 0, 0, 0}};
  p.final_loss = {0.123456789012345, 0.0};
  p.bandwidths = {0.125, 1.0 / 3.0};
  BehaviorModel model(p);
  std::stringstream ss;
  save_model(ss, model);
  auto back = load_model(ss);
  ASSERT_TRUE(back.is_parametric());
  EXPECT_EQ(back.parametric().weights, p.weights);
  EXPECT_EQ(back.parametric().final_loss, p.final_loss);
  EXPECT_EQ(back.parametric().bandwidths, p.bandwidths);
  EXPECT_EQ(back.parametric().bandwidth, p.bandwidth);
  expect_same_rows(model, back);
}

TEST(model_io, tabular_round_trip) {
  AdvertiserHistory h;
  for (int t = 0; t < 40; ++t)
    h.push_back({0.5 + 0.5 * (t % 4), KpiReport{std::uint64_t(10 + t), std::uint64_t(t % 5),
                                                0.1 * t / 3.0},
                 0.5 + 0.5 * ((t * 7) % 4)});
  std::vector<AdvertiserHistory> histories{h, h};
  BehaviorModel model(estimate_tabular(histories, BidSpace{0.5, 2.0, 0.5}, {}, 1e-3));
  std::stringstream ss;
  save_model(ss, model);
  auto back = load_model(ss);
  ASSERT_FALSE(back.is_parametric());
  EXPECT_EQ(back.tabular().epsilon(), 1e-3);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(back.tabular().buckets(i), model.tabular().buckets(i));
  expect_same_rows(model, back);
}

TEST(model_io, rejects_garbage) {
  std::stringstream empty;
  EXPECT_THROW(load_model(empty), DataError);
  std::stringstream wrong(R"({"format":"something-else","version":1})");
  EXPECT_THROW(load_model(wrong), DataError);
  std::stringstream truncated(
      R"({"format":"mechlearn-behavior","version":1,"bid_space":{"min_bid":0.5,"max_bid":2.0,"unit":0.5},"advertisers":2,"kind":"parametric","bandwidth":1.0})"
      "\n"
      R"({"advertiser":0,"weights":[1,0,0,0,0]})");
  EXPECT_THROW(load_model(truncated), DataError);
}

TEST(model_io, missing_file) {
  EXPECT_THROW(load_model(std::filesystem::path("/nonexistent/model.jsonl")), DataError);
}

TEST(logs, auction_round_trip) {
  std::vector<AuctionLogRecord> records;
  for (std::size_t t = 1; t <= 3; ++t)
    for (std::size_t i = 0; i < 2; ++i)
      records.push_back({t, i, 0.5 * (t + i), KpiReport{100, t + i, 1.0 / 3.0 * t}});
  std::stringstream ss;
  write_auction_log(ss, records);
  EXPECT_EQ(read_auction_log(ss), records);
}

TEST(logs, user_round_trip) {
  std::vector<UserLogRecord> records{{1, 10}, {2, 0}, {3, 12345678901ull}};
  std::stringstream ss;
  write_user_log(ss, records);
  EXPECT_EQ(read_user_log(ss), records);
}

TEST(logs, rejects_gaps_duplicates_and_bad_kpi) {
  std::stringstream gap(
      "{\"t\":1,\"advertiser\":0,\"bid\":1,\"impressions\":1,\"clicks\":0,\"avg_cpc\":0}\n"
      "{\"t\":3,\"advertiser\":0,\"bid\":1,\"impressions\":1,\"clicks\":0,\"avg_cpc\":0}\n");
  EXPECT_THROW(read_auction_log(gap), DataError);
  std::stringstream dup(
      "{\"t\":1,\"advertiser\":0,\"bid\":1,\"impressions\":1,\"clicks\":0,\"avg_cpc\":0}\n"
      "{\"t\":1,\"advertiser\":0,\"bid\":1,\"impressions\":1,\"clicks\":0,\"avg_cpc\":0}\n");
  EXPECT_THROW(read_auction_log(dup), DataError);
  std::stringstream clicks(
      "{\"t\":1,\"advertiser\":0,\"bid\":1,\"impressions\":1,\"clicks\":4,\"avg_cpc\":1}\n");
  EXPECT_THROW(read_auction_log(clicks), DataError);
  std::stringstream junk("not json\n");
  EXPECT_THROW(read_auction_log(junk), DataError);
  std::stringstream users("{\"t\":2,\"users\":3}\n");
  EXPECT_THROW(read_user_log(users), DataError);
}

TEST(logs, histories_and_pool) {
  std::vector<AuctionLogRecord> records;
  for (std::size_t t = 1; t <= 4; ++t)
    for (std::size_t i = 0; i < 2; ++i)
      records.push_back({t, i, double(t + 10 * i), KpiReport{5, 1, double(t)}});
  EXPECT_EQ(log_periods(records), 4u);
  EXPECT_EQ(log_advertisers(records), 2u);
  auto hist = bid_history(records, 3);
  ASSERT_EQ(hist.size(), 3u);
  EXPECT_EQ(hist[2], (BidState{3.0, 13.0}));
  auto transitions = transition_histories(records, 4);
  ASSERT_EQ(transitions.size(), 2u);
  ASSERT_EQ(transitions[1].size(), 3u);
  EXPECT_EQ(transitions[1][0].bid, 11.0);
  EXPECT_EQ(transitions[1][0].next_bid, 12.0);
  std::vector<UserLogRecord> users{{1, 7}, {2, 9}, {3, 11}};
  EXPECT_EQ(user_pool(users, 2), (UserPool{7, 9}));
}
