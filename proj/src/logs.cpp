#include "mechlearn/logs.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "mechlearn/error.hpp"

namespace mechlearn {

using nlohmann::json;

bool operator==(const AuctionLogRecord& a, const AuctionLogRecord& b) {
  return a.t == b.t && a.advertiser == b.advertiser && a.bid == b.bid && a.kpi == b.kpi;
}

bool operator==(const UserLogRecord& a, const UserLogRecord& b) {
  return a.t == b.t && a.users == b.users;
}

void write_auction_log(std::ostream& out, const std::vector<AuctionLogRecord>& records) {
  for (const auto& r : records) {
    json j{{"t", r.t},
           {"advertiser", r.advertiser},
           {"bid", r.bid},
           {"impressions", r.kpi.impressions},
           {"clicks", r.kpi.clicks},
           {"avg_cpc", r.kpi.avg_cpc}};
    out << j.dump() << '\n';
  }
}

void write_user_log(std::ostream& out, const std::vector<UserLogRecord>& records) {
  for (const auto& r : records) out << json{{"t", r.t}, {"users", r.users}}.dump() << '\n';
}

namespace {

template <typename Parse>
void for_each_line(std::istream& in, const char* what, Parse parse) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      parse(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(std::string(what) + " line " + std::to_string(number) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<AuctionLogRecord> read_auction_log(std::istream& in) {
  std::vector<AuctionLogRecord> records;
  for_each_line(in, "auction log", [&](const json& j) {
    AuctionLogRecord r;
    r.t = j.at("t").get<std::size_t>();
    r.advertiser = j.at("advertiser").get<std::size_t>();
    r.bid = j.at("bid").get<double>();
    r.kpi.impressions = j.at("impressions").get<std::uint64_t>();
    r.kpi.clicks = j.at("clicks").get<std::uint64_t>();
    r.kpi.avg_cpc = j.at("avg_cpc").get<double>();
    if (r.kpi.clicks > r.kpi.impressions) throw DataError("auction log: clicks exceed impressions");
    records.push_back(r);
  });
  if (records.empty()) throw DataError("auction log: no records");
  const std::size_t periods = log_periods(records);
  const std::size_t m = log_advertisers(records);
  std::vector<char> seen(periods * m, 0);
  for (const auto& r : records) {
    if (r.t < 1 || r.t > periods || r.advertiser >= m)
      throw DataError("auction log: record outside the period/advertiser range");
    char& slot = seen[(r.t - 1) * m + r.advertiser];
    if (slot) throw DataError("auction log: duplicate record for period " + std::to_string(r.t));
    slot = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw DataError("auction log: periods are not contiguous or an advertiser is missing");
  return records;
}

std::vector<UserLogRecord> read_user_log(std::istream& in) {
  std::vector<UserLogRecord> records;
  for_each_line(in, "user log", [&](const json& j) {
    records.push_back({j.at("t").get<std::size_t>(), j.at("users").get<std::uint64_t>()});
  });
  if (records.empty()) throw DataError("user log: no records");
  for (std::size_t k = 0; k < records.size(); ++k)
    if (records[k].t != k + 1) throw DataError("user log: periods must run 1, 2, ... in order");
  return records;
}

void write_auction_log(const std::filesystem::path& path,
                       const std::vector<AuctionLogRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_auction_log(out, records);
}

void write_user_log(const std::filesystem::path& path, const std::vector<UserLogRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_user_log(out, records);
}

std::vector<AuctionLogRecord> read_auction_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return read_auction_log(in);
}

std::vector<UserLogRecord> read_user_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return read_user_log(in);
}

std::size_t log_periods(const std::vector<AuctionLogRecord>& records) {
  std::size_t periods = 0;
  for (const auto& r : records) periods = std::max(periods, r.t);
  return periods;
}

std::size_t log_advertisers(const std::vector<AuctionLogRecord>& records) {
  std::size_t m = 0;
  for (const auto& r : records) m = std::max(m, r.advertiser + 1);
  return m;
}

std::vector<BidState> bid_history(const std::vector<AuctionLogRecord>& records,
                                  std::size_t periods) {
  const std::size_t m = log_advertisers(records);
  std::vector<BidState> history(periods, BidState(m, 0.0));
  for (const auto& r : records)
    if (r.t >= 1 && r.t <= periods) history[r.t - 1][r.advertiser] = r.bid;
  return history;
}

std::vector<AdvertiserHistory> transition_histories(const std::vector<AuctionLogRecord>& records,
                                                    std::size_t periods) {
  const std::size_t m = log_advertisers(records);
  std::vector<std::vector<const AuctionLogRecord*>> by_period(periods,
                                                              std::vector<const AuctionLogRecord*>(m));
  for (const auto& r : records)
    if (r.t >= 1 && r.t <= periods) by_period[r.t - 1][r.advertiser] = &r;
  std::vector<AdvertiserHistory> out(m);
  for (std::size_t t = 0; t + 1 < periods; ++t)
    for (std::size_t i = 0; i < m; ++i) {
      const auto* now = by_period[t][i];
      const auto* next = by_period[t + 1][i];
      if (!now || !next) throw DataError("auction log: missing record for a transition");
      out[i].push_back({now->bid, now->kpi, next->bid});
    }
  return out;
}

UserPool user_pool(const std::vector<UserLogRecord>& records, std::size_t periods) {
  UserPool pool;
  for (const auto& r : records)
    if (r.t <= periods) pool.push_back(r.users);
  if (pool.empty()) throw DataError("user log: no periods in range");
  return pool;
}

}  // namespace mechlearn
