#pragma once

// Auction and user logs as JSON Lines, one self-describing record per line:
//   {"t":1,"advertiser":0,"bid":2.5,"impressions":100,"clicks":9,"avg_cpc":1.75}
//   {"t":1,"users":100}

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mechlearn/auction.hpp"
#include "mechlearn/behavior.hpp"

namespace mechlearn {

struct AuctionLogRecord {
  std::size_t t = 1;
  std::size_t advertiser = 0;
  double bid = 0.0;
  KpiReport kpi;
};

bool operator==(const AuctionLogRecord& a, const AuctionLogRecord& b);

struct UserLogRecord {
  std::size_t t = 1;
  std::uint64_t users = 0;
};

bool operator==(const UserLogRecord& a, const UserLogRecord& b);

void write_auction_log(std::ostream& out, const std::vector<AuctionLogRecord>& records);
void write_user_log(std::ostream& out, const std::vector<UserLogRecord>& records);

// Both readers check one record per (t, advertiser), periods contiguous from 1,
// and throw DataError otherwise.
std::vector<AuctionLogRecord> read_auction_log(std::istream& in);
std::vector<UserLogRecord> read_user_log(std::istream& in);

void write_auction_log(const std::filesystem::path& path, const std::vector<AuctionLogRecord>& records);
void write_user_log(const std::filesystem::path& path, const std::vector<UserLogRecord>& records);
std::vector<AuctionLogRecord> read_auction_log(const std::filesystem::path& path);
std::vector<UserLogRecord> read_user_log(const std::filesystem::path& path);

std::size_t log_periods(const std::vector<AuctionLogRecord>& records);
std::size_t log_advertisers(const std::vector<AuctionLogRecord>& records);

// Bid vector of each period 1..periods.
std::vector<BidState> bid_history(const std::vector<AuctionLogRecord>& records,
                                  std::size_t periods);
// (b^t, kpi^t, b^{t+1}) for t < periods, per advertiser.
std::vector<AdvertiserHistory> transition_histories(const std::vector<AuctionLogRecord>& records,
                                                    std::size_t periods);
UserPool user_pool(const std::vector<UserLogRecord>& records, std::size_t periods);

}  // namespace mechlearn
