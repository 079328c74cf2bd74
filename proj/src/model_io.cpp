#include "mechlearn/model_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "mechlearn/error.hpp"

namespace mechlearn {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "mechlearn-behavior";
constexpr int kVersion = 1;

json space_to_json(const BidSpace& s) {
  return {{"min_bid", s.min_bid}, {"max_bid", s.max_bid}, {"unit", s.unit}};
}

BidSpace space_from_json(const json& j) {
  return BidSpace{j.at("min_bid").get<double>(), j.at("max_bid").get<double>(),
                  j.at("unit").get<double>()};
}

json next_line(std::istream& in, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    return json::parse(line);
  }
  throw DataError(std::string("model file: missing ") + what);
}

}  // namespace

void save_model(std::ostream& out, const BehaviorModel& model) {
  json header{{"format", kFormat}, {"version", kVersion},
              {"bid_space", space_to_json(model.space())},
              {"advertisers", model.advertiser_count()}};
  if (model.is_parametric()) {
    const auto& p = model.parametric();
    header["kind"] = "parametric";
    header["bandwidth"] = p.bandwidth;
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < p.advertiser_count(); ++i) {
      json line{{"advertiser", i}, {"weights", p.weights[i]}};
      if (!p.bandwidths.empty()) line["bandwidth"] = p.bandwidths[i];
      if (i < p.final_loss.size()) line["loss"] = p.final_loss[i];
      out << line.dump() << '\n';
    }
    return;
  }
  const auto& t = model.tabular();
  header["kind"] = "tabular";
  header["epsilon"] = t.epsilon();
  out << header.dump() << '\n';
  const std::size_t levels = t.levels();
  for (std::size_t i = 0; i < t.advertiser_count(); ++i) {
    const auto& b = t.buckets(i);
    std::vector<double> table;
    table.reserve(b.bucket_count() * levels * levels);
    for (std::size_t k = 0; k < b.bucket_count(); ++k)
      for (std::size_t from = 0; from < levels; ++from) {
        const auto row = t.row(i, k, from);
        table.insert(table.end(), row.begin(), row.end());
      }
    json line{{"advertiser", i},
              {"edges", {{"impressions", b.impressions}, {"clicks", b.clicks}, {"cpc", b.cpc}}},
              {"table", table}};
    out << line.dump() << '\n';
  }
}

BehaviorModel load_model(std::istream& in) {
  try {
    const json header = next_line(in, "header");
    if (header.value("format", "") != kFormat) throw DataError("model file: unknown format");
    if (header.at("version").get<int>() != kVersion)
      throw DataError("model file: unsupported version");
    const BidSpace space = space_from_json(header.at("bid_space"));
    const auto m = header.at("advertisers").get<std::size_t>();
    const auto kind = header.at("kind").get<std::string>();

    if (kind == "parametric") {
      ParametricTransition p;
      p.space = space;
      p.bandwidth = header.at("bandwidth").get<double>();
      for (std::size_t i = 0; i < m; ++i) {
        const json line = next_line(in, "advertiser line");
        if (line.at("advertiser").get<std::size_t>() != i)
          throw DataError("model file: advertiser lines out of order");
        p.weights.push_back(line.at("weights").get<Features>());
        if (line.contains("bandwidth")) p.bandwidths.push_back(line["bandwidth"].get<double>());
        if (line.contains("loss")) p.final_loss.push_back(line["loss"].get<double>());
      }
      return BehaviorModel(std::move(p));
    }
    if (kind != "tabular") throw DataError("model file: unknown model kind '" + kind + "'");

    std::vector<KpiBuckets> buckets;
    std::vector<std::vector<double>> tables;
    for (std::size_t i = 0; i < m; ++i) {
      const json line = next_line(in, "advertiser line");
      if (line.at("advertiser").get<std::size_t>() != i)
        throw DataError("model file: advertiser lines out of order");
      const auto& e = line.at("edges");
      buckets.push_back(KpiBuckets{e.at("impressions").get<std::vector<double>>(),
                                   e.at("clicks").get<std::vector<double>>(),
                                   e.at("cpc").get<std::vector<double>>()});
      tables.push_back(line.at("table").get<std::vector<double>>());
    }
    TabularTransition t(space, buckets, header.at("epsilon").get<double>());
    const std::size_t levels = t.levels();
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t rows = buckets[i].bucket_count() * levels;
      if (tables[i].size() != rows * levels) throw DataError("model file: table size mismatch");
      for (std::size_t r = 0; r < rows; ++r)
        t.set_row(i, r / levels, r % levels,
                  std::span<const double>(tables[i].data() + r * levels, levels));
    }
    return BehaviorModel(std::move(t));
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  } catch (const InvalidInput& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const BehaviorModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  save_model(out, model);
  if (!out) throw DataError("write failed: " + path.string());
}

BehaviorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return load_model(in);
}

}  // namespace mechlearn
