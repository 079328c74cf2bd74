#include "mechlearn/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mechlearn/error.hpp"

namespace mechlearn {

using nlohmann::json;

void Scenario::validate() const {
  space.validate();
  validate_profiles(advertisers);
  mechanism(1.0);
  if (users_min > users_max) throw InvalidInput("scenario: users.min exceeds users.max");
  for (const auto& a : advertisers)
    if (space.snap(a.initial_bid) != a.initial_bid)
      throw InvalidInput("scenario: initial bid of advertiser " + std::to_string(a.id) +
                         " is not a bid level");
  if (kinds && kinds->size() != advertisers.size())
    throw InvalidInput("scenario: one agent kind per advertiser required");
  if (proportions) largest_remainder(*proportions, advertisers.size());
  if (sandbox.am_draws == 0) throw InvalidInput("scenario: am_draws must be positive");
}

Mechanism Scenario::mechanism(double alpha) const {
  return make_mechanism(alpha, position_discounts, space);
}

MixtureAssignment Scenario::agents(std::uint64_t seed) const {
  if (kinds) {
    MixtureAssignment out;
    out.kinds = *kinds;
    for (auto k : out.kinds) out.proportions[static_cast<std::size_t>(k)] += 1.0;
    for (double& p : out.proportions) p /= static_cast<double>(out.kinds.size());
    return out;
  }
  if (proportions) return assign_mixture(advertisers.size(), *proportions, seed);
  return assign_mixture(advertisers.size(), seed);
}

BidState Scenario::initial_bids() const {
  BidState b;
  for (const auto& a : advertisers) b.push_back(a.initial_bid);
  return b;
}

Scenario parse_scenario(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    if (j.at("version").get<int>() != kScenarioVersion)
      throw ConfigError("scenario: unsupported version");
    Scenario s;
    const auto& bs = j.at("bid_space");
    s.space = BidSpace{bs.at("min_bid").get<double>(), bs.at("max_bid").get<double>(),
                       bs.at("unit").get<double>()};
    s.position_discounts = j.at("position_discounts").get<std::vector<double>>();
    if (j.contains("users")) {
      s.users_min = j["users"].at("min").get<std::uint64_t>();
      s.users_max = j["users"].at("max").get<std::uint64_t>();
    }
    std::size_t id = 0;
    for (const auto& a : j.at("advertisers")) {
      AdvertiserProfile p;
      p.id = a.value("id", id);
      p.ctr = a.at("ctr").get<double>();
      p.valuation = a.at("valuation").get<double>();
      p.initial_bid = a.at("initial_bid").get<double>();
      s.advertisers.push_back(p);
      ++id;
    }
    if (j.contains("agents")) {
      const auto& ag = j["agents"];
      if (ag.is_array()) {
        std::vector<AgentKind> kinds;
        for (const auto& k : ag) kinds.push_back(parse_agent_kind(k.get<std::string>()));
        s.kinds = std::move(kinds);
      } else if (ag.contains("proportions")) {
        s.proportions = ag["proportions"].get<std::array<double, 3>>();
      }
    }
    if (j.contains("am_draws")) s.sandbox.am_draws = j["am_draws"].get<std::size_t>();
    if (j.contains("cap_at_valuation"))
      s.sandbox.cap_at_valuation = j["cap_at_valuation"].get<bool>();
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["version"] = kScenarioVersion;
  j["bid_space"] = {{"min_bid", s.space.min_bid}, {"max_bid", s.space.max_bid},
                    {"unit", s.space.unit}};
  j["position_discounts"] = s.position_discounts;
  j["users"] = {{"min", s.users_min}, {"max", s.users_max}};
  json ads = json::array();
  for (const auto& a : s.advertisers)
    ads.push_back({{"id", a.id}, {"ctr", a.ctr}, {"valuation", a.valuation},
                   {"initial_bid", a.initial_bid}});
  j["advertisers"] = ads;
  if (s.kinds) {
    json kinds = json::array();
    for (auto k : *s.kinds) kinds.push_back(std::string(agent_kind_name(k)));
    j["agents"] = kinds;
  } else if (s.proportions) {
    j["agents"] = {{"proportions", *s.proportions}};
  } else {
    j["agents"] = {{"mixture", "dirichlet"}};
  }
  j["am_draws"] = s.sandbox.am_draws;
  j["cap_at_valuation"] = s.sandbox.cap_at_valuation;
  return j.dump(2);
}

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(slurp(path)); }

void ExperimentConfig::validate() const {
  if (train_periods < 3) throw ConfigError("config: train_periods must be at least 3");
  if (test_periods < 1) throw ConfigError("config: test_periods must be positive");
  if (horizon < 1) throw ConfigError("config: horizon must be positive");
  if (replicates < 1) throw ConfigError("config: replicates must be positive");
  if (!(delta >= 0.0)) throw ConfigError("config: delta must be nonnegative");
  if (alpha_grid.empty()) throw ConfigError("config: alpha grid is empty");
  try {
    gp.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    const json j = json::parse(json_text);
    c.scenario_path = j.at("scenario").get<std::string>();
    if (c.scenario_path.is_relative()) c.scenario_path = base_dir / c.scenario_path;
    c.train_periods = j.value("train_periods", c.train_periods);
    c.test_periods = j.value("test_periods", c.test_periods);
    c.horizon = j.value("horizon", c.horizon);
    const auto model = j.value("model", std::string("parametric"));
    if (model == "parametric") c.model = ModelKind::Parametric;
    else if (model == "tabular") c.model = ModelKind::Tabular;
    else throw ConfigError("config: unknown model '" + model + "'");
    c.fit.learning_rate = j.value("learning_rate", c.fit.learning_rate);
    c.fit.iterations = j.value("iterations", c.fit.iterations);
    if (j.contains("bandwidth")) {
      if (j["bandwidth"].is_string()) {
        if (j["bandwidth"].get<std::string>() != "fitted")
          throw ConfigError("config: bandwidth must be a number or \"fitted\"");
        c.fit.fitted_bandwidth = true;
      } else {
        c.fit.bandwidth = j["bandwidth"].get<double>();
      }
    }
    c.buckets.bins_per_signal = j.value("bins", c.buckets.bins_per_signal);
    c.epsilon = j.value("epsilon", c.epsilon);
    if (j.contains("gp")) {
      const auto& g = j["gp"];
      c.gp.population = g.value("population", c.gp.population);
      c.gp.generations = g.value("generations", c.gp.generations);
      c.gp.crossover_rate = g.value("crossover", c.gp.crossover_rate);
      c.gp.mutation_rate = g.value("mutation", c.gp.mutation_rate);
      c.gp.reproduction_rate = g.value("reproduction", c.gp.reproduction_rate);
      c.gp.alpha_min = g.value("alpha_min", c.gp.alpha_min);
      c.gp.alpha_max = g.value("alpha_max", c.gp.alpha_max);
      c.gp.mutation_sigma = g.value("sigma", c.gp.mutation_sigma);
    }
    c.delta = j.value("delta", c.delta);
    if (j.contains("alpha_grid")) c.alpha_grid = j["alpha_grid"].get<std::vector<double>>();
    c.seed = j.value("seed", c.seed);
    c.replicates = j.value("replicates", c.replicates);
    if (j.contains("output")) {
      c.output_dir = j["output"].get<std::string>();
      if (c.output_dir.is_relative()) c.output_dir = base_dir / c.output_dir;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.scenario = load_scenario(c.scenario_path);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(slurp(path), path.parent_path());
}

}  // namespace mechlearn
