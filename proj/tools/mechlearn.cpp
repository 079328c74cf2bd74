// mechlearn: command-line driver.
//
//   mechlearn gen      --config C [--seed S] [--out DIR]
//   mechlearn learn    --config C [--logs DIR] [--out DIR]
//   mechlearn optimize --config C [--logs DIR] [--model FILE] [--delta D] [--horizon N]
//   mechlearn evaluate --config C --alpha LABEL=VALUE ... [--out DIR]
//   mechlearn compare  --config C [--out DIR] [--delta D] [--horizon N]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mechlearn/error.hpp"
#include "mechlearn/experiment.hpp"
#include "mechlearn/model_io.hpp"

namespace fs = std::filesystem;
using namespace mechlearn;

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> delta;
  std::optional<std::size_t> horizon;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment config (JSON)")->required();
  cmd->add_option("--seed", args.seed, "master seed");
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--delta", args.delta, "fitness cache radius");
  cmd->add_option("--horizon", args.horizon, "simulated periods per fitness evaluation");
}

ExperimentConfig resolve(const CommonArgs& args) {
  ExperimentConfig config = load_config(args.config);
  if (args.seed) config.seed = *args.seed;
  if (args.out) config.output_dir = *args.out;
  if (args.delta) config.delta = *args.delta;
  if (args.horizon) config.horizon = *args.horizon;
  config.validate();
  return config;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

void write_agents(const fs::path& path, const MixtureAssignment& agents) {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : agents.kinds) kinds.push_back(std::string(agent_kind_name(k)));
  nlohmann::json j{{"proportions", agents.proportions}, {"kinds", kinds}};
  open_output(path) << j.dump(2) << '\n';
}

void write_report(const fs::path& dir, const EvaluationReport& report) {
  prepare_dir(dir);
  {
    auto out = open_output(dir / "revenue.tsv");
    write_revenue_table(out, report);
  }
  {
    auto out = open_output(dir / "summary.tsv");
    write_summary(out, report);
  }
  auto out = open_output(dir / "replicates.tsv");
  write_replicates(out, report);
  write_summary(std::cout, report);
}

int cmd_gen(const CommonArgs& args) {
  const auto config = resolve(args);
  prepare_dir(config.output_dir);
  const auto log = gen_synthetic(config.scenario, config.train_periods, config.seed);
  write_auction_log(config.output_dir / "auctions.jsonl", log.run.auctions);
  write_user_log(config.output_dir / "users.jsonl", log.run.users);
  write_agents(config.output_dir / "agents.json", log.agents);
  return 0;
}

int cmd_learn(const CommonArgs& args, const std::string& logs) {
  const auto config = resolve(args);
  const fs::path dir = logs.empty() ? config.output_dir : fs::path(logs);
  const auto auctions = read_auction_log(dir / "auctions.jsonl");
  const auto model = learn_model(config, auctions);
  prepare_dir(config.output_dir);
  save_model(config.output_dir / "model.jsonl", model);
  return 0;
}

int cmd_optimize(const CommonArgs& args, const std::string& logs, const std::string& model_path) {
  const auto config = resolve(args);
  const fs::path dir = logs.empty() ? config.output_dir : fs::path(logs);
  const auto auctions = read_auction_log(dir / "auctions.jsonl");
  const auto users = read_user_log(dir / "users.jsonl");
  const auto model = model_path.empty() ? learn_model(config, auctions) : load_model(model_path);
  const auto result = run_boa(config, model, auctions, users, config.seed);
  prepare_dir(config.output_dir);
  {
    auto out = open_output(config.output_dir / "optimizer_report.tsv");
    write_optimizer_report(out, result.gp);
  }
  auto out = open_output(config.output_dir / "boa.json");
  write_boa_result(out, result);
  write_boa_result(std::cout, result);
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::vector<std::string>& specs) {
  const auto config = resolve(args);
  std::vector<LabeledMechanism> mechanisms;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--alpha expects LABEL=VALUE: " + spec);
    try {
      std::size_t used = 0;
      const std::string value = spec.substr(eq + 1);
      const double alpha = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      mechanisms.push_back({spec.substr(0, eq), alpha});
    } catch (const std::logic_error&) {
      throw ConfigError("--alpha: bad value in " + spec);
    }
  }
  write_report(config.output_dir, evaluate_mechanisms(config, mechanisms));
  return 0;
}

int cmd_compare(const CommonArgs& args) {
  const auto config = resolve(args);
  write_report(config.output_dir, compare_mechanisms(config));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn advertiser behavior from auction logs and search GSP quality exponents"};
  app.require_subcommand(1);

  CommonArgs gen_args, learn_args, opt_args, eval_args, cmp_args;
  std::string learn_logs, opt_logs, opt_model;
  std::vector<std::string> alphas;

  auto* gen = app.add_subcommand("gen", "generate synthetic auction and user logs under GSP");
  add_common(gen, gen_args);
  auto* learn = app.add_subcommand("learn", "fit the advertiser behavior model");
  add_common(learn, learn_args);
  learn->add_option("--logs", learn_logs, "directory holding auctions.jsonl");
  auto* opt = app.add_subcommand("optimize", "search the quality exponent");
  add_common(opt, opt_args);
  opt->add_option("--logs", opt_logs, "directory holding auctions.jsonl and users.jsonl");
  opt->add_option("--model", opt_model, "previously learned model file");
  auto* eval = app.add_subcommand("evaluate", "compare labeled quality exponents");
  add_common(eval, eval_args);
  eval->add_option("--alpha", alphas, "LABEL=VALUE")->required();
  auto* cmp = app.add_subcommand("compare", "run BOA, GSP, WCA and DLA head to head");
  add_common(cmp, cmp_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen(gen_args);
    if (*learn) return cmd_learn(learn_args, learn_logs);
    if (*opt) return cmd_optimize(opt_args, opt_logs, opt_model);
    if (*eval) return cmd_evaluate(eval_args, alphas);
    if (*cmp) return cmd_compare(cmp_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return 4;
  } catch (const InvalidInput& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
