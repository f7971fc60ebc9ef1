// layermig: run, sweep, train and evaluate container-migration schedulers.
//
//   layermig run   --policy monkey --nodes 9 --tasks 200 --seeds 20
//   layermig sweep --axis nodes --values 4,9,16 --policies monkey,kube,dep_soft
//   layermig train --toy --episodes 300
//   layermig eval  --toy --checkpoint out/train/checkpoint.json --seeds 20
//
// Outputs go to --out, or to $LAYERMIG_OUT/<command>[-<policy>] (default
// root "out"). Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "layermig/experiment.hpp"

namespace {

using namespace layermig;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string config_path;
  bool toy = false;
  std::string out;
  int nodes = 0;
  int tasks = -1;
  int seeds = 0;
  std::uint64_t seed_base = 1;
  std::string trace;
  std::string storage_check;
  int arrival_slices = 0;
};

void add_common(CLI::App& app, CommonFlags& f) {
  app.add_option("--config", f.config_path, "JSON spec; flags override its values")->check(CLI::ExistingFile);
  app.add_flag("--toy", f.toy, "start from the small 3-node learning scenario");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--nodes", f.nodes, "number of edge nodes")->check(CLI::PositiveNumber);
  app.add_option("--tasks", f.tasks, "tasks per episode (sets the arrival rate too)")->check(CLI::NonNegativeNumber);
  app.add_option("--arrival-slices", f.arrival_slices, "slices over which --tasks arrive")->check(CLI::PositiveNumber);
  app.add_option("--seeds", f.seeds, "number of episode seeds")->check(CLI::PositiveNumber);
  app.add_option("--seed-base", f.seed_base, "first episode seed");
  app.add_option("--trace", f.trace, "mobility trace CSV (user_id,timestamp,lat,lon)");
  app.add_option("--storage-check", f.storage_check, "occupancy | missing_bytes")
      ->check(CLI::IsMember({"occupancy", "missing_bytes"}));
}

std::string output_root() {
  const char* env = std::getenv("LAYERMIG_OUT");
  return env && *env ? env : "out";
}

ExperimentSpec build_spec(const CommonFlags& f, const std::string& default_dir) {
  ExperimentSpec spec;
  if (f.toy) spec.sim = toy_config();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("cannot parse " + f.config_path + ": " + e.what());
    }
    merge_json(doc, spec);
  }
  if (f.arrival_slices > 0) spec.arrival_slices = f.arrival_slices;
  if (f.nodes > 0) spec.sim.num_nodes = f.nodes;
  if (f.tasks >= 0) set_task_count(spec, f.tasks);
  if (f.seeds > 0) spec.seeds = ExperimentSpec::seed_range(f.seed_base, f.seeds);
  if (!f.trace.empty()) spec.sim.trace_path = f.trace;
  if (!f.storage_check.empty()) {
    spec.sim.storage_check = f.storage_check == "occupancy" ? StorageCheck::kOccupancy : StorageCheck::kMissingBytes;
  }
  spec.output_dir = f.out.empty() ? output_root() + "/" + default_dir : f.out;
  return spec;
}

void print_summary(const RunSummary& s) {
  std::printf("%-9s seeds=%d  total=%.4f s (sd %.4f)  migration=%.4f  computation=%.4f  deployment=%.4f  backhaul=%.4f\n",
              s.policy.c_str(), s.seeds, s.total_s.mean, s.total_s.std, s.migration_s.mean, s.computation_s.mean,
              s.deployment_s.mean, s.backhaul_s.mean);
}

void require_policy(const std::string& name) {
  const auto names = policy_names();
  if (std::find(names.begin(), names.end(), name) != names.end()) return;
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  throw UsageError("unknown policy '" + name + "'; valid policies: " + list);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-aware container migration simulator"};
  app.require_subcommand(1);

  CommonFlags run_f, sweep_f, train_f, eval_f;
  std::string policy = "dep_soft";
  std::string checkpoint;
  double threshold = -1.0;
  int budget = 0;

  auto* run_cmd = app.add_subcommand("run", "run one policy over a seed list");
  add_common(*run_cmd, run_f);
  run_cmd->add_option("--policy", policy, "scheduler name");
  run_cmd->add_option("--checkpoint", checkpoint, "checkpoint for --policy ppcm");
  run_cmd->add_option("--threshold", threshold, "dep_soft score threshold in [0, 1]");
  run_cmd->add_option("--budget", budget, "ga/de/pso fitness evaluations per slice")->check(CLI::PositiveNumber);

  std::string axis = "nodes";
  std::string values_s = "4,9,16";
  std::string policies_s = "monkey,kube,dep_soft,down,ga,de,pso";
  auto* sweep_cmd = app.add_subcommand("sweep", "compare policies across node or task counts");
  add_common(*sweep_cmd, sweep_f);
  sweep_cmd->add_option("--axis", axis, "nodes | tasks")->check(CLI::IsMember({"nodes", "tasks"}));
  sweep_cmd->add_option("--values", values_s, "comma-separated ascending values");
  sweep_cmd->add_option("--policies", policies_s, "comma-separated policy names");
  sweep_cmd->add_option("--checkpoint", checkpoint, "checkpoint when ppcm is included");
  sweep_cmd->add_option("--budget", budget, "ga/de/pso fitness evaluations per slice")->check(CLI::PositiveNumber);

  rl::TrainConfig tc;
  auto* train_cmd_app = app.add_subcommand("train", "train the PPCM agent");
  add_common(*train_cmd_app, train_f);
  train_cmd_app->add_option("--episodes", tc.episodes, "training episodes")->check(CLI::NonNegativeNumber);
  train_cmd_app->add_option("--seed", tc.seed, "training seed");
  train_cmd_app->add_option("--lr", tc.ppo.lr, "Adam learning rate");
  train_cmd_app->add_option("--epochs", tc.ppo.epochs, "PPO epochs per update");
  train_cmd_app->add_option("--batch", tc.ppo.batch, "minibatch size");
  train_cmd_app->add_option("--gamma", tc.ppo.gamma, "discount");
  train_cmd_app->add_option("--lambda", tc.ppo.lambda, "GAE lambda");
  train_cmd_app->add_option("--clip", tc.ppo.clip, "PPO clip epsilon");
  train_cmd_app->add_option("--entropy-coef", tc.ppo.entropy_coef, "entropy bonus coefficient");
  train_cmd_app->add_option("--reward-scale", tc.ppo.reward_scale, "rewards are divided by this");
  train_cmd_app->add_option("--max-grad-norm", tc.ppo.max_grad_norm, "gradient norm clip (<= 0 disables)");
  train_cmd_app->add_option("--expert", tc.expert, "demonstration scheduler, or none");
  train_cmd_app->add_option("--expert-episodes", tc.ppo.expert_episodes, "episodes with demonstrations");
  train_cmd_app->add_option("--eval-every", tc.eval_every, "evaluate every k episodes (0 = never)");
  train_cmd_app->add_option("--eval-episodes", tc.eval_episodes, "episodes per evaluation");
  train_cmd_app->add_option("--clone-epochs", tc.clone_epochs, "cloning passes per demonstration subset");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained checkpoint");
  add_common(*eval_cmd, eval_f);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run_cmd) {
      require_policy(policy);
      ExperimentSpec spec = build_spec(run_f, "run-" + policy);
      spec.policy = policy;
      if (!checkpoint.empty()) spec.checkpoint = checkpoint;
      if (threshold >= 0.0) spec.baseline.dep_soft_threshold = threshold;
      if (budget > 0) spec.baseline.meta.budget = budget;
      print_summary(run(spec));
      std::cout << "wrote " << spec.output_dir << "\n";
    } else if (*sweep_cmd) {
      const auto policies = split(policies_s);
      for (const auto& p : policies) require_policy(p);
      std::vector<int> values;
      for (const auto& v : split(values_s)) {
        try {
          values.push_back(std::stoi(v));
        } catch (const std::exception&) {
          throw UsageError("--values: '" + v + "' is not an integer");
        }
      }
      ExperimentSpec spec = build_spec(sweep_f, "sweep-" + axis);
      if (!checkpoint.empty()) spec.checkpoint = checkpoint;
      if (budget > 0) spec.baseline.meta.budget = budget;
      const auto rows = sweep(spec, parse_axis(axis), values, policies);
      for (const auto& r : rows) {
        std::printf("%s=%d  ", axis.c_str(), r.value);
        print_summary(r.summary);
      }
      std::cout << "wrote " << spec.output_dir << "\n";
    } else if (*train_cmd_app) {
      ExperimentSpec spec = build_spec(train_f, "train");
      // Flags given explicitly win over the config file.
      rl::TrainConfig merged = spec.train;
      for (const CLI::Option* opt : train_cmd_app->get_options()) {
        if (opt->count() == 0) continue;
        const std::string n = opt->get_name();
        if (n == "--episodes") merged.episodes = tc.episodes;
        else if (n == "--seed") merged.seed = tc.seed;
        else if (n == "--lr") merged.ppo.lr = tc.ppo.lr;
        else if (n == "--epochs") merged.ppo.epochs = tc.ppo.epochs;
        else if (n == "--batch") merged.ppo.batch = tc.ppo.batch;
        else if (n == "--gamma") merged.ppo.gamma = tc.ppo.gamma;
        else if (n == "--lambda") merged.ppo.lambda = tc.ppo.lambda;
        else if (n == "--clip") merged.ppo.clip = tc.ppo.clip;
        else if (n == "--entropy-coef") merged.ppo.entropy_coef = tc.ppo.entropy_coef;
        else if (n == "--reward-scale") merged.ppo.reward_scale = tc.ppo.reward_scale;
        else if (n == "--max-grad-norm") merged.ppo.max_grad_norm = tc.ppo.max_grad_norm;
        else if (n == "--expert") merged.expert = tc.expert;
        else if (n == "--expert-episodes") merged.ppo.expert_episodes = tc.ppo.expert_episodes;
        else if (n == "--eval-every") merged.eval_every = tc.eval_every;
        else if (n == "--eval-episodes") merged.eval_episodes = tc.eval_episodes;
        else if (n == "--clone-epochs") merged.clone_epochs = tc.clone_epochs;
      }
      spec.train = merged;
      if (spec.train.expert != "none") {
        const auto& names = baseline_names();
        if (std::find(names.begin(), names.end(), spec.train.expert) == names.end()) {
          throw UsageError("unknown expert '" + spec.train.expert + "'");
        }
      }
      try {
        spec.train.ppo.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto result = train_cmd(spec);
      if (std::isfinite(result.best_eval_latency_s)) {
        std::printf("episodes=%zu  best eval latency=%.4f s at episode %d%s\n", result.log.size(),
                    result.best_eval_latency_s, result.best_episode, result.diverged ? "  (diverged)" : "");
      } else {
        // No evaluation ran; the checkpoint is the final parameters.
        std::printf("episodes=%zu  no evaluation; checkpoint from episode %d%s\n", result.log.size(),
                    result.best_episode, result.diverged ? "  (diverged)" : "");
      }
      if (result.diverged) std::cerr << "training stopped: " << result.divergence << "\n";
      std::cout << "wrote " << spec.output_dir << "\n";
      return result.diverged ? kExitRuntime : 0;
    } else if (*eval_cmd) {
      ExperimentSpec spec = build_spec(eval_f, "eval");
      spec.policy = "ppcm";
      spec.checkpoint = checkpoint;
      print_summary(run(spec));
      std::cout << "wrote " << spec.output_dir << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnknownPolicy& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
