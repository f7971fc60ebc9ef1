#include "layermig/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "layermig/rl/agent.hpp"

namespace layermig {

namespace fs = std::filesystem;

std::vector<std::uint64_t> ExperimentSpec::seed_range(std::uint64_t first, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(first + static_cast<std::uint64_t>(i));
  return out;
}

void set_task_count(ExperimentSpec& spec, int tasks) {
  if (tasks < 0) throw std::invalid_argument("tasks must be >= 0");
  spec.sim.task_budget = tasks;
  spec.sim.poisson_rate = static_cast<double>(tasks) / spec.arrival_slices;
}

void validate(const ExperimentSpec& spec) {
  validate(spec.sim);
  if (spec.arrival_slices < 1) throw std::invalid_argument("arrival_slices must be >= 1");
  if (spec.seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (spec.baseline.dep_soft_threshold < 0.0 || spec.baseline.dep_soft_threshold > 1.0) {
    throw std::invalid_argument("dep_soft threshold must lie in [0, 1]");
  }
  if (spec.baseline.meta.budget < 1 || spec.baseline.meta.population < 1) {
    throw std::invalid_argument("metaheuristic budget and population must be >= 1");
  }
  spec.train.ppo.validate();
}

nlohmann::json to_json(const ExperimentSpec& s) {
  const MetaConfig& m = s.baseline.meta;
  return {{"sim", to_json(s.sim)},
          {"arrival_slices", s.arrival_slices},
          {"policy", s.policy},
          {"baseline",
           {{"dep_soft_threshold", s.baseline.dep_soft_threshold},
            {"meta",
             {{"budget", m.budget},
              {"population", m.population},
              {"tournament", m.tournament},
              {"crossover_rate", m.crossover_rate},
              {"mutation_rate", m.mutation_rate},
              {"elites", m.elites},
              {"de_f", m.de_f},
              {"de_cr", m.de_cr},
              {"inertia", m.inertia},
              {"cognitive", m.cognitive},
              {"social", m.social}}}}},
          {"seeds", s.seeds},
          {"checkpoint", s.checkpoint},
          {"train", rl::to_json(s.train)}};
}

void merge_json(const nlohmann::json& doc, ExperimentSpec& s) {
  if (!doc.is_object()) throw std::invalid_argument("spec document must be a JSON object");
  if (doc.contains("sim")) merge_json(doc.at("sim"), s.sim);
  if (doc.contains("arrival_slices")) s.arrival_slices = doc.at("arrival_slices").get<int>();
  if (doc.contains("policy")) s.policy = doc.at("policy").get<std::string>();
  if (doc.contains("baseline")) {
    const auto& b = doc.at("baseline");
    if (b.contains("dep_soft_threshold")) s.baseline.dep_soft_threshold = b.at("dep_soft_threshold").get<double>();
    if (b.contains("meta")) {
      const auto& m = b.at("meta");
      MetaConfig& c = s.baseline.meta;
      auto take = [&](const char* key, auto& field) {
        if (m.contains(key)) field = m.at(key).get<std::decay_t<decltype(field)>>();
      };
      take("budget", c.budget);
      take("population", c.population);
      take("tournament", c.tournament);
      take("crossover_rate", c.crossover_rate);
      take("mutation_rate", c.mutation_rate);
      take("elites", c.elites);
      take("de_f", c.de_f);
      take("de_cr", c.de_cr);
      take("inertia", c.inertia);
      take("cognitive", c.cognitive);
      take("social", c.social);
    }
  }
  if (doc.contains("seeds")) s.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  if (doc.contains("checkpoint")) s.checkpoint = doc.at("checkpoint").get<std::string>();
  if (doc.contains("train")) rl::merge_json(doc.at("train"), s.train);
}

std::vector<std::string> policy_names() {
  std::vector<std::string> names = baseline_names();
  names.push_back("ppcm");
  return names;
}

namespace {

// Owns the agent it wraps so make_policy can return a plain Policy.
class GreedyAgentPolicy final : public Policy {
 public:
  explicit GreedyAgentPolicy(std::unique_ptr<rl::PpcmAgent> agent) : agent_(std::move(agent)) {
    agent_->set_mode(rl::AgentMode::kGreedy);
    agent_->normalizer().set_frozen(true);
  }
  std::string name() const override { return "ppcm"; }
  void reset(std::uint64_t seed) override { agent_->reset(seed); }
  Target decide(const Simulator& sim, const Task& task, std::span<const Target> feasible) override {
    return agent_->decide(sim, task, feasible);
  }

 private:
  std::unique_ptr<rl::PpcmAgent> agent_;
};

ComponentStats stats_of(const std::vector<double>& xs) {
  ComponentStats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double v = 0.0;
    for (double x : xs) v += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(v / static_cast<double>(xs.size() - 1));
  }
  return s;
}

nlohmann::json stats_json(const ComponentStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

}  // namespace

std::unique_ptr<Policy> make_policy(const ExperimentSpec& spec, const Scenario& scenario) {
  if (spec.policy == "ppcm") {
    if (spec.checkpoint.empty()) throw std::invalid_argument("policy ppcm needs a checkpoint");
    std::ifstream in(spec.checkpoint);
    if (!in) throw std::runtime_error("cannot read checkpoint '" + spec.checkpoint + "'");
    const nlohmann::json doc = nlohmann::json::parse(in);
    auto agent = std::make_unique<rl::PpcmAgent>(rl::layout_for(scenario), rl::network_config_from(doc), 0);
    agent->load_checkpoint(doc);
    return std::make_unique<GreedyAgentPolicy>(std::move(agent));
  }
  return make_baseline(spec.policy, spec.baseline);
}

nlohmann::json RunSummary::to_json() const {
  return {{"policy", policy},
          {"seeds", seeds},
          {"migration_s", stats_json(migration_s)},
          {"computation_s", stats_json(computation_s)},
          {"deployment_s", stats_json(deployment_s)},
          {"backhaul_s", stats_json(backhaul_s)},
          {"total_s", stats_json(total_s)},
          {"tasks_completed", tasks_completed},
          {"proactive_migrations", proactive_migrations},
          {"passive_migrations", passive_migrations},
          {"cloud_placements", cloud_placements},
          {"cloud_fallbacks", cloud_fallbacks}};
}

RunSummary run_policy(const ExperimentSpec& spec, const Scenario& scenario, std::ostream* task_csv) {
  validate(spec);
  const std::unique_ptr<Policy> policy = make_policy(spec, scenario);
  RunSummary s;
  s.policy = spec.policy;
  s.seeds = static_cast<int>(spec.seeds.size());
  std::vector<double> mig, comp, dep, bh, tot;
  if (task_csv) *task_csv << kTaskCsvHeader << '\n';
  for (std::size_t i = 0; i < spec.seeds.size(); ++i) {
    EpisodeMetrics m = run_episode(scenario, *policy, spec.seeds[i]);
    if (task_csv) write_task_rows(*task_csv, static_cast<int>(i), m);
    const double n = m.completions > 0 ? static_cast<double>(m.completions) : 1.0;
    mig.push_back(m.totals.migration_s / n);
    comp.push_back(m.totals.computation_s / n);
    dep.push_back(m.totals.deployment_s / n);
    bh.push_back(m.totals.backhaul_s / n);
    tot.push_back(m.totals.total_s / n);
    s.tasks_completed += m.completions;
    s.proactive_migrations += m.proactive_migrations;
    s.passive_migrations += m.passive_migrations;
    s.cloud_placements += m.cloud_placements;
    s.cloud_fallbacks += m.cloud_fallbacks;
    s.episodes.push_back(std::move(m));
  }
  const double k = static_cast<double>(spec.seeds.size());
  s.tasks_completed /= k;
  s.proactive_migrations /= k;
  s.passive_migrations /= k;
  s.cloud_placements /= k;
  s.cloud_fallbacks /= k;
  s.migration_s = stats_of(mig);
  s.computation_s = stats_of(comp);
  s.deployment_s = stats_of(dep);
  s.backhaul_s = stats_of(bh);
  s.total_s = stats_of(tot);
  return s;
}

void write_text(const std::string& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

RunSummary run(const ExperimentSpec& spec) {
  validate(spec);
  const Scenario scenario = build_scenario(spec.sim);
  if (spec.output_dir.empty()) return run_policy(spec, scenario);
  ensure_dir(spec.output_dir);
  write_text(spec.output_dir + "/spec.json", to_json(spec).dump(2) + "\n");
  auto csv = open_out(spec.output_dir + "/tasks.csv");
  RunSummary s = run_policy(spec, scenario, &csv);
  write_text(spec.output_dir + "/summary.json", s.to_json().dump(2) + "\n");
  return s;
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "nodes") return SweepAxis::kNodes;
  if (name == "tasks") return SweepAxis::kTasks;
  throw std::invalid_argument("unknown sweep axis '" + name + "' (expected nodes or tasks)");
}

std::string to_string(SweepAxis axis) { return axis == SweepAxis::kNodes ? "nodes" : "tasks"; }

std::vector<SweepRow> sweep(const ExperimentSpec& spec, SweepAxis axis, const std::vector<int>& values,
                            const std::vector<std::string>& policies) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] <= values[i - 1]) throw std::invalid_argument("sweep values must be strictly ascending");
  }
  const auto valid = policy_names();
  for (const auto& p : policies) {
    if (std::find(valid.begin(), valid.end(), p) == valid.end()) throw UnknownPolicy(p);
  }
  std::vector<SweepRow> rows;
  for (const std::string& policy : policies) {
    for (int v : values) {
      ExperimentSpec s = spec;
      s.policy = policy;
      if (axis == SweepAxis::kNodes) {
        s.sim.num_nodes = v;
      } else {
        set_task_count(s, v);
      }
      validate(s);
      const Scenario scenario = build_scenario(s.sim);
      rows.push_back(SweepRow{policy, axis, v, run_policy(s, scenario)});
    }
  }
  if (!spec.output_dir.empty()) {
    ensure_dir(spec.output_dir);
    nlohmann::json doc = to_json(spec);
    doc["sweep"] = {{"axis", to_string(axis)}, {"values", values}, {"policies", policies}};
    write_text(spec.output_dir + "/spec.json", doc.dump(2) + "\n");
    auto out = open_out(spec.output_dir + "/sweep.csv");
    write_sweep_csv(out, rows);
    nlohmann::json summaries = nlohmann::json::array();
    for (const SweepRow& r : rows) {
      nlohmann::json j = r.summary.to_json();
      j["axis"] = to_string(r.axis);
      j["value"] = r.value;
      summaries.push_back(j);
    }
    write_text(spec.output_dir + "/summary.json", summaries.dump(2) + "\n");
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepCsvHeader << '\n';
  char buf[512];
  for (const SweepRow& r : rows) {
    const RunSummary& s = r.summary;
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.policy.c_str(), to_string(r.axis).c_str(), r.value, s.seeds, s.migration_s.mean,
                  s.computation_s.mean, s.deployment_s.mean, s.backhaul_s.mean, s.total_s.mean, s.total_s.std,
                  s.proactive_migrations, s.passive_migrations, s.cloud_placements);
    out << buf;
  }
}

rl::TrainResult train_cmd(const ExperimentSpec& spec) {
  validate(spec);
  const Scenario scenario = build_scenario(spec.sim);
  rl::PpcmAgent agent(rl::layout_for(scenario), spec.train.network, spec.train.seed);
  rl::TrainResult result = rl::train(scenario, spec.train, agent);
  if (!spec.output_dir.empty()) {
    ensure_dir(spec.output_dir);
    nlohmann::json doc = to_json(spec);
    doc["policy"] = "ppcm";
    write_text(spec.output_dir + "/spec.json", doc.dump(2) + "\n");
    std::ostringstream log;
    rl::write_training_log(log, result.log);
    write_text(spec.output_dir + "/training_log.csv", log.str());
    write_text(spec.output_dir + "/checkpoint.json", result.best_checkpoint.dump() + "\n");
    write_text(spec.output_dir + "/final_checkpoint.json", agent.checkpoint().dump() + "\n");
  }
  return result;
}

}  // namespace layermig
