#include "layermig/metaheuristics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "layermig/constraints.hpp"

namespace layermig {

namespace {

constexpr std::uint64_t kMetaStream = 0x3E7A;
// Beyond this many candidates, unvisited points are found by sampling rather
// than by scanning the enumeration.
constexpr double kEnumerableSpace = 1e6;

using Genes = std::vector<int>;

// Memoized evaluator that hands out each distinct candidate at most once.
class Search {
 public:
  Search(const WindowProblem& p, int budget, Rng& rng) : p_(p), budget_(budget), rng_(rng), space_(p.space_size()) {}

  bool done() const {
    return evaluations_ >= budget_ || static_cast<double>(evaluations_) >= space_;
  }
  int evaluations() const { return evaluations_; }
  const Genes& best() const { return best_; }
  double best_fitness() const { return best_fitness_; }

  bool visited(const Genes& g) const { return memo_.count(g) != 0; }

  double fitness(const Genes& g) const { return memo_.at(g); }

  // Evaluates `g`, replacing it by an unvisited neighbour first if needed.
  // Returns false when no unvisited candidate could be produced.
  bool evaluate(Genes& g) {
    if (done()) return false;
    if (visited(g) && !make_unvisited(g)) return false;
    const double f = window_fitness(p_, g);
    memo_.emplace(g, f);
    ++evaluations_;
    if (evaluations_ == 1 || f > best_fitness_ || (f == best_fitness_ && g < best_)) {
      best_ = g;
      best_fitness_ = f;
    }
    return true;
  }

  Genes random_candidate() {
    Genes g(p_.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<int>(rng_.index(p_.domains[i].size()));
    return g;
  }

 private:
  bool make_unvisited(Genes& g) {
    for (int attempt = 0; attempt < 8 && visited(g); ++attempt) {
      const std::size_t i = rng_.index(g.size());
      g[i] = static_cast<int>(rng_.index(p_.domains[i].size()));
    }
    if (!visited(g)) return true;
    if (space_ <= kEnumerableSpace) {
      // Scan the mixed-radix enumeration from a random start.
      const auto total = static_cast<std::uint64_t>(space_);
      std::uint64_t start = rng_.next_u64() % total;
      for (std::uint64_t k = 0; k < total; ++k) {
        decode((start + k) % total, g);
        if (!visited(g)) return true;
      }
      return false;
    }
    for (int attempt = 0; attempt < 1000; ++attempt) {
      g = random_candidate();
      if (!visited(g)) return true;
    }
    return false;
  }

  void decode(std::uint64_t code, Genes& g) const {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto radix = static_cast<std::uint64_t>(p_.domains[i].size());
      g[i] = static_cast<int>(code % radix);
      code /= radix;
    }
  }

  const WindowProblem& p_;
  int budget_;
  Rng& rng_;
  double space_;
  std::map<Genes, double> memo_;
  int evaluations_ = 0;
  Genes best_;
  double best_fitness_ = -std::numeric_limits<double>::infinity();
};

int clamp_gene(double v, std::size_t domain) {
  const double r = std::round(v);
  return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(domain - 1)));
}

// Fills the initial population with distinct candidates.
std::vector<Genes> initial_population(Search& search, int size) {
  std::vector<Genes> pop;
  for (int i = 0; i < size && !search.done(); ++i) {
    Genes g = search.random_candidate();
    if (!search.evaluate(g)) break;
    pop.push_back(std::move(g));
  }
  return pop;
}

void run_ga(Search& search, std::vector<Genes> pop, const WindowProblem& p, const MetaConfig& c, Rng& rng) {
  auto tournament = [&]() -> const Genes& {
    std::size_t best = rng.index(pop.size());
    for (int k = 1; k < c.tournament; ++k) {
      const std::size_t j = rng.index(pop.size());
      if (search.fitness(pop[j]) > search.fitness(pop[best])) best = j;
    }
    return pop[best];
  };
  while (!search.done()) {
    std::vector<std::size_t> order(pop.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return search.fitness(pop[a]) > search.fitness(pop[b]); });
    std::vector<Genes> next;
    for (int e = 0; e < c.elites && e < static_cast<int>(order.size()); ++e) next.push_back(pop[order[e]]);
    while (next.size() < pop.size() && !search.done()) {
      Genes child = tournament();
      const Genes& other = tournament();
      if (child.size() > 1 && rng.bernoulli(c.crossover_rate)) {
        const std::size_t cut = 1 + rng.index(child.size() - 1);
        std::copy(other.begin() + static_cast<std::ptrdiff_t>(cut), other.end(),
                  child.begin() + static_cast<std::ptrdiff_t>(cut));
      }
      for (std::size_t i = 0; i < child.size(); ++i) {
        if (rng.bernoulli(c.mutation_rate)) child[i] = static_cast<int>(rng.index(p.domains[i].size()));
      }
      if (!search.evaluate(child)) return;
      next.push_back(std::move(child));
    }
    pop = std::move(next);
  }
}

void run_de(Search& search, std::vector<Genes> pop, const WindowProblem& p, const MetaConfig& c, Rng& rng) {
  const std::size_t n = pop.size();
  const std::size_t dims = p.size();
  while (!search.done()) {
    for (std::size_t i = 0; i < n && !search.done(); ++i) {
      // Distinct donors when the population allows it.
      std::size_t r[3];
      for (int k = 0; k < 3; ++k) {
        do {
          r[k] = rng.index(n);
        } while (n > 3 && (r[k] == i || (k > 0 && r[k] == r[0]) || (k > 1 && r[k] == r[1])));
      }
      Genes trial = pop[i];
      const std::size_t jrand = rng.index(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        if (d == jrand || rng.bernoulli(c.de_cr)) {
          const double v = pop[r[0]][d] + c.de_f * (pop[r[1]][d] - pop[r[2]][d]);
          trial[d] = clamp_gene(v, p.domains[d].size());
        }
      }
      if (!search.evaluate(trial)) return;
      if (search.fitness(trial) >= search.fitness(pop[i])) pop[i] = std::move(trial);
    }
  }
}

void run_pso(Search& search, std::vector<Genes> pop, const WindowProblem& p, const MetaConfig& c, Rng& rng) {
  const std::size_t n = pop.size();
  const std::size_t dims = p.size();
  std::vector<std::vector<double>> pos(n, std::vector<double>(dims));
  std::vector<std::vector<double>> vel(n, std::vector<double>(dims));
  std::vector<Genes> pbest = pop;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dims; ++d) {
      pos[i][d] = pop[i][d];
      const double span = static_cast<double>(p.domains[d].size() - 1);
      vel[i][d] = rng.uniform(-span, span) * 0.5;
    }
  }
  while (!search.done()) {
    for (std::size_t i = 0; i < n && !search.done(); ++i) {
      const Genes gbest = search.best();
      Genes g(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        const double span = static_cast<double>(p.domains[d].size() - 1);
        vel[i][d] = c.inertia * vel[i][d] + c.cognitive * rng.uniform() * (pbest[i][d] - pos[i][d]) +
                    c.social * rng.uniform() * (gbest[d] - pos[i][d]);
        vel[i][d] = std::clamp(vel[i][d], -span - 1.0, span + 1.0);
        pos[i][d] = std::clamp(pos[i][d] + vel[i][d], 0.0, span);
        g[d] = clamp_gene(pos[i][d], p.domains[d].size());
      }
      if (!search.evaluate(g)) return;
      // The evaluated point may differ from the rounded position when it was
      // already visited; the particle jumps there.
      for (std::size_t d = 0; d < dims; ++d) pos[i][d] = g[d];
      if (search.fitness(g) > search.fitness(pbest[i])) pbest[i] = g;
    }
  }
}

MetaResult finish(const WindowProblem& p, const Genes& genes, double fitness) {
  MetaResult r;
  r.genes = genes;
  r.fitness = fitness;
  for (std::size_t i = 0; i < genes.size(); ++i) r.assignment.push_back(p.domains[i][static_cast<std::size_t>(genes[i])]);
  return r;
}

}  // namespace

std::string to_string(MetaVariant v) {
  switch (v) {
    case MetaVariant::kGA: return "ga";
    case MetaVariant::kDE: return "de";
    case MetaVariant::kPSO: return "pso";
  }
  return "?";
}

double WindowProblem::space_size() const {
  double s = 1.0;
  for (const auto& d : domains) s = std::min(s * static_cast<double>(d.size()), 1e18);
  return s;
}

WindowProblem make_window(const Simulator& sim, std::span<const TaskId> window) {
  WindowProblem p;
  p.scenario = &sim.scenario();
  p.base = sim.state().infra;
  for (TaskId id : window) {
    const Task& t = sim.state().tasks.at(id);
    p.tasks.push_back(t);
    p.contexts.push_back(sim.context_for(t));
    p.domains.push_back(sim.feasible_targets(t));
  }
  return p;
}

double window_fitness(const WindowProblem& problem, std::span<const int> genes) {
  if (genes.size() != problem.size()) throw std::invalid_argument("window_fitness: gene count != window size");
  const Scenario& sc = *problem.scenario;
  Infrastructure infra = problem.base;
  double total = 0.0;
  for (std::size_t i = 0; i < genes.size(); ++i) {
    const auto& domain = problem.domains[i];
    if (genes[i] < 0 || static_cast<std::size_t>(genes[i]) >= domain.size()) {
      throw std::out_of_range("window_fitness: gene outside its domain");
    }
    const Target t = domain[static_cast<std::size_t>(genes[i])];
    Task task = problem.tasks[i];
    if (!t.is_cloud() && !feasible(infra.nodes.at(t.node()), task, sc.catalog, sc.config).feasible()) {
      total += kInfeasiblePenalty;
      continue;
    }
    total += apply_placement(sc, infra, task, t, problem.contexts[i]).delay.total_s;
  }
  return -total;
}

MetaResult metaheuristic_select(const WindowProblem& problem, MetaVariant variant, const MetaConfig& config, Rng& rng) {
  if (problem.size() == 0) return MetaResult{};
  if (config.budget < 1 || config.population < 1) throw std::invalid_argument("metaheuristic: budget and population must be positive");
  Search search(problem, config.budget, rng);
  std::vector<Genes> pop = initial_population(search, config.population);
  const double initial_best = search.best_fitness();
  if (!search.done() && !pop.empty()) {
    switch (variant) {
      case MetaVariant::kGA: run_ga(search, pop, problem, config, rng); break;
      case MetaVariant::kDE: run_de(search, pop, problem, config, rng); break;
      case MetaVariant::kPSO: run_pso(search, pop, problem, config, rng); break;
    }
  }
  MetaResult r = finish(problem, search.best(), search.best_fitness());
  r.initial_best = initial_best;
  r.evaluations = search.evaluations();
  return r;
}

MetaResult brute_force(const WindowProblem& problem) {
  if (problem.size() == 0) return MetaResult{};
  Genes g(problem.size(), 0);
  Genes best = g;
  double best_f = -std::numeric_limits<double>::infinity();
  int count = 0;
  while (true) {
    const double f = window_fitness(problem, g);
    ++count;
    if (f > best_f) {
      best_f = f;
      best = g;
    }
    // Lexicographic increment, last gene fastest.
    std::size_t i = g.size();
    while (i > 0) {
      --i;
      if (++g[i] < static_cast<int>(problem.domains[i].size())) break;
      g[i] = 0;
      if (i == 0) {
        MetaResult r = finish(problem, best, best_f);
        r.initial_best = best_f;
        r.evaluations = count;
        return r;
      }
    }
  }
}

MetaheuristicPolicy::MetaheuristicPolicy(MetaVariant variant, MetaConfig config) : variant_(variant), config_(config) {}

std::string MetaheuristicPolicy::name() const { return to_string(variant_); }

void MetaheuristicPolicy::reset(std::uint64_t seed) {
  rng_ = Rng(derive_seed(seed, kMetaStream));
  plan_.clear();
}

void MetaheuristicPolicy::begin_slice(const Simulator& sim, std::span<const TaskId> window) {
  plan_.clear();
  const WindowProblem problem = make_window(sim, window);
  const MetaResult r = metaheuristic_select(problem, variant_, config_, rng_);
  for (std::size_t i = 0; i < window.size(); ++i) plan_[window[i]] = r.assignment[i];
}

Target MetaheuristicPolicy::decide(const Simulator&, const Task& task, std::span<const Target> feasible) {
  const auto it = plan_.find(task.id);
  if (it != plan_.end() && std::find(feasible.begin(), feasible.end(), it->second) != feasible.end()) return it->second;
  return Target::cloud();
}

}  // namespace layermig
