#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "layermig/metaheuristics.hpp"
#include "layermig/sim.hpp"

namespace layermig {

struct BaselineOptions {
  double dep_soft_threshold = 0.8;
  MetaConfig meta;
};

class UnknownPolicy : public std::invalid_argument {
 public:
  explicit UnknownPolicy(const std::string& name);
};

// monkey, kube, dep_soft, down, ga, de, pso.
const std::vector<std::string>& baseline_names();
std::unique_ptr<Policy> make_baseline(const std::string& name, const BaselineOptions& options = {});

}  // namespace layermig
