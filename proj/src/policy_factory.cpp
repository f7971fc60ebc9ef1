#include "layermig/policy_factory.hpp"

#include "layermig/schedulers.hpp"

namespace layermig {

UnknownPolicy::UnknownPolicy(const std::string& name) : std::invalid_argument("unknown policy '" + name + "'") {}

const std::vector<std::string>& baseline_names() {
  static const std::vector<std::string> names{"monkey", "kube", "dep_soft", "down", "ga", "de", "pso"};
  return names;
}

std::unique_ptr<Policy> make_baseline(const std::string& name, const BaselineOptions& o) {
  if (name == "monkey") return std::make_unique<MonkeyPolicy>();
  if (name == "kube") return std::make_unique<KubePolicy>();
  if (name == "dep_soft") return std::make_unique<DepSoftPolicy>(o.dep_soft_threshold);
  if (name == "down") return std::make_unique<DownPolicy>();
  if (name == "ga") return std::make_unique<MetaheuristicPolicy>(MetaVariant::kGA, o.meta);
  if (name == "de") return std::make_unique<MetaheuristicPolicy>(MetaVariant::kDE, o.meta);
  if (name == "pso") return std::make_unique<MetaheuristicPolicy>(MetaVariant::kPSO, o.meta);
  throw UnknownPolicy(name);
}

}  // namespace layermig
