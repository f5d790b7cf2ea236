#include "trustmon/harness/tool_plugin.hpp"

#include <algorithm>
#include <mutex>

#include "trustmon/deepinfer/deepinfer.hpp"
#include "trustmon/error.hpp"
#include "trustmon/prophecy/prophecy.hpp"
#include "trustmon/selfchecker/selfchecker.hpp"

namespace trustmon::harness {

namespace {

class SelfCheckerTool final : public ToolPlugin {
 public:
  std::string_view name() const override { return "selfchecker"; }

  void validate_config(const nlohmann::json& config) const override {
    selfchecker::SelfCheckerConfig::from_json(config);
  }

  std::string analyze(const model::Network& net, const data::Splits& splits,
                      const nlohmann::json& config) const override {
    const auto cfg = selfchecker::SelfCheckerConfig::from_json(config);
    return selfchecker::serialize(selfchecker::analyze(net, splits.train, splits.val, cfg));
  }

  InferOutput infer(std::string_view artifacts, const model::Network& net,
                    const data::Dataset& test) const override {
    const auto art = selfchecker::deserialize(artifacts);
    InferOutput out;
    for (std::size_t r = 0; r < test.size(); ++r) {
      out.verdicts.push_back(selfchecker::infer(art, net, test.row(r)));
    }
    return out;
  }
};

class DeepInferTool final : public ToolPlugin {
 public:
  std::string_view name() const override { return "deepinfer"; }

  void validate_config(const nlohmann::json& config) const override {
    deepinfer::DeepInferConfig::from_json(config);
  }

  std::string analyze(const model::Network& net, const data::Splits& splits,
                      const nlohmann::json& config) const override {
    const auto cfg = deepinfer::DeepInferConfig::from_json(config);
    return deepinfer::serialize(deepinfer::analyze(net, splits.train, splits.val, cfg));
  }

  InferOutput infer(std::string_view artifacts, const model::Network& net,
                    const data::Dataset& test) const override {
    const auto art = deepinfer::deserialize(artifacts);
    InferOutput out;
    std::uint64_t violations = 0;
    std::uint64_t satisfactions = 0;
    for (std::size_t r = 0; r < test.size(); ++r) {
      const auto result = deepinfer::infer(art, net, test.row(r));
      out.verdicts.push_back(result.verdict);
      violations += result.violations;
      satisfactions += result.satisfactions;
    }
    out.summary = nlohmann::ordered_json{{"anchor_layer", art.anchor_layer},
                                         {"approximate", art.approximate},
                                         {"violations", violations},
                                         {"satisfactions", satisfactions}};
    return out;
  }
};

class ProphecyTool final : public ToolPlugin {
 public:
  std::string_view name() const override { return "prophecy"; }

  void validate_config(const nlohmann::json& config) const override {
    prophecy::ProphecyConfig::from_json(config);
  }

  std::string analyze(const model::Network& net, const data::Splits& splits,
                      const nlohmann::json& config) const override {
    const auto cfg = prophecy::ProphecyConfig::from_json(config);
    return prophecy::serialize(prophecy::analyze(net, splits.train, cfg));
  }

  InferOutput infer(std::string_view artifacts, const model::Network& net,
                    const data::Dataset& test) const override {
    const auto art = prophecy::deserialize(artifacts);
    InferOutput out;
    for (std::size_t r = 0; r < test.size(); ++r) {
      out.verdicts.push_back(prophecy::infer(art, net, test.row(r)));
    }
    return out;
  }
};

struct Registry {
  std::mutex mutex;
  std::vector<std::unique_ptr<ToolPlugin>> tools;

  Registry() {
    tools.push_back(std::make_unique<SelfCheckerTool>());
    tools.push_back(std::make_unique<DeepInferTool>());
    tools.push_back(std::make_unique<ProphecyTool>());
  }
};

Registry& registry() {
  static Registry instance;
  return instance;
}

}  // namespace

const ToolPlugin& find_tool(std::string_view name) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  for (auto it = reg.tools.rbegin(); it != reg.tools.rend(); ++it) {
    if ((*it)->name() == name) return **it;
  }
  throw ConfigError("unknown tool '" + std::string(name) + "'");
}

std::vector<std::string_view> tool_names() {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  std::vector<std::string_view> names;
  for (const auto& tool : reg.tools) {
    if (std::find(names.begin(), names.end(), tool->name()) == names.end()) {
      names.push_back(tool->name());
    }
  }
  return names;
}

void register_tool(std::unique_ptr<ToolPlugin> plugin) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  reg.tools.push_back(std::move(plugin));
}

}  // namespace trustmon::harness
