#pragma once

#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trustmon/data/dataset.hpp"
#include "trustmon/model/network.hpp"
#include "trustmon/verdict.hpp"

namespace trustmon::harness {

struct InferOutput {
  std::vector<Verdict> verdicts;
  /// Tool-specific extras written next to the notifications, if any.
  std::optional<nlohmann::ordered_json> summary;
};

/// A detector the harness can drive through analyze and infer.
///
/// Artifacts travel as text so the harness can store them without knowing
/// their layout.
class ToolPlugin {
 public:
  virtual ~ToolPlugin() = default;

  virtual std::string_view name() const = 0;
  /// Throws ConfigError for unknown keys or bad values.
  virtual void validate_config(const nlohmann::json& config) const = 0;
  virtual std::string analyze(const model::Network& net, const data::Splits& splits,
                              const nlohmann::json& config) const = 0;
  virtual InferOutput infer(std::string_view artifacts, const model::Network& net,
                            const data::Dataset& test) const = 0;
};

/// Throws ConfigError for an unknown tool name.
const ToolPlugin& find_tool(std::string_view name);
std::vector<std::string_view> tool_names();

/// Adds a plugin to the registry; a later plugin with the same name wins.
void register_tool(std::unique_ptr<ToolPlugin> plugin);

}  // namespace trustmon::harness
