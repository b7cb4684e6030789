#pragma once

#include "lidc/common.hpp"
#include "lidc/forwarder.hpp"
#include "lidc/name.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lidc {

/// Configuration error; `line` is 0 when no source line applies.
class ConfigError : public std::runtime_error
{
public:
  explicit ConfigError(const std::string& what, int line = 0)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what)
    , m_line(line)
  {
  }

  int line() const noexcept { return m_line; }

private:
  int m_line;
};

enum class NodeKind {
  Client,
  Router,
  Cluster,
};

std::string_view to_string(NodeKind kind);

struct NodeConfig
{
  std::string id;
  NodeKind kind = NodeKind::Router;
  // clusters only
  std::uint32_t cpu = 0;
  std::uint32_t mem_gb = 0;
  std::vector<std::string> apps;
  std::optional<std::filesystem::path> trace;
  SimTime startup_ms = 5000;
  // any node
  std::size_t cs_capacity = 256;
  StrategyKind strategy = StrategyKind::BestCost;
  int line = 0;
};

struct LinkConfig
{
  std::string a;
  std::string b;
  SimTime latency_ms = 0;
  int line = 0;
};

struct Announcement
{
  std::string node;
  Name prefix;
  int line = 0;
};

/// Line-oriented topology:
///   node <id> <client|router|cluster> [cpu=<n> mem=<n> apps=<a,b>] [trace=<file>]
///        [startup=<ms>] [cs=<entries>] [strategy=<best-cost|round-robin>]
///   link <a> <b> <latency_ms>
///   announce <node> <prefix>
/// '#' starts a comment.
struct TopologyConfig
{
  std::vector<NodeConfig> nodes;
  std::vector<LinkConfig> links;
  std::vector<Announcement> announcements;

  const NodeConfig* find(std::string_view id) const;

  /// Relative trace paths resolve against base_dir. Throws ConfigError.
  static TopologyConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static TopologyConfig load(const std::filesystem::path& path);

  /// Checks cross-references: unique ids, links between known nodes, announcements by
  /// clusters, every cluster announcing compute or data.
  void validate() const;
};

std::vector<std::string> split_words(std::string_view line);

/// Parses "key=value" node options into `node`. Throws ConfigError.
void apply_node_options(NodeConfig& node, std::span<const std::string> options,
                        const std::filesystem::path& base_dir, int line);

} // namespace lidc
