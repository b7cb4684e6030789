#pragma once

#include "lidc/compute_spec.hpp"
#include "lidc/topology.hpp"

#include <filesystem>
#include <optional>
#include <variant>

namespace lidc {

/// A job id, or "@k": the job id returned to the k-th executed submission (1-based).
using JobRef = std::variant<JobId, std::size_t>;

/// A dataset name, or "@k": the result of the k-th executed submission.
using FetchTarget = std::variant<Name, std::size_t>;

struct SubmitCmd
{
  std::string client;
  Name name;
};

struct StatusCmd
{
  std::string client;
  JobRef job;
};

struct InterestCmd
{
  std::string client;
  Name name;
};

struct FetchCmd
{
  std::string client;
  FetchTarget target;
};

struct PublishCmd
{
  std::string cluster;
  Name name;
  Bytes payload;
  /// File path as written in the script.
  std::string source;
};

struct AddCluster
{
  NodeConfig node;
  std::vector<Name> announce;
};

struct RemoveCluster
{
  std::string id;
};

struct AddLink
{
  LinkConfig link;
};

struct RemoveLink
{
  std::string a;
  std::string b;
};

struct Announce
{
  std::string node;
  Name prefix;
};

using TopologyChange = std::variant<AddCluster, RemoveCluster, AddLink, RemoveLink, Announce>;

using Command = std::variant<SubmitCmd, StatusCmd, InterestCmd, FetchCmd, PublishCmd, TopologyChange>;

struct ScriptLine
{
  SimTime at = 0;
  Command command;
  int line = 0;
  /// Directive text without the "at <ms>" prefix.
  std::string text;
};

/// Workload script:
///   topology <file>
///   end <ms>
///   at <ms> submit <client> <compute-uri>
///   at <ms> status <client> <job_id|@k>
///   at <ms> interest <client> <uri>
///   at <ms> fetch <client> <uri|@k>
///   at <ms> publish <cluster> <uri> <file>
///   at <ms> add-cluster <id> cpu=<n> mem=<n> apps=<a,b> [announce=<p1,p2>] [node options]
///   at <ms> remove-cluster <id>
///   at <ms> add-link <a> <b> <latency_ms>
///   at <ms> remove-link <a> <b>
///   at <ms> announce <node> <prefix>
/// Commands are ordered by time; ties keep file order.
struct Script
{
  std::optional<std::filesystem::path> topology;
  std::optional<SimTime> end;
  std::vector<ScriptLine> commands;

  /// Relative file paths resolve against base_dir. Throws ConfigError with line numbers.
  static Script parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static Script load(const std::filesystem::path& path);
};

/// Parses one directive (without "at <ms>"). Throws ConfigError.
Command parse_command(std::string_view text, const std::filesystem::path& base_dir, int line = 0);

/// Compute names carry canonical parameters; '@k' references become "@k".
std::string describe(const Command& command);

} // namespace lidc
