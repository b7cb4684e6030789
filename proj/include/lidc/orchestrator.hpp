#pragma once

#include "lidc/common.hpp"
#include "lidc/compute_spec.hpp"
#include "lidc/digest.hpp"

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <variant>

namespace lidc {

class DataLake;

enum class OrchestratorErrc {
  CapacityExceeded,
  UnknownApp,
  UnknownJob,
  BadTrace,
};

class OrchestratorError : public std::runtime_error
{
public:
  OrchestratorError(OrchestratorErrc code, const std::string& what)
    : std::runtime_error(what)
    , m_code(code)
  {
  }

  OrchestratorErrc code() const noexcept { return m_code; }

private:
  OrchestratorErrc m_code;
};

struct ClusterResources
{
  std::uint32_t cpu_total = 0;
  std::uint32_t mem_total_gb = 0;
  std::uint32_t cpu_used = 0;
  std::uint32_t mem_used_gb = 0;

  /// Whether the spec could ever run on this cluster.
  bool can_ever_fit(const ComputeSpec& spec) const noexcept
  {
    return spec.cpu <= cpu_total && spec.mem_gb <= mem_total_gb;
  }

  bool fits_now(const ComputeSpec& spec) const noexcept
  {
    return spec.cpu <= cpu_total - cpu_used && spec.mem_gb <= mem_total_gb - mem_used_gb;
  }

  void reserve(const ComputeSpec& spec);
  /// Underflow is an internal invariant violation and throws std::logic_error.
  void release(const ComputeSpec& spec);

  friend bool operator==(const ClusterResources&, const ClusterResources&) = default;
};

/// Exact-match map from "<svc>.<namespace>.svc.cluster.local" to a handler id.
class ServiceRegistry
{
public:
  /// Throws std::invalid_argument when the name does not have the service DNS shape.
  void register_service(const std::string& dns_name, std::string handler);
  std::optional<std::string> resolve(std::string_view dns_name) const;

  static bool is_service_dns_name(std::string_view dns_name);

private:
  std::map<std::string, std::string, std::less<>> m_services;
};

struct Rational
{
  std::int64_t num = 0;
  std::int64_t den = 1;
};

/// duration = max(floor, input_MB * seconds_per_mb [/ cpu]); 1 MB = 10^6 bytes.
struct LinearModel
{
  Rational seconds_per_mb{1, 1};
  Rational floor_s{1, 1};
  bool divide_by_cpu = false;
};

struct TraceKey
{
  std::string srr;
  std::uint32_t mem_gb = 0;
  std::uint32_t cpu = 0;

  friend auto operator<=>(const TraceKey&, const TraceKey&) = default;
};

struct TraceRow
{
  std::int64_t runtime_s = 0;
  std::uint64_t output_bytes = 0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Rows keyed by (srr, mem_gb, cpu). Text form: header "srr,mem_gb,cpu,runtime_s,output_bytes"
/// followed by one comma-separated row per line.
class TraceTable
{
public:
  static TraceTable parse(std::string_view text);
  static TraceTable load(const std::filesystem::path& path);

  void add(TraceKey key, TraceRow row) { m_rows[std::move(key)] = row; }
  const TraceRow* find(const TraceKey& key) const;
  const std::map<TraceKey, TraceRow>& rows() const noexcept { return m_rows; }

private:
  std::map<TraceKey, TraceRow> m_rows;
};

/// Rows not in the table fall back to the linear model.
struct TraceModel
{
  TraceTable table;
  LinearModel fallback;
};

using DurationModel = std::variant<LinearModel, TraceModel>;

struct DurationEstimate
{
  SimTime duration_ms = 0;
  /// Set when the model knows the real output size (trace rows).
  std::optional<std::uint64_t> declared_output;
};

DurationEstimate estimate_duration(const DurationModel& model, const ComputeSpec& spec,
                                   std::uint64_t input_bytes);

struct JobInput
{
  Name name;
  Bytes payload;
  std::uint64_t declared_size = 0;
  Digest digest{};
};

using ExecuteFn = std::function<Bytes(const ComputeSpec&, std::span<const JobInput>)>;

struct App
{
  ExecuteFn execute;
  DurationModel duration_model;
};

class AppRegistry
{
public:
  void add(std::string name, App app) { m_apps[std::move(name)] = std::move(app); }
  const App* find(std::string_view name) const;
  std::vector<std::string> names() const;

private:
  std::map<std::string, App, std::less<>> m_apps;
};

/// Bound on the bytes stored for one job output; the manifest declares the full size.
inline constexpr std::uint64_t kMaxStoredOutput = 64 * 1024;

struct JobOutput
{
  Bytes payload;
  std::uint64_t declared_size = 0;
};

/// The stored output is the report followed by a stream seeded from its digest, cut to
/// min(declared, kMaxStoredOutput) bytes.
JobOutput synthesize_output(const Bytes& report, std::optional<std::uint64_t> declared);

enum class Admission {
  Admitted,
  Queued,
};

struct RunPlan
{
  SimTime completes_at = 0;
  DurationEstimate estimate;
};

struct RunFailure
{
  std::string error;
  /// Jobs admitted from the queue by the released reservation.
  std::vector<JobId> admitted;
};

using RunResult = std::variant<RunPlan, RunFailure>;

/// Cluster-local job engine: resource ledger, strict FIFO admission queue with
/// head-of-line blocking, and simulated execution.
class Orchestrator
{
public:
  Orchestrator(ClusterResources capacity, AppRegistry apps);

  /// Throws OrchestratorError(CapacityExceeded) when the spec can never fit.
  Admission admit(const JobId& id, const ComputeSpec& spec);

  /// Starts an admitted job: fetches its inputs from `lake` and computes its duration.
  /// A missing dataset or app releases the reservation and reports a failure.
  RunResult run_job(const JobId& id, const DataLake& lake, SimTime now);

  /// Produces the output of a running job.
  JobOutput execute(const JobId& id) const;

  /// Releases a running job's reservation and admits queued jobs in FIFO order while
  /// the head fits.
  std::vector<JobId> release(const JobId& id);

  /// Drops a job from the queue (if queued) or releases it (if reserved) without
  /// admitting anything else.
  void abandon(const JobId& id);

  const ClusterResources& resources() const noexcept { return m_resources; }
  const AppRegistry& apps() const noexcept { return m_apps; }
  ServiceRegistry& services() noexcept { return m_services; }
  const ServiceRegistry& services() const noexcept { return m_services; }
  std::size_t queue_length() const noexcept { return m_queue.size(); }
  bool is_reserved(const JobId& id) const { return m_reserved.contains(id); }

private:
  struct Reserved
  {
    ComputeSpec spec;
    std::vector<JobInput> inputs;
    DurationEstimate estimate;
  };

  std::vector<JobId> drain_queue();

  ClusterResources m_resources;
  AppRegistry m_apps;
  ServiceRegistry m_services;
  std::deque<std::pair<JobId, ComputeSpec>> m_queue;
  std::map<JobId, Reserved> m_reserved;
};

} // namespace lidc
