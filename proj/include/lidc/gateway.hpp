#pragma once

#include "lidc/compute_spec.hpp"
#include "lidc/datalake.hpp"
#include "lidc/orchestrator.hpp"
#include "lidc/wire.hpp"

#include <functional>
#include <map>
#include <optional>
#include <variant>

namespace lidc {

enum class JobStatus {
  Pending,
  Running,
  Completed,
  Failed,
};

std::string_view to_string(JobStatus status);
std::optional<JobStatus> parse_job_status(std::string_view text);

/// Allowed edges: Pending->Running, Pending->Failed, Running->Completed, Running->Failed.
bool is_valid_transition(JobStatus from, JobStatus to);

struct JobRecord
{
  JobId job_id;
  ComputeSpec spec;
  JobStatus status = JobStatus::Pending;
  SimTime submitted_at = 0;
  std::optional<SimTime> started_at;
  std::optional<SimTime> finished_at;
  std::optional<Name> result_name;
  std::optional<std::string> error;
  std::vector<std::pair<JobStatus, SimTime>> history;
};

/// Returns an error message, or nullopt when the spec passes.
using ValidationCheck = std::function<std::optional<std::string>(const ComputeSpec&)>;

/// At most one check per app; apps without a check pass.
class ValidationRegistry
{
public:
  void register_plugin(std::string app, ValidationCheck check);
  std::optional<std::string> validate(const ComputeSpec& spec) const;
  bool has_plugin(std::string_view app) const { return m_plugins.find(app) != m_plugins.end(); }

private:
  std::map<std::string, ValidationCheck, std::less<>> m_plugins;
};

/// Callbacks from the gateway into whatever drives simulated time.
class GatewayHooks
{
public:
  virtual ~GatewayHooks() = default;

  virtual void schedule_admission(const JobId& id, SimTime at) = 0;
  virtual void schedule_completion(const JobId& id, SimTime at) = 0;

  /// `from` is empty for the initial Pending state.
  virtual void on_transition(const JobRecord&, std::optional<JobStatus> /*from*/, SimTime /*now*/) {}
  virtual void on_published(const DatasetManifest&, SimTime /*now*/) {}
  virtual void announce(const Name& /*prefix*/) {}
};

struct ForwardToDataLake
{
};

using GatewayReply = std::variant<DataPacket, ForwardToDataLake>;

struct GatewayConfig
{
  /// Delay between submission and the admission decision (pod scheduling and start-up).
  SimTime startup_ms = 5000;
};

/// Cluster ingress: classifies Interests by prefix, submits jobs, answers status
/// queries and hands data requests to the data lake.
class Gateway
{
public:
  Gateway(Orchestrator& orchestrator, DataLake& lake, ValidationRegistry validations, GatewayHooks& hooks,
          GatewayConfig config = {});

  GatewayReply handle_interest(const Interest& interest, SimTime now);

  /// Always returns the job id; validation and admission failures surface through the
  /// record's status. Resubmitting the same (name, nonce) returns the existing job.
  JobId submit_job(const ComputeSpec& spec, std::uint32_t nonce, SimTime now);

  /// Read-only.
  DataPacket query_status(const JobId& id) const;

  void on_admission_due(const JobId& id, SimTime now);
  void on_completion_due(const JobId& id, SimTime now);

  /// Publishes the output under /ndn/k8s/data/results/<job_id> and completes the job.
  /// Ignored (nullopt) unless the job is Running.
  std::optional<Name> on_job_completion(const JobId& id, const JobOutput& output, SimTime now);

  /// Fails every unfinished job with "cluster departed".
  void depart(SimTime now);

  const JobRecord* find(const JobId& id) const;
  const std::map<JobId, JobRecord>& records() const noexcept { return m_records; }

  static std::string status_text(const JobRecord* record);

private:
  void transition(JobRecord& record, JobStatus to, SimTime now);
  void fail(JobRecord& record, std::string error, SimTime now);
  void start(const JobId& id, SimTime now);

  Orchestrator& m_orchestrator;
  DataLake& m_lake;
  ValidationRegistry m_validations;
  GatewayHooks& m_hooks;
  GatewayConfig m_config;
  std::map<JobId, JobRecord> m_records;
};

} // namespace lidc
