#include "lidc/gateway.hpp"

namespace lidc {

std::string_view to_string(JobStatus status)
{
  switch (status) {
  case JobStatus::Pending:
    return "Pending";
  case JobStatus::Running:
    return "Running";
  case JobStatus::Completed:
    return "Completed";
  case JobStatus::Failed:
    return "Failed";
  }
  return "unknown";
}

std::optional<JobStatus> parse_job_status(std::string_view text)
{
  for (auto s : {JobStatus::Pending, JobStatus::Running, JobStatus::Completed, JobStatus::Failed}) {
    if (to_string(s) == text) {
      return s;
    }
  }
  return std::nullopt;
}

bool is_valid_transition(JobStatus from, JobStatus to)
{
  switch (from) {
  case JobStatus::Pending:
    return to == JobStatus::Running || to == JobStatus::Failed;
  case JobStatus::Running:
    return to == JobStatus::Completed || to == JobStatus::Failed;
  default:
    return false;
  }
}

void ValidationRegistry::register_plugin(std::string app, ValidationCheck check)
{
  m_plugins[std::move(app)] = std::move(check);
}

std::optional<std::string> ValidationRegistry::validate(const ComputeSpec& spec) const
{
  auto it = m_plugins.find(spec.app);
  if (it == m_plugins.end()) {
    return std::nullopt;
  }
  return it->second(spec);
}

namespace {

DataPacket error_reply(const Name& name, const std::string& message)
{
  return DataPacket::make(name, to_bytes("error=" + message), 0, ContentType::Error);
}

} // namespace

Gateway::Gateway(Orchestrator& orchestrator, DataLake& lake, ValidationRegistry validations, GatewayHooks& hooks,
                 GatewayConfig config)
  : m_orchestrator(orchestrator)
  , m_lake(lake)
  , m_validations(std::move(validations))
  , m_hooks(hooks)
  , m_config(config)
{
}

GatewayReply Gateway::handle_interest(const Interest& interest, SimTime now)
{
  if (!prefixes::k8s().is_prefix_of(interest.name)) {
    return error_reply(interest.name, "unrecognized prefix");
  }
  ParsedRequest request;
  try {
    request = classify_request(interest.name);
  }
  catch (const NameError& e) {
    if (e.code() == NameErrc::UnknownPrefix) {
      return error_reply(interest.name, "unrecognized prefix");
    }
    return error_reply(interest.name, e.what());
  }

  if (auto* compute = std::get_if<ComputeRequest>(&request)) {
    auto id = submit_job(compute->spec, interest.nonce, now);
    // submission acknowledgements are never cached: every submission is a new job
    return DataPacket::make(interest.name, to_bytes(id.str()), 0);
  }
  if (auto* status = std::get_if<StatusRequest>(&request)) {
    auto reply = query_status(status->job_id);
    reply.name = interest.name;
    reply.digest = reply.compute_digest();
    return reply;
  }
  return ForwardToDataLake{};
}

JobId Gateway::submit_job(const ComputeSpec& spec, std::uint32_t nonce, SimTime now)
{
  auto id = JobId::derive(build_compute_name(spec), nonce);
  if (m_records.contains(id)) {
    return id;
  }
  JobRecord& record = m_records.emplace(id, JobRecord{.job_id = id, .spec = spec}).first->second;
  record.submitted_at = now;
  record.history.emplace_back(JobStatus::Pending, now);
  m_hooks.on_transition(record, std::nullopt, now);
  m_hooks.announce(status_name(id));

  if (auto error = m_validations.validate(spec)) {
    fail(record, *error, now);
  }
  else if (m_orchestrator.apps().find(spec.app) == nullptr) {
    fail(record, "app not available", now);
  }
  else if (!m_orchestrator.resources().can_ever_fit(spec)) {
    fail(record, "exceeds cluster capacity", now);
  }
  else {
    m_hooks.schedule_admission(id, now + m_config.startup_ms);
  }
  return id;
}

std::string Gateway::status_text(const JobRecord* record)
{
  if (record == nullptr) {
    return "status=unknown";
  }
  std::string text = "status=" + std::string(to_string(record->status));
  if (record->status == JobStatus::Completed && record->result_name) {
    text += "\nresult=" + record->result_name->to_uri();
  }
  else if (record->status == JobStatus::Failed && record->error) {
    text += "\nerror=" + *record->error;
  }
  return text;
}

DataPacket Gateway::query_status(const JobId& id) const
{
  return DataPacket::make(status_name(id), to_bytes(status_text(find(id))), 0);
}

void Gateway::on_admission_due(const JobId& id, SimTime now)
{
  auto it = m_records.find(id);
  if (it == m_records.end() || it->second.status != JobStatus::Pending) {
    return;
  }
  Admission admission;
  try {
    admission = m_orchestrator.admit(id, it->second.spec);
  }
  catch (const OrchestratorError& e) {
    fail(it->second, e.what(), now);
    return;
  }
  if (admission == Admission::Admitted) {
    start(id, now);
  }
}

void Gateway::start(const JobId& id, SimTime now)
{
  auto& record = m_records.at(id);
  auto result = m_orchestrator.run_job(id, m_lake, now);
  if (auto* plan = std::get_if<RunPlan>(&result)) {
    record.started_at = now;
    transition(record, JobStatus::Running, now);
    m_hooks.schedule_completion(id, plan->completes_at);
    return;
  }
  auto failure = std::get<RunFailure>(std::move(result));
  fail(record, failure.error, now);
  for (const auto& next : failure.admitted) {
    start(next, now);
  }
}

void Gateway::on_completion_due(const JobId& id, SimTime now)
{
  auto it = m_records.find(id);
  if (it == m_records.end() || it->second.status != JobStatus::Running) {
    return;
  }
  on_job_completion(id, m_orchestrator.execute(id), now);
  for (const auto& next : m_orchestrator.release(id)) {
    start(next, now);
  }
}

std::optional<Name> Gateway::on_job_completion(const JobId& id, const JobOutput& output, SimTime now)
{
  auto it = m_records.find(id);
  if (it == m_records.end() || it->second.status != JobStatus::Running) {
    return std::nullopt;
  }
  auto& record = it->second;
  Name name = result_name(id);
  try {
    const auto& manifest = m_lake.publish(name, output.payload, output.declared_size);
    m_hooks.on_published(manifest, now);
  }
  catch (const DataLakeError& e) {
    fail(record, std::string("publish failed: ") + e.what(), now);
    return std::nullopt;
  }
  m_hooks.announce(name);
  record.result_name = name;
  transition(record, JobStatus::Completed, now);
  return name;
}

void Gateway::depart(SimTime now)
{
  for (auto& [id, record] : m_records) {
    if (record.status == JobStatus::Pending || record.status == JobStatus::Running) {
      m_orchestrator.abandon(id);
      fail(record, "cluster departed", now);
    }
  }
}

const JobRecord* Gateway::find(const JobId& id) const
{
  auto it = m_records.find(id);
  return it == m_records.end() ? nullptr : &it->second;
}

void Gateway::transition(JobRecord& record, JobStatus to, SimTime now)
{
  if (!is_valid_transition(record.status, to)) {
    throw std::logic_error("invalid job transition " + std::string(to_string(record.status)) + "->" +
                           std::string(to_string(to)));
  }
  JobStatus from = record.status;
  record.status = to;
  if (to == JobStatus::Completed || to == JobStatus::Failed) {
    record.finished_at = now;
  }
  record.history.emplace_back(to, now);
  m_hooks.on_transition(record, from, now);
}

void Gateway::fail(JobRecord& record, std::string error, SimTime now)
{
  record.error = std::move(error);
  transition(record, JobStatus::Failed, now);
}

} // namespace lidc
