#include "lidc/orchestrator.hpp"
#include "lidc/datalake.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace lidc {

void ClusterResources::reserve(const ComputeSpec& spec)
{
  if (!fits_now(spec)) {
    throw std::logic_error("reservation exceeds free resources");
  }
  cpu_used += spec.cpu;
  mem_used_gb += spec.mem_gb;
}

void ClusterResources::release(const ComputeSpec& spec)
{
  if (spec.cpu > cpu_used || spec.mem_gb > mem_used_gb) {
    throw std::logic_error("resource accounting underflow");
  }
  cpu_used -= spec.cpu;
  mem_used_gb -= spec.mem_gb;
}

bool ServiceRegistry::is_service_dns_name(std::string_view dns_name)
{
  constexpr std::string_view kSuffix = ".svc.cluster.local";
  if (!dns_name.ends_with(kSuffix)) {
    return false;
  }
  auto head = dns_name.substr(0, dns_name.size() - kSuffix.size());
  auto dot = head.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == head.size()) {
    return false;
  }
  return head.find('.', dot + 1) == std::string_view::npos;
}

void ServiceRegistry::register_service(const std::string& dns_name, std::string handler)
{
  if (!is_service_dns_name(dns_name)) {
    throw std::invalid_argument("not a service DNS name: " + dns_name);
  }
  m_services[dns_name] = std::move(handler);
}

std::optional<std::string> ServiceRegistry::resolve(std::string_view dns_name) const
{
  auto it = m_services.find(dns_name);
  if (it == m_services.end()) {
    return std::nullopt;
  }
  return it->second;
}

namespace {

template <typename T>
T parse_number(std::string_view text, int line)
{
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw OrchestratorError(OrchestratorErrc::BadTrace,
                            "trace line " + std::to_string(line) + ": bad number '" + std::string(text) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// ceil(a / b) for non-negative a and positive b
std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return a == 0 ? 0 : 1 + (a - 1) / b; }

SimTime linear_duration(const LinearModel& m, const ComputeSpec& spec, std::uint64_t input_bytes)
{
  // ms = bytes / 10^6 * num / den * 1000 = bytes * num / (den * 1000)
  auto bytes = static_cast<__int128>(input_bytes);
  __int128 numer = bytes * m.seconds_per_mb.num;
  __int128 denom = static_cast<__int128>(m.seconds_per_mb.den) * 1000;
  if (m.divide_by_cpu) {
    denom *= spec.cpu;
  }
  __int128 ms = numer == 0 ? 0 : 1 + (numer - 1) / denom;
  auto floor_ms = ceil_div(m.floor_s.num * 1000, m.floor_s.den);
  return static_cast<SimTime>(std::max<__int128>(ms, floor_ms));
}

} // namespace

TraceTable TraceTable::parse(std::string_view text)
{
  TraceTable table;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line;
    auto l = trim(raw);
    if (l.empty() || l.front() == '#') {
      continue;
    }
    if (!header_seen) {
      if (l != "srr,mem_gb,cpu,runtime_s,output_bytes") {
        throw OrchestratorError(OrchestratorErrc::BadTrace, "trace line " + std::to_string(line) + ": bad header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> cols;
    std::size_t pos = 0;
    while (true) {
      auto comma = l.find(',', pos);
      cols.push_back(trim(l.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (cols.size() != 5 || cols[0].empty()) {
      throw OrchestratorError(OrchestratorErrc::BadTrace, "trace line " + std::to_string(line) + ": expected 5 columns");
    }
    TraceKey key{std::string(cols[0]), parse_number<std::uint32_t>(cols[1], line),
                 parse_number<std::uint32_t>(cols[2], line)};
    TraceRow row{parse_number<std::int64_t>(cols[3], line), parse_number<std::uint64_t>(cols[4], line)};
    table.add(std::move(key), row);
  }
  if (!header_seen) {
    throw OrchestratorError(OrchestratorErrc::BadTrace, "trace file has no header");
  }
  return table;
}

TraceTable TraceTable::load(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw OrchestratorError(OrchestratorErrc::BadTrace, "cannot open trace file " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const TraceRow* TraceTable::find(const TraceKey& key) const
{
  auto it = m_rows.find(key);
  return it == m_rows.end() ? nullptr : &it->second;
}

DurationEstimate estimate_duration(const DurationModel& model, const ComputeSpec& spec, std::uint64_t input_bytes)
{
  if (const auto* trace = std::get_if<TraceModel>(&model)) {
    auto srr = spec.params.find("srr");
    if (srr != spec.params.end()) {
      if (const auto* row = trace->table.find({srr->second, spec.mem_gb, spec.cpu})) {
        return {row->runtime_s * 1000, row->output_bytes};
      }
    }
    return {linear_duration(trace->fallback, spec, input_bytes), std::nullopt};
  }
  return {linear_duration(std::get<LinearModel>(model), spec, input_bytes), std::nullopt};
}

const App* AppRegistry::find(std::string_view name) const
{
  auto it = m_apps.find(name);
  return it == m_apps.end() ? nullptr : &it->second;
}

std::vector<std::string> AppRegistry::names() const
{
  std::vector<std::string> out;
  for (const auto& [name, _] : m_apps) {
    out.push_back(name);
  }
  return out;
}

JobOutput synthesize_output(const Bytes& report, std::optional<std::uint64_t> declared)
{
  if (!declared) {
    return {report, report.size()};
  }
  auto stored = static_cast<std::size_t>(std::min(*declared, kMaxStoredOutput));
  Bytes payload(report.begin(), report.begin() + static_cast<std::ptrdiff_t>(std::min(stored, report.size())));
  if (payload.size() < stored) {
    auto filler = expand_stream(sha256(report), stored - payload.size());
    payload.insert(payload.end(), filler.begin(), filler.end());
  }
  return {std::move(payload), *declared};
}

Orchestrator::Orchestrator(ClusterResources capacity, AppRegistry apps)
  : m_resources(capacity)
  , m_apps(std::move(apps))
{
  m_resources.cpu_used = 0;
  m_resources.mem_used_gb = 0;
}

Admission Orchestrator::admit(const JobId& id, const ComputeSpec& spec)
{
  if (!m_resources.can_ever_fit(spec)) {
    throw OrchestratorError(OrchestratorErrc::CapacityExceeded, "exceeds cluster capacity");
  }
  if (m_queue.empty() && m_resources.fits_now(spec)) {
    m_resources.reserve(spec);
    m_reserved.emplace(id, Reserved{spec, {}, {}});
    return Admission::Admitted;
  }
  m_queue.emplace_back(id, spec);
  return Admission::Queued;
}

RunResult Orchestrator::run_job(const JobId& id, const DataLake& lake, SimTime now)
{
  auto it = m_reserved.find(id);
  if (it == m_reserved.end()) {
    throw OrchestratorError(OrchestratorErrc::UnknownJob, "job not admitted: " + id.str());
  }
  auto& job = it->second;
  const App* app = m_apps.find(job.spec.app);
  std::string error;
  if (app == nullptr) {
    error = "app not available";
  }
  else {
    for (const auto& ds : job.spec.datasets) {
      if (!lake.contains(ds)) {
        error = "dataset not found";
        break;
      }
      const auto& manifest = lake.get_manifest(ds);
      job.inputs.push_back({ds, lake.payload(ds), manifest.declared_size, manifest.digest});
    }
  }
  if (!error.empty()) {
    return RunFailure{error, release(id)};
  }

  std::uint64_t input_bytes = 0;
  for (const auto& in : job.inputs) {
    input_bytes += in.declared_size;
  }
  job.estimate = estimate_duration(app->duration_model, job.spec, input_bytes);
  return RunPlan{now + job.estimate.duration_ms, job.estimate};
}

JobOutput Orchestrator::execute(const JobId& id) const
{
  auto it = m_reserved.find(id);
  if (it == m_reserved.end()) {
    throw OrchestratorError(OrchestratorErrc::UnknownJob, "job not running: " + id.str());
  }
  const auto& job = it->second;
  const App* app = m_apps.find(job.spec.app);
  if (app == nullptr) {
    throw OrchestratorError(OrchestratorErrc::UnknownApp, "app not available: " + job.spec.app);
  }
  return synthesize_output(app->execute(job.spec, job.inputs), job.estimate.declared_output);
}

std::vector<JobId> Orchestrator::release(const JobId& id)
{
  auto it = m_reserved.find(id);
  if (it == m_reserved.end()) {
    throw OrchestratorError(OrchestratorErrc::UnknownJob, "job holds no reservation: " + id.str());
  }
  m_resources.release(it->second.spec);
  m_reserved.erase(it);
  return drain_queue();
}

void Orchestrator::abandon(const JobId& id)
{
  if (auto it = m_reserved.find(id); it != m_reserved.end()) {
    m_resources.release(it->second.spec);
    m_reserved.erase(it);
  }
  std::erase_if(m_queue, [&](const auto& q) { return q.first == id; });
}

std::vector<JobId> Orchestrator::drain_queue()
{
  std::vector<JobId> admitted;
  while (!m_queue.empty() && m_resources.fits_now(m_queue.front().second)) {
    auto [id, spec] = std::move(m_queue.front());
    m_queue.pop_front();
    m_resources.reserve(spec);
    m_reserved.emplace(id, Reserved{std::move(spec), {}, {}});
    admitted.push_back(std::move(id));
  }
  return admitted;
}

} // namespace lidc
