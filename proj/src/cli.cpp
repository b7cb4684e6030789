#include "lidc/cli.hpp"

#include "lidc/simulation.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace lidc {

namespace {

class CliError : public std::runtime_error
{
public:
  CliError(int code, const std::string& what)
    : std::runtime_error(what)
    , m_code(code)
  {
  }

  int code() const noexcept { return m_code; }

private:
  int m_code;
};

[[noreturn]] void usage(const std::string& message)
{
  throw CliError(exit_code::kUsage, message);
}

std::string read_text(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    throw CliError(exit_code::kNotFound, "cannot read " + p.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view content)
{
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw CliError(exit_code::kFailure, "cannot write " + p.string());
  }
}

std::string digest_of(std::string_view text)
{
  return to_hex(sha256(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size())));
}

int exit_for(Outcome outcome)
{
  switch (outcome) {
  case Outcome::Ok:
    return exit_code::kOk;
  case Outcome::NotFound:
  case Outcome::NoRoute:
  case Outcome::Unresolved:
    return exit_code::kNotFound;
  case Outcome::DigestMismatch:
    return exit_code::kIntegrity;
  default:
    return exit_code::kFailure;
  }
}

std::string metrics_report(const Metrics& m)
{
  return m.to_text() + m.placement_table();
}

struct GlobalOptions
{
  std::string topology;
  std::optional<std::uint64_t> seed;
  std::string store = ".lidc";
  std::string client;
  SimTime advance = 0;
};

/// Persistent client session: topology, seed, clock and a journal of commands.
class Session
{
public:
  explicit Session(const GlobalOptions& opts)
    : m_dir(opts.store)
  {
    auto state_path = m_dir / "session.state";
    if (fs::exists(state_path)) {
      load_state(read_text(state_path));
      if (opts.seed && *opts.seed != m_seed) {
        usage("--seed " + std::to_string(*opts.seed) + " differs from the session seed " + std::to_string(m_seed));
      }
      if (!opts.topology.empty() && fs::absolute(opts.topology).lexically_normal() != m_topology) {
        usage("--topology differs from the session topology " + m_topology.string());
      }
    }
    else {
      if (opts.topology.empty()) {
        usage("no session in " + m_dir.string() + "; pass --topology to start one");
      }
      m_topology = fs::absolute(opts.topology).lexically_normal();
      m_seed = opts.seed.value_or(1);
      m_topology_digest = digest_of(read_text(m_topology));
    }
    auto text = read_text(m_topology);
    if (digest_of(text) != m_topology_digest) {
      throw CliError(exit_code::kIntegrity, "topology file " + m_topology.string() + " changed since the session began");
    }
    m_config = TopologyConfig::parse(text, m_topology.parent_path());
    replay();
  }

  Simulation& sim() { return *m_sim; }

  std::string default_client(const std::string& requested) const
  {
    if (!requested.empty()) {
      return requested;
    }
    for (const auto& n : m_config.nodes) {
      if (n.kind == NodeKind::Client) {
        return n.id;
      }
    }
    usage("topology has no client node");
  }

  std::string default_cluster(const std::string& requested) const
  {
    if (!requested.empty()) {
      return requested;
    }
    for (const auto& id : m_sim->cluster_ids()) {
      return id;
    }
    usage("no cluster available");
  }

  fs::path store_blob(const Bytes& payload)
  {
    fs::create_directories(m_dir / "blobs");
    auto rel = fs::path("blobs") / to_hex(sha256(payload));
    write_file(m_dir / rel, to_string(ByteView(payload)));
    return rel;
  }

  /// Runs one directive at clock + advance and records it in the journal.
  const OpResult& execute(const std::string& directive, SimTime advance)
  {
    if (advance < 0) {
      usage("--advance must not be negative");
    }
    Command command;
    try {
      command = parse_command(directive, m_dir);
    }
    catch (const ConfigError& e) {
      usage(e.what());
    }
    SimTime at = m_clock + advance;
    m_sim->run_until(at);
    auto id = m_sim->schedule_command(std::move(command), at);
    m_sim->run_until_done(id, std::numeric_limits<SimTime>::max());
    m_clock = m_sim->now();
    m_sim->run_until(m_clock);
    m_journal += "at " + std::to_string(at) + " " + directive + "\n";
    save();
    return m_sim->op(id);
  }

private:
  void load_state(const std::string& text)
  {
    std::istringstream in(text);
    std::string line;
    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
      auto eq = line.find('=');
      if (eq != std::string::npos) {
        kv[line.substr(0, eq)] = line.substr(eq + 1);
      }
    }
    for (const char* key : {"seed", "topology", "topology_digest", "clock"}) {
      if (!kv.contains(key)) {
        throw CliError(exit_code::kIntegrity, std::string("session state lacks ") + key);
      }
    }
    m_seed = std::stoull(kv["seed"]);
    m_topology = kv["topology"];
    m_topology_digest = kv["topology_digest"];
    m_clock = std::stoll(kv["clock"]);
    auto journal = m_dir / "session.script";
    m_journal = fs::exists(journal) ? read_text(journal) : "";
  }

  void replay()
  {
    Script script;
    try {
      script = Script::parse(m_journal, m_dir);
    }
    catch (const ConfigError& e) {
      throw CliError(exit_code::kIntegrity, std::string("corrupt session journal: ") + e.what());
    }
    for (const auto& cmd : script.commands) {
      if (auto* pub = std::get_if<PublishCmd>(&cmd.command)) {
        auto expected = fs::path(pub->source).filename().string();
        if (to_hex(sha256(pub->payload)) != expected) {
          throw CliError(exit_code::kIntegrity, "session blob " + pub->source + " does not match its digest");
        }
      }
    }
    SimulationOptions options;
    options.seed = m_seed;
    m_sim = std::make_unique<Simulation>(m_config, options);
    for (const auto& cmd : script.commands) {
      m_sim->run_until(cmd.at);
      m_sim->schedule_command(cmd.command, cmd.at, cmd.line);
    }
    m_sim->run_until(m_clock);
  }

  void save()
  {
    fs::create_directories(m_dir);
    write_file(m_dir / "session.script", m_journal);
    std::ostringstream state;
    state << "seed=" << m_seed << "\n"
          << "topology=" << m_topology.string() << "\n"
          << "topology_digest=" << m_topology_digest << "\n"
          << "clock=" << m_clock << "\n";
    write_file(m_dir / "session.state", state.str());
    write_file(m_dir / "events.log", m_sim->log());
    write_file(m_dir / "metrics.txt", metrics_report(m_sim->metrics()));
    fs::remove_all(m_dir / "lakes");
    for (const auto& id : m_sim->cluster_ids()) {
      fs::create_directories(m_dir / "lakes" / id);
      m_sim->lake(id).persist(m_dir / "lakes" / id);
    }
  }

  fs::path m_dir;
  fs::path m_topology;
  std::string m_topology_digest;
  std::uint64_t m_seed = 1;
  SimTime m_clock = 0;
  std::string m_journal;
  TopologyConfig m_config;
  std::unique_ptr<Simulation> m_sim;
};

struct SubmitOptions
{
  std::optional<std::string> app;
  std::optional<std::int64_t> mem;
  std::optional<std::int64_t> cpu;
  std::vector<std::string> params;
  std::vector<std::string> data;
};

ComputeSpec spec_from(const SubmitOptions& o)
{
  if (!o.app) usage("missing --app");
  if (!o.mem) usage("missing --mem");
  if (!o.cpu) usage("missing --cpu");
  if (*o.mem < 1) usage("mem must be ≥ 1");
  if (*o.cpu < 1) usage("cpu must be ≥ 1");
  if (*o.mem > std::numeric_limits<std::uint32_t>::max() || *o.cpu > std::numeric_limits<std::uint32_t>::max()) {
    usage("resource request too large");
  }
  ComputeSpec spec;
  spec.app = *o.app;
  spec.mem_gb = static_cast<std::uint32_t>(*o.mem);
  spec.cpu = static_cast<std::uint32_t>(*o.cpu);
  for (const auto& p : o.params) {
    auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) {
      usage("bad --param '" + p + "', expected key=value");
    }
    auto key = p.substr(0, eq);
    if (is_reserved_key(key)) {
      usage("--param may not set reserved key '" + key + "'");
    }
    if (!spec.params.emplace(key, p.substr(eq + 1)).second) {
      usage("duplicate --param key '" + key + "'");
    }
  }
  for (const auto& d : o.data) {
    try {
      spec.datasets.push_back(Name::parse(d));
    }
    catch (const NameError& e) {
      usage("bad --data '" + d + "': " + e.what());
    }
  }
  try {
    validate(spec);
  }
  catch (const NameError& e) {
    usage(e.what());
  }
  return spec;
}

int report_failure(const OpResult& op, std::ostream& out, std::ostream& err)
{
  if (op.outcome == Outcome::NotFound && op.kind == OpKind::Status) {
    out << op.text << "\n";
  }
  else {
    err << "lidc: " << to_string(op.outcome) << (op.text.empty() ? "" : ": " + op.text) << "\n";
  }
  return exit_for(op.outcome);
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Name-based compute placement over a simulated overlay", "lidc"};
  app.require_subcommand(1);
  // global options may also follow the subcommand
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--topology", global.topology, "Topology file (starts a session)");
  app.add_option("--seed", global.seed, "Simulation seed");
  app.add_option("--store", global.store, "Session directory")->capture_default_str();
  app.add_option("--client", global.client, "Client node issuing requests");
  app.add_option("--advance", global.advance, "Simulated milliseconds to wait before the command");

  SubmitOptions submit;
  auto* submit_cmd = app.add_subcommand("submit", "Submit a computation");
  submit_cmd->add_option("--app", submit.app, "Application");
  submit_cmd->add_option("--mem", submit.mem, "Memory in GB");
  submit_cmd->add_option("--cpu", submit.cpu, "CPU count");
  submit_cmd->add_option("--param", submit.params, "Application parameter key=value");
  submit_cmd->add_option("--data", submit.data, "Input dataset name");

  std::string status_job;
  auto* status_cmd = app.add_subcommand("status", "Query a job's status");
  status_cmd->add_option("job_id", status_job, "Job id")->required();

  std::string fetch_uri;
  std::string fetch_out;
  auto* fetch_cmd = app.add_subcommand("fetch", "Fetch a dataset and verify its digest");
  fetch_cmd->add_option("uri", fetch_uri, "Dataset name")->required();
  fetch_cmd->add_option("--out", fetch_out, "Output file");

  std::string publish_uri;
  std::string publish_file;
  std::string publish_cluster;
  auto* publish_cmd = app.add_subcommand("publish", "Publish a file into a cluster's data lake");
  publish_cmd->add_option("uri", publish_uri, "Dataset name")->required();
  publish_cmd->add_option("--file", publish_file, "Input file")->required();
  publish_cmd->add_option("--cluster", publish_cluster, "Cluster holding the dataset");

  auto* sim_cmd = app.add_subcommand("sim", "Scenario runs and session reports");
  sim_cmd->require_subcommand(1);
  std::string scenario;
  std::string out_dir;
  std::string capture_file;
  auto* run_cmd = sim_cmd->add_subcommand("run", "Run a workload script");
  run_cmd->add_option("scenario", scenario, "Workload script")->required();
  run_cmd->add_option("--out-dir", out_dir, "Directory for events.log and metrics.txt");
  run_cmd->add_option("--capture", capture_file, "Write every link packet to this capture file");
  auto* metrics_cmd = sim_cmd->add_subcommand("metrics", "Print session metrics");
  std::string inspect_node;
  auto* inspect_cmd = sim_cmd->add_subcommand("inspect", "Dump a node's FIB, PIT and content store");
  inspect_cmd->add_option("node", inspect_node, "Node id")->required();
  std::vector<std::string> directive;
  auto* apply_cmd = sim_cmd->add_subcommand("apply", "Apply a topology change to the session");
  apply_cmd->add_option("directive", directive, "Change, e.g. remove-cluster clusterA")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  }
  catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return exit_code::kOk;
    }
    err << "lidc: " << e.what() << "\n";
    return exit_code::kUsage;
  }

  try {
    if (*run_cmd) {
      std::optional<TopologyConfig> topology;
      if (!global.topology.empty()) {
        topology = TopologyConfig::load(global.topology);
      }
      Script script = Script::load(scenario);
      SimulationOptions options;
      options.seed = global.seed.value_or(1);
      options.capture = !capture_file.empty();
      auto result = run_script(script, options, topology);
      auto report = metrics_report(result.metrics);
      out << report;
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "events.log", result.log);
        write_file(fs::path(out_dir) / "metrics.txt", report);
      }
      if (!capture_file.empty()) {
        std::ofstream cap(capture_file, std::ios::binary | std::ios::trunc);
        write_capture(cap, result.capture);
      }
      return exit_code::kOk;
    }

    Session session(global);

    if (*submit_cmd) {
      auto name = build_compute_name(spec_from(submit));
      const auto& op = session.execute("submit " + session.default_client(global.client) + " " + name.to_uri(),
                                       global.advance);
      if (op.outcome != Outcome::Ok) {
        return report_failure(op, out, err);
      }
      out << "job_id=" << op.job->str() << "\n";
      return exit_code::kOk;
    }
    if (*status_cmd) {
      try {
        JobId::parse(status_job);
      }
      catch (const NameError& e) {
        usage(e.what());
      }
      const auto& op = session.execute("status " + session.default_client(global.client) + " " + status_job,
                                       global.advance);
      if (op.outcome != Outcome::Ok) {
        return report_failure(op, out, err);
      }
      out << op.text << "\n";
      return exit_code::kOk;
    }
    if (*fetch_cmd) {
      Name name;
      try {
        name = Name::parse(fetch_uri);
      }
      catch (const NameError& e) {
        usage(e.what());
      }
      const auto& op = session.execute("fetch " + session.default_client(global.client) + " " + name.to_uri(),
                                       global.advance);
      if (op.outcome != Outcome::Ok) {
        return report_failure(op, out, err);
      }
      if (!fetch_out.empty()) {
        write_file(fetch_out, to_string(ByteView(op.payload)));
      }
      out << "fetched=" << name.to_uri() << " bytes=" << op.payload.size() << " digest=" << op.text << "\n";
      return exit_code::kOk;
    }
    if (*publish_cmd) {
      Name name;
      try {
        name = Name::parse(publish_uri);
      }
      catch (const NameError& e) {
        usage(e.what());
      }
      auto payload = to_bytes(read_text(publish_file));
      auto cluster = session.default_cluster(publish_cluster);
      auto blob = session.store_blob(payload);
      const auto& op =
        session.execute("publish " + cluster + " " + name.to_uri() + " " + blob.generic_string(), global.advance);
      if (op.outcome != Outcome::Ok) {
        err << "lidc: " << op.text << "\n";
        return exit_code::kUsage;
      }
      out << "published=" << name.to_uri() << " cluster=" << cluster << " bytes=" << payload.size()
          << " digest=" << op.text << "\n";
      return exit_code::kOk;
    }
    if (*metrics_cmd) {
      out << metrics_report(session.sim().metrics());
      return exit_code::kOk;
    }
    if (*inspect_cmd) {
      if (!session.sim().has_node(inspect_node)) {
        err << "lidc: unknown node '" << inspect_node << "'\n";
        return exit_code::kNotFound;
      }
      out << session.sim().inspect(inspect_node);
      return exit_code::kOk;
    }
    if (*apply_cmd) {
      std::string text;
      for (const auto& w : directive) {
        text += (text.empty() ? "" : " ") + w;
      }
      Command command;
      try {
        command = parse_command(text, {});
      }
      catch (const ConfigError& e) {
        usage(e.what());
      }
      if (!std::holds_alternative<TopologyChange>(command)) {
        usage("sim apply takes a topology change");
      }
      session.execute(text, global.advance);
      out << "applied=" << describe(command) << "\n";
      return exit_code::kOk;
    }
  }
  catch (const CliError& e) {
    err << "lidc: " << e.what() << "\n";
    return e.code();
  }
  catch (const ConfigError& e) {
    err << "lidc: " << e.what() << "\n";
    return exit_code::kUsage;
  }
  catch (const NameError& e) {
    err << "lidc: " << e.what() << "\n";
    return exit_code::kUsage;
  }
  catch (const DataLakeError& e) {
    err << "lidc: " << e.what() << "\n";
    return e.code() == DataLakeErrc::CorruptStore ? exit_code::kIntegrity : exit_code::kFailure;
  }
  catch (const std::exception& e) {
    err << "lidc: " << e.what() << "\n";
    return exit_code::kFailure;
  }
  return exit_code::kUsage;
}

} // namespace lidc
