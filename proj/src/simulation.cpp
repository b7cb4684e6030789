#include "lidc/simulation.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

namespace lidc {

std::string_view to_string(Outcome outcome)
{
  switch (outcome) {
  case Outcome::Pending:
    return "pending";
  case Outcome::Ok:
    return "ok";
  case Outcome::NotFound:
    return "not_found";
  case Outcome::NoRoute:
    return "no_route";
  case Outcome::Timeout:
    return "timeout";
  case Outcome::DigestMismatch:
    return "digest_mismatch";
  case Outcome::Error:
    return "error";
  case Outcome::Unresolved:
    return "unresolved";
  }
  return "unknown";
}

std::string_view to_string(OpKind kind)
{
  switch (kind) {
  case OpKind::Submit:
    return "submit";
  case OpKind::Status:
    return "status";
  case OpKind::Interest:
    return "interest";
  case OpKind::Fetch:
    return "fetch";
  case OpKind::Publish:
    return "publish";
  case OpKind::Topology:
    return "topology";
  }
  return "unknown";
}

namespace {

constexpr Outcome kAllOutcomes[] = {Outcome::Pending, Outcome::Ok,    Outcome::NotFound,  Outcome::NoRoute,
                                    Outcome::Timeout, Outcome::DigestMismatch, Outcome::Error, Outcome::Unresolved};
constexpr OpKind kAllKinds[] = {OpKind::Submit, OpKind::Status,  OpKind::Interest,
                                OpKind::Fetch,  OpKind::Publish, OpKind::Topology};

template <typename E, std::size_t N>
E parse_enum(std::string_view text, const E (&values)[N])
{
  for (auto v : values) {
    if (to_string(v) == text) {
      return v;
    }
  }
  throw std::invalid_argument("unknown value '" + std::string(text) + "'");
}

std::string escape_value(std::string_view text)
{
  return percent_escape(text, EscapeSet::ParamValue);
}

std::map<std::string, std::string, std::less<>> split_fields(std::string_view line)
{
  std::map<std::string, std::string, std::less<>> fields;
  std::string key;
  std::string value;
  bool in_value = false;
  auto flush = [&] {
    if (in_value) {
      fields.emplace(std::move(key), std::move(value));
    }
    key.clear();
    value.clear();
    in_value = false;
  };
  for (char c : line) {
    if (c == ' ') {
      flush();
    }
    else if (c == '=' && !in_value) {
      in_value = true;
    }
    else {
      (in_value ? value : key) += c;
    }
  }
  flush();
  return fields;
}

std::int64_t to_int(const std::string& s)
{
  return std::stoll(s);
}

bool is_network_op(OpKind kind)
{
  return kind == OpKind::Submit || kind == OpKind::Status || kind == OpKind::Interest || kind == OpKind::Fetch;
}

OpKind kind_for(const Name& name)
{
  if (prefixes::compute().is_prefix_of(name)) return OpKind::Submit;
  if (prefixes::status().is_prefix_of(name)) return OpKind::Status;
  return OpKind::Interest;
}

std::string request_line(const RequestRecord& r)
{
  std::ostringstream os;
  os << "request op=" << r.op << " kind=" << to_string(r.kind) << " client=" << r.client << " target=" << r.target
     << " issued=" << r.issued_at << " latency_ms=" << r.latency_ms << " outcome=" << to_string(r.outcome)
     << " served_by=" << (r.served_by.empty() ? "-" : r.served_by)
     << " job_id=" << (r.job_id.empty() ? "-" : r.job_id);
  return os.str();
}

} // namespace

// ---- Metrics ----

std::uint64_t Metrics::get(const std::string& key) const
{
  auto it = counters.find(key);
  return it == counters.end() ? 0 : it->second;
}

std::string Metrics::to_text() const
{
  static const std::vector<std::string> kStandard = {
    "requests",      "responses",       "outcome.ok",         "outcome.not_found", "outcome.no_route",
    "outcome.timeout", "outcome.digest_mismatch", "outcome.error", "outcome.unresolved", "timeouts",
    "cs_hits",       "cs_misses",       "no_route",           "aggregated",        "packets_sent",
    "drops",         "pit_expired",     "publishes",          "jobs.submitted",    "jobs.completed",
    "jobs.failed",
  };
  std::ostringstream os;
  for (const auto& key : kStandard) {
    os << key << "=" << get(key) << "\n";
    if (key == "cs_misses") {
      auto hits = get("cs_hits");
      auto total = hits + get("cs_misses");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", total == 0 ? 0.0 : static_cast<double>(hits) / total);
      os << "cs_hit_ratio=" << buf << "\n";
    }
  }
  for (const auto& [key, value] : counters) {
    if (std::find(kStandard.begin(), kStandard.end(), key) == kStandard.end()) {
      os << key << "=" << value << "\n";
    }
  }
  for (const auto& r : requests) {
    os << request_line(r) << "\n";
  }
  return os.str();
}

std::string Metrics::placement_table() const
{
  std::ostringstream os;
  for (const auto& r : requests) {
    if (r.kind == OpKind::Submit && r.outcome == Outcome::Ok) {
      os << "placement op=" << r.op << " client=" << r.client << " job_id=" << r.job_id
         << " cluster=" << (r.served_by.empty() ? "-" : r.served_by) << "\n";
    }
  }
  return os.str();
}

Metrics Metrics::from_log(std::string_view log)
{
  Metrics m;
  std::size_t pos = 0;
  while (pos < log.size()) {
    auto nl = log.find('\n', pos);
    auto line = log.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? log.size() : nl + 1;
    auto f = split_fields(line);
    auto ev = f.find("event");
    if (ev == f.end()) continue;
    const std::string& event = ev->second;
    if (event == "send") m.bump("packets_sent");
    else if (event == "drop") m.bump("drops");
    else if (event == "cs-hit") m.bump("cs_hits");
    else if (event == "cs-miss") m.bump("cs_misses");
    else if (event == "aggregate") m.bump("aggregated");
    else if (event == "no-route") m.bump("no_route");
    else if (event == "pit-expire") m.bump("pit_expired");
    else if (event == "timeout") m.bump("timeouts");
    else if (event == "request") m.bump("requests");
    else if (event == "publish") m.bump("publishes");
    else if (event == "response") {
      RequestRecord r;
      r.op = static_cast<std::uint64_t>(to_int(f.at("op")));
      r.kind = parse_enum(f.at("kind"), kAllKinds);
      r.client = f.at("node");
      r.target = f.at("target");
      r.issued_at = to_int(f.at("issued"));
      r.latency_ms = to_int(f.at("latency_ms"));
      r.outcome = parse_enum(f.at("outcome"), kAllOutcomes);
      r.served_by = f.at("served_by") == "-" ? "" : f.at("served_by");
      r.job_id = f.at("job_id") == "-" ? "" : f.at("job_id");
      m.bump("responses");
      m.bump("outcome." + std::string(to_string(r.outcome)));
      m.requests.push_back(std::move(r));
    }
    else if (event == "job") {
      const auto& cluster = f.at("node");
      if (f.at("from") == "-") {
        m.bump("jobs.submitted");
        m.bump("cluster." + cluster + ".submitted");
      }
      if (f.at("to") == "Completed") {
        m.bump("jobs.completed");
        m.bump("cluster." + cluster + ".completed");
      }
      else if (f.at("to") == "Failed") {
        m.bump("jobs.failed");
        m.bump("cluster." + cluster + ".failed");
      }
    }
  }
  return m;
}

// ---- internal state ----

struct Simulation::Node
{
  NodeConfig config;
  Forwarder forwarder;
  std::map<std::string, FaceId> face_to;
  std::map<FaceId, std::string> peer_of;
  FaceId next_face = kFirstNetworkFace;
  std::mt19937 rng;
  /// Client application: outstanding Interests by name.
  std::map<Name, std::vector<Waiter>> waiting;
  std::unique_ptr<ClusterRuntime> cluster;

  Node(const NodeConfig& c, std::seed_seq& seq)
    : config(c)
    , forwarder(c.cs_capacity, c.strategy)
    , rng(seq)
  {
  }
};

struct Simulation::ClusterRuntime final : GatewayHooks
{
  Simulation& sim;
  std::string id;
  std::uint64_t incarnation;
  DataLake lake;
  Orchestrator orchestrator;
  Gateway gateway;

  ClusterRuntime(Simulation& s, const NodeConfig& c, std::uint64_t inc, AppRegistry registry)
    : sim(s)
    , id(c.id)
    , incarnation(inc)
    , orchestrator(ClusterResources{c.cpu, c.mem_gb, 0, 0}, std::move(registry))
    , gateway(orchestrator, lake, apps::builtin_validations(), *this, GatewayConfig{c.startup_ms})
  {
    orchestrator.services().register_service(std::string(kGatewayService), "gateway");
    orchestrator.services().register_service(std::string(kDataLakeService), "datalake");
  }

  void schedule_admission(const JobId& job, SimTime at) override
  {
    sim.schedule(at, JobTimer{id, incarnation, job, false});
  }

  void schedule_completion(const JobId& job, SimTime at) override
  {
    sim.schedule(at, JobTimer{id, incarnation, job, true});
  }

  void on_transition(const JobRecord& record, std::optional<JobStatus> from, SimTime) override
  {
    std::ostringstream os;
    os << "node=" << id << " event=job job=" << record.job_id.str()
       << " from=" << (from ? to_string(*from) : "-") << " to=" << to_string(record.status)
       << " app=" << escape_value(record.spec.app) << " cpu=" << record.spec.cpu << " mem=" << record.spec.mem_gb;
    if (record.status == JobStatus::Failed && record.error) {
      os << " error=" << escape_value(*record.error);
    }
    sim.line(os.str());
    if (!from) {
      sim.m_metrics.bump("jobs.submitted");
      sim.m_metrics.bump("cluster." + id + ".submitted");
    }
    if (record.status == JobStatus::Completed) {
      sim.m_metrics.bump("jobs.completed");
      sim.m_metrics.bump("cluster." + id + ".completed");
    }
    else if (record.status == JobStatus::Failed) {
      sim.m_metrics.bump("jobs.failed");
      sim.m_metrics.bump("cluster." + id + ".failed");
    }
  }

  void on_published(const DatasetManifest& m, SimTime) override
  {
    sim.line("node=" + id + " event=publish name=" + m.name.to_uri() + " stored=" + std::to_string(m.stored_size) +
             " declared=" + std::to_string(m.declared_size) + " digest=" + to_hex(m.digest));
    sim.m_metrics.bump("publishes");
  }

  void announce(const Name& prefix) override { sim.announce(id, prefix); }
};

struct Simulation::FetchState
{
  Name dataset;
  std::optional<DatasetManifest> manifest;
  std::map<std::uint64_t, Bytes> segments;
};

// ---- construction ----

Simulation::Simulation(TopologyConfig config, SimulationOptions options)
  : m_config(std::move(config))
  , m_options(options)
{
  m_config.validate();
  for (const auto& n : m_config.nodes) {
    add_node(n);
  }
  for (const auto& l : m_config.links) {
    add_link(l);
  }
  for (const auto& a : m_config.announcements) {
    m_announcers[a.prefix].insert(a.node);
  }
  recompute_fibs();
}

Simulation::~Simulation() = default;

void Simulation::add_node(const NodeConfig& config)
{
  Bytes material(8);
  for (int i = 0; i < 8; ++i) {
    material[i] = static_cast<std::uint8_t>(m_options.seed >> (56 - 8 * i));
  }
  auto id_bytes = to_bytes(config.id);
  material.insert(material.end(), id_bytes.begin(), id_bytes.end());
  auto d = sha256(material);
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); ++i) {
    words[i] = std::uint32_t{d[4 * i]} << 24 | std::uint32_t{d[4 * i + 1]} << 16 | std::uint32_t{d[4 * i + 2]} << 8 |
               d[4 * i + 3];
  }
  std::seed_seq seq(words.begin(), words.end());
  auto node = std::make_unique<Node>(config, seq);

  if (config.kind == NodeKind::Cluster) {
    std::optional<TraceTable> trace;
    AppRegistry registry;
    try {
      if (config.trace) {
        trace = TraceTable::load(*config.trace);
      }
      registry = apps::builtin_apps(config.apps, trace, m_options.linear);
    }
    catch (const OrchestratorError& e) {
      throw ConfigError("cluster '" + config.id + "': " + e.what(), config.line);
    }
    node->cluster = std::make_unique<ClusterRuntime>(*this, config, m_next_incarnation++, std::move(registry));
    m_logged_ledger[config.id] = node->cluster->orchestrator.resources();
  }
  m_nodes.emplace(config.id, std::move(node));
}

void Simulation::add_link(const LinkConfig& link)
{
  auto& a = node(link.a);
  auto& b = node(link.b);
  FaceId fa = a.next_face++;
  FaceId fb = b.next_face++;
  a.face_to[link.b] = fa;
  a.peer_of[fa] = link.b;
  b.face_to[link.a] = fb;
  b.peer_of[fb] = link.a;
  m_links[std::minmax(link.a, link.b)] = Link{link.latency_ms, m_next_link_id++};
}

void Simulation::remove_link(const std::string& a, const std::string& b)
{
  for (const auto& [self, peer] : {std::pair{a, b}, std::pair{b, a}}) {
    auto it = m_nodes.find(self);
    if (it == m_nodes.end()) continue;
    auto& n = *it->second;
    if (auto f = n.face_to.find(peer); f != n.face_to.end()) {
      n.peer_of.erase(f->second);
      n.face_to.erase(f);
    }
  }
  m_links.erase(std::minmax(a, b));
}

Simulation::Node& Simulation::node(const std::string& id)
{
  auto it = m_nodes.find(id);
  if (it == m_nodes.end()) {
    throw ConfigError("unknown node '" + id + "'");
  }
  return *it->second;
}

const Simulation::Node& Simulation::node(const std::string& id) const
{
  auto it = m_nodes.find(id);
  if (it == m_nodes.end()) {
    throw ConfigError("unknown node '" + id + "'");
  }
  return *it->second;
}

Simulation::ClusterRuntime& Simulation::cluster(const std::string& id)
{
  auto& n = node(id);
  if (!n.cluster) {
    throw ConfigError("node '" + id + "' is not a cluster");
  }
  return *n.cluster;
}

// ---- routing ----

void Simulation::announce(const std::string& node_id, const Name& prefix)
{
  if (m_announcers[prefix].insert(node_id).second) {
    line("node=" + node_id + " event=announce prefix=" + prefix.to_uri());
    route_prefix(prefix);
  }
}

void Simulation::recompute_fibs()
{
  for (auto& [id, n] : m_nodes) {
    n->forwarder.fib().clear();
  }
  for (const auto& [prefix, _] : m_announcers) {
    route_prefix(prefix);
  }
}

void Simulation::route_prefix(const Name& prefix)
{
  for (auto& [id, n] : m_nodes) {
    if (const auto* entry = n->forwarder.fib().find_exact(prefix)) {
      auto hops = entry->next_hops;
      for (const auto& h : hops) {
        n->forwarder.fib().unregister_prefix(prefix, h.face);
      }
    }
  }
  auto ann = m_announcers.find(prefix);
  if (ann == m_announcers.end()) {
    return;
  }
  constexpr SimTime kInf = std::numeric_limits<SimTime>::max();
  std::map<std::string, SimTime> dist;
  std::set<std::pair<SimTime, std::string>> frontier;
  for (const auto& [id, _] : m_nodes) {
    dist[id] = kInf;
  }
  for (const auto& id : ann->second) {
    if (m_nodes.contains(id)) {
      dist[id] = 0;
      frontier.insert({0, id});
    }
  }
  std::map<std::string, std::vector<std::pair<std::string, SimTime>>> adjacency;
  for (const auto& [ends, link] : m_links) {
    adjacency[ends.first].emplace_back(ends.second, link.latency_ms);
    adjacency[ends.second].emplace_back(ends.first, link.latency_ms);
  }
  while (!frontier.empty()) {
    auto [d, id] = *frontier.begin();
    frontier.erase(frontier.begin());
    if (d > dist[id]) continue;
    for (const auto& [peer, latency] : adjacency[id]) {
      if (d + latency < dist[peer]) {
        frontier.erase({dist[peer], peer});
        dist[peer] = d + latency;
        frontier.insert({dist[peer], peer});
      }
    }
  }
  for (auto& [id, n] : m_nodes) {
    if (dist[id] == kInf) continue;
    if (dist[id] == 0 && ann->second.contains(id)) {
      n->forwarder.fib().register_prefix(prefix, kAppFace, 0);
      continue;
    }
    for (const auto& [peer, latency] : adjacency[id]) {
      if (dist[peer] < dist[id]) {
        n->forwarder.fib().register_prefix(prefix, n->face_to.at(peer), static_cast<std::uint64_t>(latency + dist[peer]));
      }
    }
  }
}

// ---- topology changes ----

void Simulation::apply_topology_change(const TopologyChange& change)
{
  if (auto* add = std::get_if<AddCluster>(&change)) {
    if (m_nodes.contains(add->node.id)) {
      throw ConfigError("node '" + add->node.id + "' already exists");
    }
    bool serves = false;
    for (const auto& p : add->announce) {
      serves |= prefixes::compute().is_prefix_of(p) || prefixes::data().is_prefix_of(p);
    }
    if (!serves) {
      throw ConfigError("cluster '" + add->node.id + "' announces neither /ndn/k8s/compute nor /ndn/k8s/data");
    }
    NodeConfig config = add->node;
    config.kind = NodeKind::Cluster;
    add_node(config);
    line("node=" + config.id + " event=topology change=add-cluster cpu=" + std::to_string(config.cpu) +
         " mem=" + std::to_string(config.mem_gb));
    for (const auto& p : add->announce) {
      m_announcers[p].insert(config.id);
    }
    recompute_fibs();
  }
  else if (auto* rm = std::get_if<RemoveCluster>(&change)) {
    auto it = m_nodes.find(rm->id);
    if (it == m_nodes.end()) {
      throw ConfigError("cannot remove unknown node '" + rm->id + "'");
    }
    if (!it->second->cluster) {
      throw ConfigError("node '" + rm->id + "' is not a cluster");
    }
    remove_cluster(rm->id);
  }
  else if (auto* al = std::get_if<AddLink>(&change)) {
    const auto& l = al->link;
    for (const auto* end : {&l.a, &l.b}) {
      if (!m_nodes.contains(*end)) {
        throw ConfigError("link references unknown node '" + *end + "'");
      }
    }
    if (l.a == l.b) {
      throw ConfigError("self-link on '" + l.a + "'");
    }
    if (m_links.contains(std::minmax(l.a, l.b))) {
      throw ConfigError("link " + l.a + " " + l.b + " already exists");
    }
    add_link(l);
    line("node=" + l.a + " event=topology change=add-link peer=" + l.b + " latency_ms=" + std::to_string(l.latency_ms));
    recompute_fibs();
  }
  else if (auto* rl = std::get_if<RemoveLink>(&change)) {
    if (!m_links.contains(std::minmax(rl->a, rl->b))) {
      throw ConfigError("no link between '" + rl->a + "' and '" + rl->b + "'");
    }
    remove_link(rl->a, rl->b);
    line("node=" + rl->a + " event=topology change=remove-link peer=" + rl->b);
    recompute_fibs();
  }
  else if (auto* an = std::get_if<Announce>(&change)) {
    auto& n = node(an->node);
    if (!n.cluster) {
      throw ConfigError("only clusters announce prefixes ('" + an->node + "')");
    }
    announce(an->node, an->prefix);
  }
}

void Simulation::remove_cluster(const std::string& id)
{
  line("node=" + id + " event=topology change=remove-cluster");
  auto& rt = cluster(id);
  rt.gateway.depart(m_now);
  for (const auto& [job, record] : rt.gateway.records()) {
    m_departed.insert_or_assign(job, record);
  }
  std::vector<std::string> peers;
  for (const auto& [peer, _] : node(id).face_to) {
    peers.push_back(peer);
  }
  for (const auto& peer : peers) {
    remove_link(id, peer);
  }
  for (auto it = m_announcers.begin(); it != m_announcers.end();) {
    it->second.erase(id);
    it = it->second.empty() ? m_announcers.erase(it) : std::next(it);
  }
  m_nodes.erase(id);
  m_logged_ledger.erase(id);
  recompute_fibs();
}

const DatasetManifest& Simulation::publish(const std::string& cluster_id, const Name& name, Bytes payload)
{
  auto& rt = cluster(cluster_id);
  const auto& m = rt.lake.publish(name, std::move(payload));
  rt.on_published(m, m_now);
  announce(cluster_id, name);
  return m;
}

// ---- event loop ----

void Simulation::schedule(SimTime at, Payload payload)
{
  m_queue.push_back(Event{at, m_next_seq++, m_now, std::move(payload)});
  std::push_heap(m_queue.begin(), m_queue.end(), EventLater{});
}

std::optional<SimTime> Simulation::next_event_time() const
{
  if (m_queue.empty()) {
    return std::nullopt;
  }
  return m_queue.front().at;
}

bool Simulation::step()
{
  if (m_queue.empty()) {
    return false;
  }
  std::pop_heap(m_queue.begin(), m_queue.end(), EventLater{});
  Event ev = std::move(m_queue.back());
  m_queue.pop_back();
  if (ev.at < m_now || ev.at < ev.scheduled_at) {
    m_causality_ok = false;
  }
  m_now = std::max(m_now, ev.at);
  dispatch(ev.payload);
  after_event();
  return true;
}

void Simulation::run_until(SimTime t_end)
{
  while (!m_queue.empty() && m_queue.front().at <= t_end) {
    step();
  }
  m_now = std::max(m_now, t_end);
}

void Simulation::run_to_quiescence()
{
  while (step()) {
  }
}

bool Simulation::run_until_done(std::uint64_t op_id, SimTime deadline)
{
  while (!op(op_id).done && !m_queue.empty() && m_queue.front().at <= deadline) {
    step();
  }
  return op(op_id).done;
}

void Simulation::dispatch(Payload& payload)
{
  std::visit([this](auto& ev) { handle(ev); }, payload);
}

void Simulation::after_event()
{
  for (const auto& [id, n] : m_nodes) {
    if (!n->cluster) continue;
    const auto& res = n->cluster->orchestrator.resources();
    auto& logged = m_logged_ledger[id];
    if (logged != res) {
      line("node=" + id + " event=ledger cpu_used=" + std::to_string(res.cpu_used) + " cpu_total=" +
           std::to_string(res.cpu_total) + " mem_used=" + std::to_string(res.mem_used_gb) +
           " mem_total=" + std::to_string(res.mem_total_gb));
      logged = res;
    }
  }
  if (m_options.check_invariants) {
    check_invariants();
  }
}

void Simulation::check_invariants() const
{
  for (const auto& [id, n] : m_nodes) {
    if (!n->cluster) continue;
    std::uint64_t cpu = 0;
    std::uint64_t mem = 0;
    for (const auto& [job, record] : n->cluster->gateway.records()) {
      if (record.status == JobStatus::Running) {
        cpu += record.spec.cpu;
        mem += record.spec.mem_gb;
      }
      for (std::size_t i = 1; i < record.history.size(); ++i) {
        if (!is_valid_transition(record.history[i - 1].first, record.history[i].first)) {
          throw std::logic_error("invalid job history for " + job.str());
        }
      }
    }
    const auto& res = n->cluster->orchestrator.resources();
    if (cpu != res.cpu_used || mem != res.mem_used_gb) {
      throw std::logic_error("ledger of " + id + " disagrees with running jobs");
    }
    if (res.cpu_used > res.cpu_total || res.mem_used_gb > res.mem_total_gb) {
      throw std::logic_error("ledger of " + id + " exceeds capacity");
    }
  }
}

void Simulation::line(std::string text)
{
  m_log += "t=";
  m_log += std::to_string(m_now);
  m_log += ' ';
  m_log += text;
  m_log += '\n';
}

// ---- packets ----

void Simulation::handle(PacketArrival& ev)
{
  auto it = m_nodes.find(ev.to);
  auto link = m_links.find(std::minmax(ev.from, ev.to));
  if (it == m_nodes.end() || link == m_links.end() || link->second.id != ev.link_id) {
    line("node=" + ev.to + " event=drop reason=link-down from=" + ev.from);
    m_metrics.bump("drops");
    return;
  }
  auto& n = *it->second;
  FaceId face = n.face_to.at(ev.from);
  Packet packet;
  try {
    packet = decode_packet(ev.wire);
  }
  catch (const WireError& e) {
    line("node=" + ev.to + " event=drop reason=malformed from=" + ev.from);
    m_metrics.bump("drops");
    return;
  }
  if (auto* interest = std::get_if<Interest>(&packet)) {
    receive_interest(n, face, *interest);
  }
  else {
    receive_data(n, face, std::get<DataPacket>(packet));
  }
}

void Simulation::receive_interest(Node& n, FaceId face, const Interest& interest)
{
  const auto before = n.forwarder.counters();
  auto emissions = n.forwarder.on_interest(face, interest, m_now);
  const auto& after = n.forwarder.counters();
  const std::string prefix = "node=" + n.config.id + " event=";
  const std::string uri = interest.name.to_uri();
  if (after.cs_hits != before.cs_hits) {
    line(prefix + "cs-hit name=" + uri);
    m_metrics.bump("cs_hits");
  }
  if (after.cs_misses != before.cs_misses) {
    line(prefix + "cs-miss name=" + uri);
    m_metrics.bump("cs_misses");
  }
  if (after.aggregated != before.aggregated) {
    line(prefix + "aggregate name=" + uri + " face=" + face_label(n, face));
    m_metrics.bump("aggregated");
  }
  if (after.no_route != before.no_route) {
    line(prefix + "no-route name=" + uri);
    m_metrics.bump("no_route");
    for (const auto& e : emissions) {
      if (auto* sd = std::get_if<SendData>(&e)) {
        m_producers.insert_or_assign(sd->data.digest, n.config.id);
      }
    }
  }
  if (const auto* entry = n.forwarder.pit().find(interest.name)) {
    schedule(entry->expiry, PitTimer{n.config.id});
  }
  process(n, std::move(emissions), interest.name);
}

void Simulation::receive_data(Node& n, FaceId face, const DataPacket& data)
{
  process(n, n.forwarder.on_data(face, data, m_now), data.name);
}

void Simulation::process(Node& n, std::vector<Emission> emissions, const Name& name)
{
  for (auto& e : emissions) {
    if (auto* fi = std::get_if<ForwardInterest>(&e)) {
      if (fi->face < kFirstNetworkFace) {
        deliver_local_interest(n, fi->face, fi->interest);
      }
      else {
        transmit(n, fi->face, encode_interest(fi->interest), "interest", fi->interest.name);
      }
    }
    else if (auto* sd = std::get_if<SendData>(&e)) {
      if (sd->face == kAppFace && !n.cluster) {
        deliver_to_app(n, sd->data);
      }
      else if (sd->face >= kFirstNetworkFace) {
        transmit(n, sd->face, encode_data(sd->data), "data", sd->data.name);
      }
    }
    else {
      const auto& drop = std::get<Drop>(e);
      line("node=" + n.config.id + " event=drop reason=" + std::string(to_string(drop.reason)) +
           " name=" + name.to_uri());
      m_metrics.bump("drops");
    }
  }
}

void Simulation::transmit(Node& n, FaceId face, Bytes wire, std::string_view type, const Name& name)
{
  auto peer = n.peer_of.find(face);
  if (peer == n.peer_of.end()) {
    line("node=" + n.config.id + " event=drop reason=face-down face=" + std::to_string(face) +
         " name=" + name.to_uri());
    m_metrics.bump("drops");
    return;
  }
  const auto& link = m_links.at(std::minmax(n.config.id, peer->second));
  line("node=" + n.config.id + " event=send type=" + std::string(type) + " face=" + std::to_string(face) +
       " peer=" + peer->second + " name=" + name.to_uri() + " bytes=" + std::to_string(wire.size()));
  m_metrics.bump("packets_sent");
  if (m_options.capture) {
    m_capture.push_back(wire);
  }
  schedule(m_now + link.latency_ms, PacketArrival{n.config.id, peer->second, link.id, std::move(wire)});
}

void Simulation::produced(Node& n, std::string_view source, const DataPacket& data)
{
  line("node=" + n.config.id + " event=produce source=" + std::string(source) + " name=" + data.name.to_uri() +
       " type=" + std::string(to_string(data.content_type)) + " bytes=" + std::to_string(data.content.size()));
  m_producers.insert_or_assign(data.digest, n.config.id);
}

void Simulation::deliver_local_interest(Node& n, FaceId face, const Interest& interest)
{
  if (!n.cluster || face != kAppFace) {
    return;
  }
  auto& rt = *n.cluster;
  line("node=" + n.config.id + " event=deliver peer=gateway name=" + interest.name.to_uri());
  auto reply = rt.gateway.handle_interest(interest, m_now);
  if (auto* data = std::get_if<DataPacket>(&reply)) {
    produced(n, "gateway", *data);
    receive_data(n, kAppFace, *data);
    return;
  }
  auto handler = rt.orchestrator.services().resolve(kDataLakeService);
  if (!handler || *handler != "datalake") {
    auto error = DataPacket::make(interest.name, to_bytes("error=data lake unavailable"), 0, ContentType::Error);
    produced(n, "gateway", error);
    receive_data(n, kAppFace, error);
    return;
  }
  line("node=" + n.config.id + " event=deliver peer=datalake name=" + interest.name.to_uri());
  auto data = rt.lake.serve(interest);
  produced(n, "datalake", data);
  receive_data(n, kDataLakeFace, data);
}

void Simulation::deliver_to_app(Node& n, const DataPacket& data)
{
  auto it = n.waiting.find(data.name);
  if (it == n.waiting.end()) {
    return;
  }
  auto waiters = std::move(it->second);
  n.waiting.erase(it);
  for (const auto& w : waiters) {
    on_op_data(m_ops.at(w.op - 1), data);
  }
}

// ---- timers ----

void Simulation::handle(JobTimer& ev)
{
  auto it = m_nodes.find(ev.cluster);
  if (it == m_nodes.end() || !it->second->cluster || it->second->cluster->incarnation != ev.incarnation) {
    return;
  }
  auto& gw = it->second->cluster->gateway;
  if (ev.completion) {
    gw.on_completion_due(ev.job, m_now);
  }
  else {
    gw.on_admission_due(ev.job, m_now);
  }
}

void Simulation::handle(PitTimer& ev)
{
  auto it = m_nodes.find(ev.node);
  if (it == m_nodes.end()) {
    return;
  }
  for (const auto& name : it->second->forwarder.on_timeout(m_now)) {
    line("node=" + ev.node + " event=pit-expire name=" + name.to_uri());
    m_metrics.bump("pit_expired");
  }
}

void Simulation::handle(ClientTimer& ev)
{
  auto it = m_nodes.find(ev.node);
  if (it == m_nodes.end()) {
    return;
  }
  auto& waiting = it->second->waiting;
  auto w = waiting.find(ev.name);
  if (w == waiting.end()) {
    return;
  }
  auto pos = std::find_if(w->second.begin(), w->second.end(), [&](const Waiter& x) { return x.serial == ev.serial; });
  if (pos == w->second.end()) {
    return;
  }
  auto op_id = pos->op;
  w->second.erase(pos);
  if (w->second.empty()) {
    waiting.erase(w);
  }
  auto& op = m_ops.at(op_id - 1);
  if (op.done) {
    return;
  }
  line("node=" + ev.node + " event=timeout op=" + std::to_string(op_id) + " name=" + ev.name.to_uri());
  m_metrics.bump("timeouts");
  finish(op, Outcome::Timeout, "timeout");
}

// ---- client operations ----

std::uint64_t Simulation::inject_request(const std::string& client, const Interest& interest, SimTime at)
{
  if (!m_nodes.contains(client) || node(client).config.kind != NodeKind::Client) {
    throw ConfigError("unknown client '" + client + "'");
  }
  if (at < m_now) {
    throw std::invalid_argument("cannot schedule in the past");
  }
  OpResult op;
  op.id = m_ops.size() + 1;
  op.kind = kind_for(interest.name);
  op.node = client;
  op.target = interest.name.to_uri();
  op.scheduled_at = at;
  m_ops.push_back(op);
  schedule(at, InjectEvent{op.id, interest});
  return op.id;
}

std::uint64_t Simulation::schedule_command(Command command, SimTime at, int line_no)
{
  if (at < m_now) {
    throw std::invalid_argument("cannot schedule in the past");
  }
  OpResult op;
  op.id = m_ops.size() + 1;
  op.scheduled_at = at;
  op.line = line_no;
  std::visit(
    [&](const auto& c) {
      using T = std::decay_t<decltype(c)>;
      if constexpr (std::is_same_v<T, SubmitCmd>) {
        op.kind = OpKind::Submit;
        op.node = c.client;
      }
      else if constexpr (std::is_same_v<T, StatusCmd>) {
        op.kind = OpKind::Status;
        op.node = c.client;
      }
      else if constexpr (std::is_same_v<T, InterestCmd>) {
        op.kind = OpKind::Interest;
        op.node = c.client;
      }
      else if constexpr (std::is_same_v<T, FetchCmd>) {
        op.kind = OpKind::Fetch;
        op.node = c.client;
      }
      else if constexpr (std::is_same_v<T, PublishCmd>) {
        op.kind = OpKind::Publish;
        op.node = c.cluster;
      }
      else {
        op.kind = OpKind::Topology;
      }
    },
    command);
  m_ops.push_back(op);
  schedule(at, CommandEvent{op.id, std::move(command)});
  return op.id;
}

const OpResult& Simulation::op(std::uint64_t id) const
{
  if (id == 0 || id > m_ops.size()) {
    throw std::out_of_range("unknown operation " + std::to_string(id));
  }
  return m_ops[id - 1];
}

void Simulation::handle(InjectEvent& ev)
{
  auto& op = m_ops.at(ev.op - 1);
  line("node=" + op.node + " event=request op=" + std::to_string(op.id) + " kind=" + std::string(to_string(op.kind)) +
       " target=" + op.target);
  m_metrics.bump("requests");
  if (op.kind == OpKind::Submit) {
    m_submissions.push_back(op.id);
  }
  auto it = m_nodes.find(op.node);
  if (it == m_nodes.end()) {
    finish(op, Outcome::Error, "client left");
    return;
  }
  client_send(*it->second, op.id, ev.interest);
}

void Simulation::handle(CommandEvent& ev)
{
  auto& op = m_ops.at(ev.op - 1);
  try {
    start_op(op, ev.command);
  }
  catch (const ConfigError& e) {
    if (e.line() == 0 && op.line != 0) {
      throw ConfigError(e.what(), op.line);
    }
    throw;
  }
}

void Simulation::start_op(OpResult& op, const Command& command)
{
  if (auto* change = std::get_if<TopologyChange>(&command)) {
    op.target = describe(command);
    apply_topology_change(*change);
    finish(op, Outcome::Ok);
    return;
  }
  if (auto* pub = std::get_if<PublishCmd>(&command)) {
    op.target = pub->name.to_uri();
    try {
      const auto& m = publish(pub->cluster, pub->name, pub->payload);
      finish(op, Outcome::Ok, to_hex(m.digest));
    }
    catch (const DataLakeError& e) {
      finish(op, Outcome::Error, e.what());
    }
    return;
  }

  Node& client = node(op.node);
  if (client.config.kind != NodeKind::Client) {
    throw ConfigError("node '" + op.node + "' is not a client");
  }

  std::optional<Name> name;
  std::string unresolved;
  auto resolve_job = [&](std::size_t k) -> std::optional<JobId> {
    if (k == 0 || k > m_submissions.size()) {
      return std::nullopt;
    }
    return m_ops.at(m_submissions[k - 1] - 1).job;
  };

  if (auto* submit = std::get_if<SubmitCmd>(&command)) {
    name = submit->name;
    m_submissions.push_back(op.id);
  }
  else if (auto* status = std::get_if<StatusCmd>(&command)) {
    if (auto* id = std::get_if<JobId>(&status->job)) {
      name = status_name(*id);
    }
    else if (auto job = resolve_job(std::get<std::size_t>(status->job))) {
      name = status_name(*job);
    }
    else {
      unresolved = "@" + std::to_string(std::get<std::size_t>(status->job));
    }
  }
  else if (auto* interest = std::get_if<InterestCmd>(&command)) {
    name = interest->name;
  }
  else if (auto* fetch = std::get_if<FetchCmd>(&command)) {
    if (auto* n = std::get_if<Name>(&fetch->target)) {
      name = *n;
    }
    else if (auto job = resolve_job(std::get<std::size_t>(fetch->target))) {
      name = result_name(*job);
    }
    else {
      unresolved = "@" + std::to_string(std::get<std::size_t>(fetch->target));
    }
  }

  op.target = name ? name->to_uri() : unresolved;
  line("node=" + op.node + " event=request op=" + std::to_string(op.id) + " kind=" + std::string(to_string(op.kind)) +
       " target=" + op.target);
  m_metrics.bump("requests");
  if (!name) {
    finish(op, Outcome::Unresolved, "unresolved reference " + unresolved);
    return;
  }
  if (op.kind == OpKind::Fetch) {
    auto state = std::make_unique<FetchState>();
    state->dataset = *name;
    m_fetches[op.id] = std::move(state);
    client_send(client, op.id, manifest_name(*name));
  }
  else {
    client_send(client, op.id, *name);
  }
}

void Simulation::client_send(Node& client, std::uint64_t op_id, Name name)
{
  Interest interest{std::move(name), static_cast<std::uint32_t>(client.rng()), kDefaultLifetimeMs};
  client_send(client, op_id, interest);
}

void Simulation::client_send(Node& client, std::uint64_t op_id, const Interest& interest)
{
  auto serial = m_next_serial++;
  client.waiting[interest.name].push_back({op_id, serial});
  schedule(m_now + static_cast<SimTime>(interest.lifetime_ms), ClientTimer{client.config.id, interest.name, serial});
  m_ops.at(op_id - 1).issued.push_back(encode_interest(interest));
  receive_interest(client, kAppFace, interest);
}

namespace {

Outcome error_outcome(const DataPacket& data)
{
  return data.content_text() == "error=not found" ? Outcome::NotFound : Outcome::Error;
}

} // namespace

void Simulation::on_op_data(OpResult& op, const DataPacket& data)
{
  if (op.done) {
    return;
  }
  if (op.served_by.empty()) {
    auto p = m_producers.find(data.digest);
    if (p != m_producers.end()) {
      op.served_by = p->second;
    }
  }
  if (data.content_type == ContentType::NoRoute) {
    finish(op, Outcome::NoRoute, "no route");
    return;
  }
  switch (op.kind) {
  case OpKind::Submit:
    if (data.content_type == ContentType::Error) {
      finish(op, error_outcome(data), data.content_text());
      return;
    }
    try {
      op.job = JobId::parse(data.content_text());
      finish(op, Outcome::Ok, data.content_text());
    }
    catch (const NameError&) {
      finish(op, Outcome::Error, "malformed job id");
    }
    return;
  case OpKind::Status:
    if (data.content_type == ContentType::Error) {
      finish(op, error_outcome(data), data.content_text());
    }
    else {
      finish(op, data.content_text() == "status=unknown" ? Outcome::NotFound : Outcome::Ok, data.content_text());
    }
    return;
  case OpKind::Fetch:
    on_fetch_data(op, *m_fetches.at(op.id), data);
    return;
  default:
    op.payload = data.content;
    if (data.content_type == ContentType::Error) {
      finish(op, error_outcome(data), data.content_text());
    }
    else {
      finish(op, Outcome::Ok, data.content_text());
    }
    return;
  }
}

void Simulation::on_fetch_data(OpResult& op, FetchState& state, const DataPacket& data)
{
  if (data.content_type == ContentType::Error) {
    finish(op, error_outcome(data), data.content_text());
    return;
  }
  if (!state.manifest) {
    try {
      state.manifest = DatasetManifest::from_text(data.content_text());
    }
    catch (const DataLakeError& e) {
      finish(op, Outcome::Error, std::string("bad manifest: ") + e.what());
      return;
    }
    if (state.manifest->name != state.dataset) {
      finish(op, Outcome::Error, "manifest names a different dataset");
      return;
    }
  }
  else {
    const auto& last = data.name.back();
    if (data.name.size() != state.dataset.size() + 1 || !last.starts_with("seg=")) {
      finish(op, Outcome::Error, "unexpected segment name");
      return;
    }
    auto index = std::stoull(last.substr(4));
    state.segments[index] = data.content;
  }

  const auto& m = *state.manifest;
  if (state.segments.empty() && m.segment_count > 0 && data.name == manifest_name(state.dataset)) {
    Node& client = node(op.node);
    for (std::uint64_t i = 0; i < m.segment_count && !op.done; ++i) {
      client_send(client, op.id, segment_name(state.dataset, i));
    }
    return;
  }
  if (state.segments.size() < m.segment_count) {
    return;
  }
  Bytes payload;
  for (const auto& [i, bytes] : state.segments) {
    payload.insert(payload.end(), bytes.begin(), bytes.end());
  }
  if (payload.size() != m.stored_size || sha256(payload) != m.digest) {
    finish(op, Outcome::DigestMismatch, "digest mismatch");
    return;
  }
  op.payload = std::move(payload);
  finish(op, Outcome::Ok, to_hex(m.digest));
}

void Simulation::finish(OpResult& op, Outcome outcome, std::string text)
{
  if (op.done) {
    return;
  }
  op.done = true;
  op.outcome = outcome;
  op.completed_at = m_now;
  if (!text.empty()) {
    op.text = std::move(text);
  }
  if (!is_network_op(op.kind)) {
    return;
  }
  RequestRecord r;
  r.op = op.id;
  r.kind = op.kind;
  r.client = op.node;
  r.target = op.target;
  r.issued_at = op.scheduled_at;
  r.latency_ms = op.completed_at - op.scheduled_at;
  r.outcome = outcome;
  r.served_by = op.served_by;
  r.job_id = op.job ? op.job->str() : "";
  line("node=" + r.client + " event=response op=" + std::to_string(r.op) + " kind=" + std::string(to_string(r.kind)) +
       " target=" + r.target + " issued=" + std::to_string(r.issued_at) + " latency_ms=" +
       std::to_string(r.latency_ms) + " outcome=" + std::string(to_string(outcome)) +
       " served_by=" + (r.served_by.empty() ? "-" : r.served_by) + " job_id=" + (r.job_id.empty() ? "-" : r.job_id));
  m_metrics.bump("responses");
  m_metrics.bump("outcome." + std::string(to_string(outcome)));
  m_metrics.requests.push_back(std::move(r));
  m_fetches.erase(op.id);
}

// ---- reports ----

std::string Simulation::face_label(const Node& n, FaceId face) const
{
  if (face == kAppFace) {
    return n.cluster ? "gateway" : "app";
  }
  if (face == kDataLakeFace) {
    return "datalake";
  }
  auto it = n.peer_of.find(face);
  return it == n.peer_of.end() ? "face" + std::to_string(face) : it->second;
}

std::string Simulation::inspect(const std::string& id) const
{
  const auto& n = node(id);
  std::ostringstream os;
  os << "node=" << id << " kind=" << to_string(n.config.kind) << "\n";
  for (const auto& [peer, face] : n.face_to) {
    os << "face id=" << face << " peer=" << peer << " latency_ms=" << m_links.at(std::minmax(id, peer)).latency_ms
       << "\n";
  }
  os << n.forwarder.dump([&](FaceId f) { return face_label(n, f); }, m_now);
  if (n.cluster) {
    const auto& rt = *n.cluster;
    const auto& res = rt.orchestrator.resources();
    os << "resources cpu_used=" << res.cpu_used << " cpu_total=" << res.cpu_total << " mem_used=" << res.mem_used_gb
       << " mem_total=" << res.mem_total_gb << "\n";
    os << "queue_length=" << rt.orchestrator.queue_length() << "\n";
    for (const auto& name : rt.lake.names()) {
      const auto& m = rt.lake.get_manifest(name);
      os << "dataset name=" << name.to_uri() << " stored=" << m.stored_size << " declared=" << m.declared_size
         << " segments=" << m.segment_count << "\n";
    }
    for (const auto& [job, record] : rt.gateway.records()) {
      os << "job id=" << job.str() << " status=" << to_string(record.status) << " app=" << escape_value(record.spec.app)
         << " cpu=" << record.spec.cpu << " mem=" << record.spec.mem_gb << "\n";
    }
  }
  return os.str();
}

std::vector<std::string> Simulation::node_ids() const
{
  std::vector<std::string> out;
  for (const auto& [id, _] : m_nodes) {
    out.push_back(id);
  }
  return out;
}

std::vector<std::string> Simulation::cluster_ids() const
{
  std::vector<std::string> out;
  for (const auto& [id, n] : m_nodes) {
    if (n->cluster) out.push_back(id);
  }
  return out;
}

const Forwarder& Simulation::forwarder(const std::string& id) const
{
  return node(id).forwarder;
}

namespace {

template <typename Map>
auto& cluster_of(Map& nodes, const std::string& id)
{
  auto it = nodes.find(id);
  if (it == nodes.end() || !it->second->cluster) {
    throw std::out_of_range("no cluster '" + id + "'");
  }
  return *it->second->cluster;
}

} // namespace

const Gateway& Simulation::gateway(const std::string& id) const
{
  return cluster_of(m_nodes, id).gateway;
}

const Orchestrator& Simulation::orchestrator(const std::string& id) const
{
  return cluster_of(m_nodes, id).orchestrator;
}

const DataLake& Simulation::lake(const std::string& id) const
{
  return cluster_of(m_nodes, id).lake;
}

std::optional<FaceId> Simulation::face_towards(const std::string& id, const std::string& peer) const
{
  const auto& n = node(id);
  auto it = n.face_to.find(peer);
  if (it == n.face_to.end()) {
    return std::nullopt;
  }
  return it->second;
}

ScriptRun run_script(const Script& script, SimulationOptions options, const std::optional<TopologyConfig>& topology)
{
  TopologyConfig config;
  if (topology) {
    config = *topology;
  }
  else if (script.topology) {
    config = TopologyConfig::load(*script.topology);
  }
  else {
    throw ConfigError("script names no topology");
  }
  Simulation sim(std::move(config), options);
  for (const auto& cmd : script.commands) {
    sim.run_until(cmd.at);
    sim.schedule_command(cmd.command, cmd.at, cmd.line);
  }
  if (script.end) {
    sim.run_until(*script.end);
  }
  else {
    sim.run_to_quiescence();
  }
  return ScriptRun{sim.log(), sim.metrics(), sim.ops(), sim.captured()};
}

} // namespace lidc
