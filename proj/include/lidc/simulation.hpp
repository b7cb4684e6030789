#pragma once

#include "lidc/apps.hpp"
#include "lidc/datalake.hpp"
#include "lidc/forwarder.hpp"
#include "lidc/gateway.hpp"
#include "lidc/orchestrator.hpp"
#include "lidc/scenario.hpp"
#include "lidc/topology.hpp"

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace lidc {

/// Local faces. On clients face 1 is the client application, on clusters it is the gateway.
inline constexpr FaceId kAppFace = 1;
inline constexpr FaceId kDataLakeFace = 2;
inline constexpr FaceId kFirstNetworkFace = 256;

inline constexpr std::string_view kGatewayService = "gateway.ndnk8s.svc.cluster.local";
inline constexpr std::string_view kDataLakeService = "dl-nfd.ndnk8s.svc.cluster.local";

enum class Outcome {
  Pending,
  Ok,
  NotFound,
  NoRoute,
  Timeout,
  DigestMismatch,
  Error,
  Unresolved,
};

std::string_view to_string(Outcome outcome);

enum class OpKind {
  Submit,
  Status,
  Interest,
  Fetch,
  Publish,
  Topology,
};

std::string_view to_string(OpKind kind);

struct OpResult
{
  std::uint64_t id = 0;
  OpKind kind = OpKind::Interest;
  /// Issuing client, or the cluster for publish.
  std::string node;
  std::string target;
  SimTime scheduled_at = 0;
  SimTime completed_at = 0;
  bool done = false;
  Outcome outcome = Outcome::Pending;
  /// Submit: job id. Status: status record. Interest: content. Errors: message.
  std::string text;
  std::optional<JobId> job;
  /// Node that produced the (first) response Data.
  std::string served_by;
  /// Fetch and interest payload.
  Bytes payload;
  /// Encoded Interests issued by the client application for this operation.
  std::vector<Bytes> issued;
  int line = 0;
};

struct RequestRecord
{
  std::uint64_t op = 0;
  OpKind kind = OpKind::Interest;
  std::string client;
  std::string target;
  SimTime issued_at = 0;
  SimTime latency_ms = 0;
  Outcome outcome = Outcome::Pending;
  std::string served_by;
  std::string job_id;

  friend bool operator==(const RequestRecord&, const RequestRecord&) = default;
};

/// Counters are kept in a sorted map so the text form is stable. Keys:
/// requests, responses, outcome.<o>, cs_hits, cs_misses, no_route, aggregated,
/// timeouts, packets_sent, drops, pit_expired, publishes, jobs.submitted, jobs.completed,
/// jobs.failed, cluster.<id>.submitted|completed|failed.
struct Metrics
{
  std::map<std::string, std::uint64_t> counters;
  /// In response order.
  std::vector<RequestRecord> requests;

  std::uint64_t get(const std::string& key) const;
  void bump(const std::string& key, std::uint64_t by = 1) { counters[key] += by; }

  /// key=value lines, then one line per request.
  std::string to_text() const;
  /// One line per submission naming the serving cluster.
  std::string placement_table() const;

  /// Recomputes everything from a simulation event log.
  static Metrics from_log(std::string_view log);

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct SimulationOptions
{
  std::uint64_t seed = 1;
  /// Check the resource ledger and job state machine after every event.
  bool check_invariants = true;
  /// Record every packet put on a link.
  bool capture = false;
  LinearModel linear{};
};

/// Deterministic discrete-event simulation of clients, routers and clusters joined by
/// latency-only links. Events run in (time, sequence) order; the sequence number is
/// assigned when an event is scheduled.
class Simulation
{
public:
  /// Throws ConfigError.
  explicit Simulation(TopologyConfig config, SimulationOptions options = {});
  ~Simulation();

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Sends a caller-built Interest from a client at `at`. Returns the operation id.
  std::uint64_t inject_request(const std::string& client, const Interest& interest, SimTime at);

  /// Schedules a script command at `at` (not earlier than now). Returns the operation id.
  std::uint64_t schedule_command(Command command, SimTime at, int line = 0);

  /// Applies a topology change now. Throws ConfigError on dangling references.
  void apply_topology_change(const TopologyChange& change);

  /// Runs every event with time <= t_end and advances the clock to t_end.
  void run_until(SimTime t_end);
  /// Runs until no events remain.
  void run_to_quiescence();
  /// Processes one event; false when the queue is empty.
  bool step();
  /// Runs until the operation is done, the queue empties or the next event is after
  /// `deadline`. Returns whether the operation finished.
  bool run_until_done(std::uint64_t op, SimTime deadline);

  SimTime now() const noexcept { return m_now; }
  std::optional<SimTime> next_event_time() const;
  std::size_t pending_events() const noexcept { return m_queue.size(); }

  const OpResult& op(std::uint64_t id) const;
  const std::vector<OpResult>& ops() const noexcept { return m_ops; }

  const std::string& log() const noexcept { return m_log; }
  const Metrics& metrics() const noexcept { return m_metrics; }
  const std::vector<Bytes>& captured() const noexcept { return m_capture; }
  bool causality_held() const noexcept { return m_causality_ok; }

  /// FIB/PIT/CS report, plus resources, queue, datasets and jobs for clusters.
  std::string inspect(const std::string& node) const;

  bool has_node(const std::string& id) const { return m_nodes.contains(id); }
  std::vector<std::string> node_ids() const;
  std::vector<std::string> cluster_ids() const;
  const Forwarder& forwarder(const std::string& node) const;
  /// Throws std::out_of_range when `cluster` is not a live cluster.
  const Gateway& gateway(const std::string& cluster) const;
  const Orchestrator& orchestrator(const std::string& cluster) const;
  const DataLake& lake(const std::string& cluster) const;
  /// Job records of clusters that have left the overlay.
  const std::map<JobId, JobRecord>& departed_jobs() const noexcept { return m_departed; }
  /// Network face of `node` that leads to `peer`.
  std::optional<FaceId> face_towards(const std::string& node, const std::string& peer) const;

  /// Publishes a payload into a cluster's lake and announces the dataset name.
  const DatasetManifest& publish(const std::string& cluster, const Name& name, Bytes payload);

private:
  struct Node;
  struct ClusterRuntime;
  struct FetchState;
  struct Waiter
  {
    std::uint64_t op;
    std::uint64_t serial;
  };
  struct Link
  {
    SimTime latency_ms;
    std::uint64_t id;
  };

  struct PacketArrival
  {
    std::string from;
    std::string to;
    std::uint64_t link_id;
    Bytes wire;
  };
  struct JobTimer
  {
    std::string cluster;
    std::uint64_t incarnation;
    JobId job;
    bool completion;
  };
  struct PitTimer
  {
    std::string node;
  };
  struct ClientTimer
  {
    std::string node;
    Name name;
    std::uint64_t serial;
  };
  struct CommandEvent
  {
    std::uint64_t op;
    Command command;
  };
  struct InjectEvent
  {
    std::uint64_t op;
    Interest interest;
  };
  using Payload = std::variant<PacketArrival, JobTimer, PitTimer, ClientTimer, CommandEvent, InjectEvent>;

  struct Event
  {
    SimTime at;
    std::uint64_t seq;
    SimTime scheduled_at;
    Payload payload;
  };
  struct EventLater
  {
    bool operator()(const Event& a, const Event& b) const
    {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  void schedule(SimTime at, Payload payload);
  void dispatch(Payload& payload);
  void after_event();

  void handle(PacketArrival& ev);
  void handle(JobTimer& ev);
  void handle(PitTimer& ev);
  void handle(ClientTimer& ev);
  void handle(CommandEvent& ev);
  void handle(InjectEvent& ev);

  Node& node(const std::string& id);
  const Node& node(const std::string& id) const;
  ClusterRuntime& cluster(const std::string& id);

  void add_node(const NodeConfig& config);
  void add_link(const LinkConfig& link);
  void remove_link(const std::string& a, const std::string& b);
  void remove_cluster(const std::string& id);
  void announce(const std::string& node, const Name& prefix);
  void recompute_fibs();
  void route_prefix(const Name& prefix);

  void receive_interest(Node& n, FaceId face, const Interest& interest);
  void receive_data(Node& n, FaceId face, const DataPacket& data);
  void process(Node& n, std::vector<Emission> emissions, const Name& name);
  void transmit(Node& n, FaceId face, Bytes wire, std::string_view type, const Name& name);
  void deliver_local_interest(Node& n, FaceId face, const Interest& interest);
  void deliver_to_app(Node& n, const DataPacket& data);
  void produced(Node& n, std::string_view source, const DataPacket& data);

  void client_send(Node& client, std::uint64_t op, Name name);
  void client_send(Node& client, std::uint64_t op, const Interest& interest);
  void on_op_data(OpResult& op, const DataPacket& data);
  void on_fetch_data(OpResult& op, FetchState& state, const DataPacket& data);
  void finish(OpResult& op, Outcome outcome, std::string text = {});
  void start_op(OpResult& op, const Command& command);

  std::string face_label(const Node& n, FaceId face) const;
  void line(std::string text);
  void check_invariants() const;

  TopologyConfig m_config;
  SimulationOptions m_options;
  std::map<std::string, std::unique_ptr<Node>> m_nodes;
  std::map<std::pair<std::string, std::string>, Link> m_links;
  std::map<Name, std::set<std::string>> m_announcers;
  std::vector<Event> m_queue;
  std::uint64_t m_next_seq = 0;
  std::uint64_t m_next_link_id = 1;
  std::uint64_t m_next_incarnation = 1;
  std::uint64_t m_next_serial = 1;
  SimTime m_now = 0;
  bool m_causality_ok = true;

  std::vector<OpResult> m_ops;
  std::map<std::uint64_t, std::unique_ptr<FetchState>> m_fetches;
  /// Operation ids of executed submissions, in execution order.
  std::vector<std::uint64_t> m_submissions;
  std::map<Digest, std::string> m_producers;
  std::map<JobId, JobRecord> m_departed;
  std::map<std::string, ClusterResources> m_logged_ledger;

  std::string m_log;
  Metrics m_metrics;
  std::vector<Bytes> m_capture;
};

/// Outcome of running a workload script.
struct ScriptRun
{
  std::string log;
  Metrics metrics;
  std::vector<OpResult> ops;
  std::vector<Bytes> capture;
};

/// Loads the script's topology (or `topology` when given), runs every command at its time
/// and stops at the script's end time or at quiescence. Throws ConfigError.
ScriptRun run_script(const Script& script, SimulationOptions options,
                     const std::optional<TopologyConfig>& topology = std::nullopt);

} // namespace lidc
