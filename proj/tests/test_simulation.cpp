#include "lidc/simulation.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace lidc;

namespace {

const std::string kSource = LIDC_SOURCE_DIR;

TopologyConfig two_cluster() { return TopologyConfig::load(kSource + "/scenarios/two_cluster.topo"); }

Name blast_name(std::string srr = "SRR2931415", int mem = 4, int cpu = 2)
{
  return parse_uri("/ndn/k8s/compute/app=BLAST&cpu=" + std::to_string(cpu) + "&mem=" + std::to_string(mem) +
                   "&srr=" + srr);
}

std::vector<std::string> lines_of(const std::string& log)
{
  std::vector<std::string> out;
  std::istringstream in(log);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

std::size_t count_event(const std::string& log, const std::string& event)
{
  std::size_t n = 0;
  for (const auto& l : lines_of(log)) n += l.find(" event=" + event + " ") != std::string::npos;
  return n;
}

std::int64_t time_of(const std::string& line) { return std::stoll(line.substr(2, line.find(' ') - 2)); }

} // namespace

TEST(Simulation, EmptyRunHasEmptyLog)
{
  Simulation sim(two_cluster());
  sim.run_until(0);
  EXPECT_EQ(sim.log(), "");
  EXPECT_EQ(sim.pending_events(), 0u);
}

TEST(Simulation, SubmitGoesToNearestCluster)
{
  Simulation sim(two_cluster());
  auto op = sim.schedule_command(SubmitCmd{"client", blast_name()}, 0);
  sim.run_until(100);
  const auto& r = sim.op(op);
  ASSERT_TRUE(r.done);
  EXPECT_EQ(r.outcome, Outcome::Ok);
  EXPECT_EQ(r.served_by, "clusterA");
  // client->router 2 ms, router->clusterA 5 ms, both ways
  EXPECT_EQ(r.completed_at, 14);
  ASSERT_TRUE(r.job.has_value());
  EXPECT_EQ(sim.gateway("clusterA").find(*r.job)->status, JobStatus::Pending);
  EXPECT_EQ(sim.gateway("clusterB").records().size(), 0u);
}

TEST(Simulation, JobLifecycleTimings)
{
  Simulation sim(two_cluster());
  auto op = sim.schedule_command(SubmitCmd{"client", blast_name()}, 0);
  sim.run_to_quiescence();
  auto id = *sim.op(op).job;
  const auto* rec = sim.gateway("clusterA").find(id);
  ASSERT_NE(rec, nullptr);
  EXPECT_EQ(rec->status, JobStatus::Completed);
  EXPECT_EQ(rec->submitted_at, 7);
  EXPECT_EQ(rec->started_at, 7 + 5000);
  EXPECT_EQ(rec->finished_at, 7 + 5000 + 29390 * 1000);
  const auto& manifest = sim.lake("clusterA").get_manifest(result_name(id));
  EXPECT_EQ(manifest.declared_size, 941'000'000u);
  EXPECT_EQ(manifest.stored_size, kMaxStoredOutput);
}

TEST(Simulation, FetchAndCacheHit)
{
  Simulation sim(two_cluster());
  auto submit = sim.schedule_command(SubmitCmd{"client", blast_name()}, 0);
  sim.run_to_quiescence();
  auto id = *sim.op(submit).job;
  auto first = sim.schedule_command(FetchCmd{"client", result_name(id)}, sim.now() + 1000);
  sim.run_to_quiescence();
  auto second = sim.schedule_command(FetchCmd{"client", result_name(id)}, sim.now() + 1000);
  auto hits_before = sim.forwarder("client").counters().cs_hits;
  sim.run_to_quiescence();
  EXPECT_EQ(sim.op(first).outcome, Outcome::Ok);
  EXPECT_EQ(sim.op(second).outcome, Outcome::Ok);
  EXPECT_EQ(sim.op(first).payload, sim.lake("clusterA").payload(result_name(id)));
  EXPECT_EQ(sim.op(second).payload, sim.op(first).payload);
  EXPECT_EQ(sim.op(second).completed_at, sim.op(second).scheduled_at);
  // manifest plus 8 segments of 8 KiB
  EXPECT_EQ(sim.forwarder("client").counters().cs_hits - hits_before, 9u);
}

TEST(Simulation, UnknownDataAndNoRoute)
{
  Simulation sim(two_cluster());
  auto missing = sim.schedule_command(FetchCmd{"client", parse_uri("/ndn/k8s/data/none")}, 0);
  auto unknown = sim.schedule_command(StatusCmd{"client", JobId::parse("0123456789abcdef")}, 0);
  auto noroute = sim.schedule_command(InterestCmd{"client", parse_uri("/elsewhere/x")}, 0);
  sim.run_to_quiescence();
  EXPECT_EQ(sim.op(missing).outcome, Outcome::NotFound);
  EXPECT_EQ(sim.op(unknown).outcome, Outcome::NotFound);
  EXPECT_EQ(sim.op(noroute).outcome, Outcome::NoRoute);
  EXPECT_EQ(sim.metrics().get("no_route"), 1u);
}

TEST(Simulation, AggregatesIdenticalInterests)
{
  auto topo = two_cluster();
  Simulation sim(topo);
  auto submit = sim.schedule_command(SubmitCmd{"client", blast_name()}, 0);
  sim.run_to_quiescence();
  auto name = manifest_name(result_name(*sim.op(submit).job));
  auto sent_before = count_event(sim.log(), "send");
  std::vector<std::uint64_t> ops;
  for (std::uint32_t i = 0; i < 10; ++i) {
    ops.push_back(sim.inject_request("client", Interest{name, 5000 + i, 4000}, sim.now() + 10));
  }
  sim.run_to_quiescence();
  for (auto op : ops) EXPECT_EQ(sim.op(op).outcome, Outcome::Ok);
  EXPECT_EQ(sim.forwarder("client").counters().aggregated, 9u);
  // one Interest out of the client, to the router, to the cluster; one Data back on each hop
  EXPECT_EQ(count_event(sim.log(), "send") - sent_before, 4u);
}

TEST(Simulation, AddedCloserClusterTakesOver)
{
  Simulation sim(two_cluster());
  NodeConfig c;
  c.id = "clusterC";
  c.kind = NodeKind::Cluster;
  c.cpu = 8;
  c.mem_gb = 16;
  c.apps = {"BLAST"};
  sim.apply_topology_change(AddCluster{c, {prefixes::compute(), prefixes::status(), prefixes::data()}});
  sim.apply_topology_change(AddLink{LinkConfig{"router", "clusterC", 1, 0}});
  auto op = sim.schedule_command(SubmitCmd{"client", blast_name()}, 10);
  sim.run_until(1000);
  EXPECT_EQ(sim.op(op).served_by, "clusterC");
  const auto* e = sim.forwarder("router").fib().find_exact(prefixes::compute());
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->next_hops.front().cost, 1u);
}

TEST(Simulation, RemovedClusterFailsItsJobs)
{
  Simulation sim(two_cluster());
  auto op = sim.schedule_command(SubmitCmd{"client", blast_name()}, 0);
  sim.run_until(6000);
  auto id = *sim.op(op).job;
  ASSERT_EQ(sim.gateway("clusterA").find(id)->status, JobStatus::Running);
  sim.apply_topology_change(RemoveCluster{"clusterA"});
  EXPECT_FALSE(sim.has_node("clusterA"));
  EXPECT_THROW(sim.gateway("clusterA"), std::out_of_range);
  ASSERT_TRUE(sim.departed_jobs().contains(id));
  EXPECT_EQ(sim.departed_jobs().at(id).status, JobStatus::Failed);
  EXPECT_EQ(sim.departed_jobs().at(id).error, "cluster departed");
  EXPECT_NE(sim.log().find("to=Failed"), std::string::npos);

  // the same request now lands on clusterB
  auto again = sim.schedule_command(SubmitCmd{"client", blast_name()}, sim.now());
  sim.run_until(sim.now() + 1000);
  EXPECT_EQ(sim.op(again).served_by, "clusterB");
  sim.run_to_quiescence();
}

TEST(Simulation, DanglingTopologyChangesAreRejected)
{
  Simulation sim(two_cluster());
  EXPECT_THROW(sim.apply_topology_change(RemoveCluster{"nope"}), ConfigError);
  EXPECT_THROW(sim.apply_topology_change(RemoveCluster{"router"}), ConfigError);
  EXPECT_THROW(sim.apply_topology_change(AddLink{LinkConfig{"router", "ghost", 1, 0}}), ConfigError);
  EXPECT_THROW(sim.apply_topology_change(RemoveLink{"client", "clusterA"}), ConfigError);
}

TEST(Simulation, PublishedDatasetIsRoutable)
{
  Simulation sim(two_cluster());
  auto name = parse_uri("/ndn/k8s/data/ref/human");
  sim.publish("clusterB", name, to_bytes("ACGTACGT"));
  auto op = sim.schedule_command(FetchCmd{"client", name}, 0);
  sim.run_to_quiescence();
  EXPECT_EQ(sim.op(op).outcome, Outcome::Ok);
  EXPECT_EQ(sim.op(op).served_by, "clusterB");
  EXPECT_EQ(sim.op(op).payload, to_bytes("ACGTACGT"));
}

TEST(Simulation, LogIsCausalAndMetricsReplay)
{
  Simulation sim(two_cluster());
  std::mt19937 rng(3);
  const char* srrs[] = {"SRR2931415", "SRR5139395"};
  for (int i = 0; i < 20; ++i) {
    sim.schedule_command(SubmitCmd{"client", blast_name(srrs[rng() % 2], 4, 2)}, 1000 * i);
    sim.schedule_command(StatusCmd{"client", std::size_t(1 + i / 2)}, 1000 * i + 500);
  }
  sim.schedule_command(FetchCmd{"client", parse_uri("/ndn/k8s/data/none")}, 30000);
  sim.run_to_quiescence();
  EXPECT_TRUE(sim.causality_held());

  auto lines = lines_of(sim.log());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    ASSERT_LE(time_of(lines[i - 1]), time_of(lines[i])) << lines[i];
  }
  EXPECT_EQ(Metrics::from_log(sim.log()), sim.metrics());
  // independent tallies straight from the log text
  EXPECT_EQ(sim.metrics().get("requests"), count_event(sim.log(), "request"));
  EXPECT_EQ(sim.metrics().get("responses"), count_event(sim.log(), "response"));
  EXPECT_EQ(sim.metrics().get("packets_sent"), count_event(sim.log(), "send"));
  EXPECT_EQ(sim.metrics().get("cs_hits"), count_event(sim.log(), "cs-hit"));
  EXPECT_EQ(sim.metrics().get("requests"), 41u);
}

TEST(Simulation, SameSeedSameRun)
{
  auto script = Script::load(kSource + "/scenarios/location_independence.script");
  auto a = run_script(script, {});
  auto b = run_script(script, {});
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.metrics, b.metrics);
  SimulationOptions other;
  other.seed = 2;
  auto c = run_script(script, other);
  EXPECT_NE(a.log, c.log);
}

TEST(Simulation, CaptureDecodes)
{
  auto script = Script::load(kSource + "/scenarios/blast_workflow.script");
  SimulationOptions options;
  options.capture = true;
  auto run = run_script(script, options);
  ASSERT_FALSE(run.capture.empty());
  EXPECT_EQ(run.capture.size(), run.metrics.get("packets_sent"));
  for (const auto& p : run.capture) EXPECT_NO_THROW(decode_packet(p));
}

TEST(Simulation, IdenticalRepliesCreditTheLatestProducer)
{
  Simulation sim(two_cluster());
  Interest request{blast_name(), 42, 4000};
  auto first = sim.inject_request("client", request, 0);
  sim.run_to_quiescence();
  sim.apply_topology_change(RemoveCluster{"clusterA"});
  auto second = sim.inject_request("client", request, sim.now() + 1000);
  sim.run_to_quiescence();
  EXPECT_EQ(sim.op(first).served_by, "clusterA");
  EXPECT_EQ(sim.op(second).served_by, "clusterB");
  EXPECT_EQ(sim.op(first).text, sim.op(second).text);
  EXPECT_EQ(sim.op(first).issued, sim.op(second).issued);
}
