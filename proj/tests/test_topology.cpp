#include "lidc/scenario.hpp"
#include "lidc/simulation.hpp"
#include "lidc/topology.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace lidc;

namespace {

const std::string kSource = LIDC_SOURCE_DIR;

int error_line(std::string_view text)
{
  try {
    TopologyConfig::parse(text);
  }
  catch (const ConfigError& e) {
    return e.line();
  }
  ADD_FAILURE() << "accepted:\n" << text;
  return -1;
}

int script_error_line(std::string_view text)
{
  try {
    Script::parse(text);
  }
  catch (const ConfigError& e) {
    return e.line();
  }
  ADD_FAILURE() << "accepted:\n" << text;
  return -1;
}

} // namespace

TEST(Topology, ParsesBundledTopology)
{
  auto t = TopologyConfig::load(kSource + "/scenarios/two_cluster.topo");
  EXPECT_EQ(t.nodes.size(), 4u);
  EXPECT_EQ(t.links.size(), 3u);
  EXPECT_EQ(t.announcements.size(), 6u);
  const auto* a = t.find("clusterA");
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->kind, NodeKind::Cluster);
  EXPECT_EQ(a->cpu, 8u);
  EXPECT_EQ(a->mem_gb, 16u);
  EXPECT_EQ(a->apps, (std::vector<std::string>{"BLAST", "compress"}));
  ASSERT_TRUE(a->trace.has_value());
  EXPECT_TRUE(std::filesystem::exists(*a->trace));
}

TEST(Topology, NodeOptions)
{
  auto t = TopologyConfig::parse("node r router cs=4 strategy=round-robin\n"
                                 "node c cluster cpu=2 mem=3 apps=BLAST startup=10\n"
                                 "link r c 7\n"
                                 "announce c /ndn/k8s/compute\n");
  EXPECT_EQ(t.find("r")->cs_capacity, 4u);
  EXPECT_EQ(t.find("r")->strategy, StrategyKind::RoundRobin);
  EXPECT_EQ(t.find("c")->startup_ms, 10);
  EXPECT_EQ(t.links[0].latency_ms, 7);
}

TEST(Topology, ErrorsCarryLineNumbers)
{
  EXPECT_EQ(error_line("node a router\nnode a router\n"), 2);
  EXPECT_EQ(error_line("node a router\n\n# c\nlink a b 3\n"), 4);
  EXPECT_EQ(error_line("node a router\nnode b router\nlink a b x\n"), 3);
  EXPECT_EQ(error_line("node a spaceship\n"), 1);
  EXPECT_EQ(error_line("node a router cpu=3\n"), 1);
  EXPECT_EQ(error_line("node c cluster cpu=2 mem=2\n"), 1);
  EXPECT_EQ(error_line("node a router\nannounce a /ndn/k8s/compute\n"), 2);
  EXPECT_EQ(error_line("node a router\nfrobnicate\n"), 2);
  EXPECT_EQ(error_line("node c cluster cpu=2 mem=2 apps=BLAST\nannounce c /ndn/k8s/status\n"), 1);
  EXPECT_EQ(error_line("node a router\nnode b router\nlink a b 1\nlink b a 2\n"), 4);
}

TEST(Topology, ErrorMessagePrefix)
{
  try {
    TopologyConfig::parse("node a router\nnode a router\n");
    FAIL();
  }
  catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("line 2: ", 0), 0u);
  }
}

TEST(Script, ParsesBundledScript)
{
  auto s = Script::load(kSource + "/scenarios/blast_workflow.script");
  ASSERT_TRUE(s.topology.has_value());
  EXPECT_EQ(s.commands.size(), 6u);
  EXPECT_EQ(s.commands[0].at, 0);
  EXPECT_TRUE(std::holds_alternative<SubmitCmd>(s.commands[0].command));
  const auto& status = std::get<StatusCmd>(s.commands[1].command);
  EXPECT_EQ(std::get<std::size_t>(status.job), 1u);
  EXPECT_TRUE(std::holds_alternative<FetchCmd>(s.commands[4].command));
}

TEST(Script, OrdersByTimeStably)
{
  auto s = Script::parse("at 5 status c @1\n"
                         "at 1 interest c /ndn/k8s/data/a\n"
                         "at 5 interest c /ndn/k8s/data/b\n");
  ASSERT_EQ(s.commands.size(), 3u);
  EXPECT_EQ(s.commands[0].line, 2);
  EXPECT_EQ(s.commands[1].line, 1);
  EXPECT_EQ(s.commands[2].line, 3);
}

TEST(Script, TopologyDirectives)
{
  auto s = Script::parse("at 10 add-cluster c3 cpu=4 mem=8 apps=BLAST announce=/ndn/k8s/compute\n"
                         "at 11 add-link c3 router 1\n"
                         "at 12 remove-link c3 router\n"
                         "at 13 remove-cluster c3\n"
                         "at 14 announce c3 /ndn/k8s/data\n"
                         "end 100\n");
  ASSERT_EQ(s.commands.size(), 5u);
  const auto& add = std::get<AddCluster>(std::get<TopologyChange>(s.commands[0].command));
  EXPECT_EQ(add.node.cpu, 4u);
  EXPECT_EQ(add.announce, (std::vector<Name>{parse_uri("/ndn/k8s/compute")}));
  EXPECT_EQ(s.end, 100);
}

TEST(Script, ErrorsCarryLineNumbers)
{
  EXPECT_EQ(script_error_line("at 0 submit c /ndn/k8s/data/x\n"), 1);
  EXPECT_EQ(script_error_line("\nat x submit c /ndn/k8s/compute/app=A&cpu=1&mem=1\n"), 2);
  EXPECT_EQ(script_error_line("at 0 status c nothex\n"), 1);
  EXPECT_EQ(script_error_line("at 0 teleport c\n"), 1);
  EXPECT_EQ(script_error_line("at 0 status c @1\nat 1 publish c /ndn/k8s/data/x /no/such/file\n"), 2);
  EXPECT_EQ(script_error_line("at -5 status c @1\n"), 1);
}

TEST(Routing, RouterCostsOnBundledTopology)
{
  Simulation sim(TopologyConfig::load(kSource + "/scenarios/two_cluster.topo"));
  const auto* e = sim.forwarder("router").fib().find_exact(prefixes::compute());
  ASSERT_NE(e, nullptr);
  ASSERT_EQ(e->next_hops.size(), 2u);
  EXPECT_EQ(e->next_hops[0].face, sim.face_towards("router", "clusterA"));
  EXPECT_EQ(e->next_hops[0].cost, 5u);
  EXPECT_EQ(e->next_hops[1].face, sim.face_towards("router", "clusterB"));
  EXPECT_EQ(e->next_hops[1].cost, 20u);
  const auto* c = sim.forwarder("client").fib().find_exact(prefixes::compute());
  ASSERT_NE(c, nullptr);
  ASSERT_EQ(c->next_hops.size(), 1u);
  EXPECT_EQ(c->next_hops[0].cost, 7u);
  const auto* own = sim.forwarder("clusterA").fib().find_exact(prefixes::compute());
  ASSERT_NE(own, nullptr);
  EXPECT_EQ(own->next_hops, (std::vector<NextHop>{{kAppFace, 0}}));
}

TEST(Routing, RandomTopologiesMatchFloydWarshall)
{
  std::mt19937 rng(31);
  for (int round = 0; round < 25; ++round) {
    const int n = 3 + static_cast<int>(rng() % 8);
    std::string text;
    std::vector<std::string> ids;
    std::vector<bool> is_cluster(n);
    for (int i = 0; i < n; ++i) {
      ids.push_back("n" + std::to_string(i));
      is_cluster[i] = i < 2 || rng() % 4 == 0;
      text += "node " + ids[i] + (is_cluster[i] ? " cluster cpu=4 mem=4 apps=BLAST\n" : " router\n");
    }
    constexpr std::int64_t kInf = 1LL << 40;
    std::vector<std::vector<std::int64_t>> lat(n, std::vector<std::int64_t>(n, kInf));
    for (int i = 1; i < n; ++i) {
      int j = static_cast<int>(rng() % i);
      lat[i][j] = lat[j][i] = 1 + rng() % 30;
    }
    for (int extra = 0; extra < n; ++extra) {
      int a = static_cast<int>(rng() % n), b = static_cast<int>(rng() % n);
      if (a != b && lat[a][b] == kInf) lat[a][b] = lat[b][a] = 1 + rng() % 30;
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (lat[i][j] != kInf) text += "link " + ids[i] + " " + ids[j] + " " + std::to_string(lat[i][j]) + "\n";
      }
    }
    std::vector<bool> announces(n);
    for (int i = 0; i < n; ++i) {
      if (is_cluster[i]) {
        text += "announce " + ids[i] + " /ndn/k8s/data\n";
        announces[i] = rng() % 2 == 0 || i == 0;
        if (announces[i]) text += "announce " + ids[i] + " /ndn/k8s/compute\n";
      }
    }
    Simulation sim(TopologyConfig::parse(text));

    auto dist = lat;
    for (int i = 0; i < n; ++i) dist[i][i] = 0;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
    std::vector<std::int64_t> to_announcer(n, kInf);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a)
        if (announces[a]) to_announcer[i] = std::min(to_announcer[i], dist[i][a]);

    for (int v = 0; v < n; ++v) {
      std::vector<NextHop> expected;
      if (announces[v]) {
        expected.push_back({kAppFace, 0});
      }
      else {
        for (int u = 0; u < n; ++u) {
          if (lat[v][u] != kInf && to_announcer[u] < to_announcer[v]) {
            expected.push_back({*sim.face_towards(ids[v], ids[u]), static_cast<std::uint64_t>(lat[v][u] + to_announcer[u])});
          }
        }
        std::sort(expected.begin(), expected.end(), [](const NextHop& a, const NextHop& b) {
          return a.cost != b.cost ? a.cost < b.cost : a.face < b.face;
        });
      }
      const auto* e = sim.forwarder(ids[v]).fib().find_exact(prefixes::compute());
      ASSERT_NE(e, nullptr) << ids[v];
      ASSERT_EQ(e->next_hops, expected) << "round " << round << " node " << ids[v];
      // best next hop cost equals the shortest path to the nearest announcer
      ASSERT_EQ(static_cast<std::int64_t>(e->next_hops.front().cost), to_announcer[v]);
    }
  }
}
