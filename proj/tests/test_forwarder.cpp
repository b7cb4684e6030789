#include "lidc/forwarder.hpp"

#include <gtest/gtest.h>

#include <deque>
#include <random>

using namespace lidc;

namespace {

Interest interest(std::string_view uri, std::uint32_t nonce, std::uint64_t lifetime = 4000)
{
  return Interest{parse_uri(uri), nonce, lifetime};
}

DataPacket data(std::string_view uri, std::uint64_t freshness = 10000)
{
  return DataPacket::make(parse_uri(uri), to_bytes("content"), freshness);
}

template <typename T>
std::vector<T> only(const std::vector<Emission>& out)
{
  std::vector<T> v;
  for (const auto& e : out) {
    if (auto* p = std::get_if<T>(&e)) v.push_back(*p);
  }
  return v;
}

// Naive LPM oracle: scan every registered prefix, keep the longest match.
std::optional<Name> oracle_lpm(const std::vector<Name>& prefixes, const Name& name)
{
  std::optional<Name> best;
  for (const auto& p : prefixes) {
    bool match = p.size() <= name.size();
    for (std::size_t i = 0; match && i < p.size(); ++i) match = p[i] == name[i];
    if (match && (!best || p.size() > best->size())) best = p;
  }
  return best;
}

// Reference LRU: a deque of names, front = most recent.
struct OracleLru
{
  std::size_t capacity;
  std::deque<Name> order;

  void touch(const Name& n)
  {
    std::erase(order, n);
    order.push_front(n);
  }
  void insert(const Name& n)
  {
    if (std::find(order.begin(), order.end(), n) == order.end() && order.size() == capacity) {
      order.pop_back();
    }
    touch(n);
  }
  bool find(const Name& n)
  {
    if (std::find(order.begin(), order.end(), n) == order.end()) return false;
    touch(n);
    return true;
  }
};

} // namespace

TEST(Fib, RegisterKeepsCostOrder)
{
  Fib fib;
  auto p = parse_uri("/ndn/k8s/compute");
  fib.register_prefix(p, 7, 20);
  fib.register_prefix(p, 3, 5);
  fib.register_prefix(p, 9, 5);
  auto* e = fib.find_exact(p);
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->next_hops, (std::vector<NextHop>{{3, 5}, {9, 5}, {7, 20}}));
  fib.register_prefix(p, 7, 1);
  EXPECT_EQ(e->next_hops.front(), (NextHop{7, 1}));
  fib.unregister_prefix(p, 7);
  fib.unregister_prefix(p, 3);
  fib.unregister_prefix(p, 9);
  EXPECT_EQ(fib.find_exact(p), nullptr);
}

TEST(Fib, LongestPrefixMatch)
{
  Fib fib;
  fib.register_prefix(parse_uri("/ndn"), 1, 1);
  fib.register_prefix(parse_uri("/ndn/k8s/compute"), 2, 1);
  EXPECT_EQ(fib.lpm_lookup(parse_uri("/ndn/k8s/compute/app=X"))->prefix, parse_uri("/ndn/k8s/compute"));
  EXPECT_EQ(fib.lpm_lookup(parse_uri("/ndn/k8s/data/x"))->prefix, parse_uri("/ndn"));
  EXPECT_EQ(fib.lpm_lookup(parse_uri("/other")), nullptr);
  // component boundaries matter, not string prefixes
  EXPECT_EQ(fib.lpm_lookup(parse_uri("/ndnx")), nullptr);
}

TEST(Fib, RandomLpmAgreesWithOracle)
{
  std::mt19937 rng(99);
  const std::vector<std::string> alphabet = {"a", "b", "c", "ab"};
  auto random_name = [&](std::size_t max) {
    std::vector<std::string> comps;
    std::size_t n = rng() % (max + 1);
    for (std::size_t i = 0; i < n; ++i) comps.push_back(alphabet[rng() % alphabet.size()]);
    return Name(comps);
  };
  for (int round = 0; round < 10; ++round) {
    Fib fib;
    std::vector<Name> prefixes;
    for (int i = 0; i < 30; ++i) {
      auto p = random_name(4);
      fib.register_prefix(p, 1 + i, 1);
      if (std::find(prefixes.begin(), prefixes.end(), p) == prefixes.end()) prefixes.push_back(p);
    }
    for (int i = 0; i < 100; ++i) {
      auto n = random_name(6);
      auto expected = oracle_lpm(prefixes, n);
      auto* got = fib.lpm_lookup(n);
      ASSERT_EQ(got != nullptr, expected.has_value()) << n.to_uri();
      if (got) {
        ASSERT_EQ(got->prefix, *expected) << n.to_uri();
      }
    }
  }
}

TEST(Forwarder, ForwardsAlongBestRoute)
{
  Forwarder f;
  f.fib().register_prefix(parse_uri("/ndn/k8s/compute"), 20, 5);
  f.fib().register_prefix(parse_uri("/ndn/k8s/compute"), 21, 20);
  auto out = f.on_interest(10, interest("/ndn/k8s/compute/x", 1), 0);
  auto fwd = only<ForwardInterest>(out);
  ASSERT_EQ(fwd.size(), 1u);
  EXPECT_EQ(fwd[0].face, 20u);
  EXPECT_EQ(f.pit().size(), 1u);
  EXPECT_EQ(f.pit().entries().begin()->second.expiry, 4000);
}

TEST(Forwarder, NoRouteProducesNack)
{
  Forwarder f;
  auto out = f.on_interest(10, interest("/nowhere", 1), 0);
  auto sent = only<SendData>(out);
  ASSERT_EQ(sent.size(), 1u);
  EXPECT_EQ(sent[0].face, 10u);
  EXPECT_EQ(sent[0].data.content_type, ContentType::NoRoute);
  EXPECT_EQ(f.counters().no_route, 1u);
  EXPECT_EQ(f.pit().size(), 0u);
}

TEST(Forwarder, NeverReturnsToIncomingFace)
{
  Forwarder f;
  f.fib().register_prefix(parse_uri("/p"), 10, 1);
  auto out = f.on_interest(10, interest("/p/x", 1), 0);
  EXPECT_EQ(only<SendData>(out).size(), 1u);
  EXPECT_TRUE(only<ForwardInterest>(out).empty());
}

TEST(Forwarder, AggregationFansOut)
{
  Forwarder f;
  f.fib().register_prefix(parse_uri("/p"), 100, 1);
  std::size_t forwarded = 0;
  for (std::uint32_t i = 0; i < 10; ++i) {
    forwarded += only<ForwardInterest>(f.on_interest(1 + i, interest("/p/x", 1000 + i), i)).size();
  }
  EXPECT_EQ(forwarded, 1u);
  EXPECT_EQ(f.counters().aggregated, 9u);
  auto out = only<SendData>(f.on_data(100, data("/p/x"), 20));
  EXPECT_EQ(out.size(), 10u);
  std::set<FaceId> faces;
  for (auto& s : out) faces.insert(s.face);
  EXPECT_EQ(faces.size(), 10u);
  EXPECT_EQ(f.pit().size(), 0u);
}

TEST(Forwarder, DuplicateNonceDropped)
{
  Forwarder f;
  f.fib().register_prefix(parse_uri("/p"), 100, 1);
  f.on_interest(1, interest("/p/x", 42), 0);
  auto out = f.on_interest(2, interest("/p/x", 42), 1);
  auto drops = only<Drop>(out);
  ASSERT_EQ(drops.size(), 1u);
  EXPECT_EQ(drops[0].reason, DropReason::DuplicateNonce);
  EXPECT_EQ(f.pit().entries().begin()->second.in_faces.size(), 1u);
}

TEST(Forwarder, UnsolicitedDataDropped)
{
  Forwarder f;
  auto out = f.on_data(5, data("/p/x"), 0);
  auto drops = only<Drop>(out);
  ASSERT_EQ(drops.size(), 1u);
  EXPECT_EQ(drops[0].reason, DropReason::Unsolicited);
  EXPECT_EQ(f.content_store().size(), 0u);
}

TEST(Forwarder, CacheHitServesLocally)
{
  Forwarder f;
  f.fib().register_prefix(parse_uri("/p"), 100, 1);
  f.on_interest(1, interest("/p/x", 1), 0);
  f.on_data(100, data("/p/x", 1000), 5);
  auto out = f.on_interest(2, interest("/p/x", 2), 10);
  auto sent = only<SendData>(out);
  ASSERT_EQ(sent.size(), 1u);
  EXPECT_EQ(sent[0].face, 2u);
  EXPECT_TRUE(only<ForwardInterest>(out).empty());
  EXPECT_EQ(f.counters().cs_hits, 1u);

  // stale after freshness elapses: forwarded upstream again
  auto later = f.on_interest(3, interest("/p/x", 3), 5 + 1001);
  EXPECT_EQ(only<ForwardInterest>(later).size(), 1u);
}

TEST(Forwarder, ZeroFreshnessNotCached)
{
  Forwarder f;
  f.fib().register_prefix(parse_uri("/p"), 100, 1);
  f.on_interest(1, interest("/p/x", 1), 0);
  f.on_data(100, data("/p/x", 0), 5);
  EXPECT_EQ(f.content_store().size(), 0u);
}

TEST(Forwarder, StaggeredExpiry)
{
  Forwarder f;
  f.fib().register_prefix(parse_uri("/p"), 100, 1);
  for (int i = 0; i < 100; ++i) {
    f.on_interest(1, interest("/p/" + std::to_string(i), static_cast<std::uint32_t>(i), 1000 + 10 * i), 0);
  }
  ASSERT_EQ(f.pit().size(), 100u);
  EXPECT_EQ(f.pit().next_expiry(), 1000);
  std::size_t total = 0;
  for (SimTime t = 0; t <= 3000; t += 10) {
    auto expired = f.on_timeout(t);
    // entry i expires at 1000 + 10 i, exactly one per tick from t=1000 to 1990
    std::size_t expected = (t >= 1000 && t <= 1990) ? 1 : 0;
    ASSERT_EQ(expired.size(), expected) << "t=" << t;
    if (expected) {
      EXPECT_EQ(expired[0], parse_uri("/p/" + std::to_string((t - 1000) / 10)));
    }
    total += expired.size();
  }
  EXPECT_EQ(total, 100u);
  EXPECT_EQ(f.counters().pit_expired, 100u);
  EXPECT_FALSE(f.pit().next_expiry().has_value());
}

TEST(ContentStore, MatchesReferenceLru)
{
  std::mt19937 rng(13);
  ContentStore cs(8);
  OracleLru oracle{8, {}};
  for (int step = 0; step < 5000; ++step) {
    auto name = parse_uri("/n/" + std::to_string(rng() % 20));
    if (rng() % 2) {
      cs.insert(DataPacket::make(name, {}, 1'000'000), step);
      oracle.insert(name);
    }
    else {
      ASSERT_EQ(cs.find(name, step).has_value(), oracle.find(name)) << step;
    }
    ASSERT_EQ(cs.size(), oracle.order.size());
    std::size_t i = 0;
    for (const auto& e : cs.entries()) {
      ASSERT_EQ(e.data.name, oracle.order[i++]);
    }
  }
}

TEST(ContentStore, ZeroCapacityStoresNothing)
{
  ContentStore cs(0);
  cs.insert(DataPacket::make(parse_uri("/a"), {}, 100), 0);
  EXPECT_EQ(cs.size(), 0u);
}

TEST(Strategy, BestCostTieBreaksOnLowestFace)
{
  FibEntry e{parse_uri("/p"), {{4, 5}, {9, 5}, {2, 7}}};
  BestCostStrategy s;
  EXPECT_EQ(s.select(e, 1), 4u);
  EXPECT_EQ(s.select(e, 4), 9u);
  FibEntry single{parse_uri("/p"), {{4, 5}}};
  EXPECT_FALSE(s.select(single, 4).has_value());
}

TEST(Strategy, RoundRobinCycles)
{
  FibEntry e{parse_uri("/p"), {{4, 5}, {9, 5}, {2, 7}}};
  RoundRobinStrategy s;
  std::vector<FaceId> picks;
  for (int i = 0; i < 6; ++i) picks.push_back(*s.select(e, 1));
  EXPECT_EQ(picks, (std::vector<FaceId>{4, 9, 2, 4, 9, 2}));
  EXPECT_EQ(parse_strategy("round-robin"), StrategyKind::RoundRobin);
  EXPECT_EQ(parse_strategy("best-cost"), StrategyKind::BestCost);
  EXPECT_FALSE(parse_strategy("random").has_value());
}

TEST(Forwarder, DumpListsTables)
{
  Forwarder f;
  f.fib().register_prefix(parse_uri("/ndn/k8s/compute"), 300, 5);
  f.on_interest(1, interest("/ndn/k8s/compute/x", 1), 0);
  auto text = f.dump([](FaceId id) { return "f" + std::to_string(id); }, 0);
  EXPECT_NE(text.find("fib prefix=/ndn/k8s/compute nexthops=f300:5"), std::string::npos);
  EXPECT_NE(text.find("pit name=/ndn/k8s/compute/x in_faces=f1"), std::string::npos);
}
