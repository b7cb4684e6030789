#pragma once

#include "lidc/common.hpp"
#include "lidc/wire.hpp"

#include <functional>
#include <list>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <variant>

namespace lidc {

struct NextHop
{
  FaceId face = 0;
  std::uint64_t cost = 0;

  friend bool operator==(const NextHop&, const NextHop&) = default;
};

struct FibEntry
{
  Name prefix;
  /// Sorted by (cost, face); never empty.
  std::vector<NextHop> next_hops;
};

class Fib
{
public:
  /// Adds a next hop, replacing the cost of an existing next hop on the same face.
  void register_prefix(const Name& prefix, FaceId face, std::uint64_t cost);
  void unregister_prefix(const Name& prefix, FaceId face);
  void clear() { m_entries.clear(); }

  /// Longest-prefix match; nullptr when no registered prefix matches.
  const FibEntry* lpm_lookup(const Name& name) const;
  const FibEntry* find_exact(const Name& prefix) const;

  std::size_t size() const noexcept { return m_entries.size(); }
  const std::map<Name, FibEntry>& entries() const noexcept { return m_entries; }

private:
  std::map<Name, FibEntry> m_entries;
};

struct PitEntry
{
  std::set<FaceId> in_faces;
  std::set<std::uint32_t> nonces;
  SimTime expiry = 0;
};

class Pit
{
public:
  PitEntry* find(const Name& name);
  PitEntry& insert(const Name& name, PitEntry entry);
  void erase(const Name& name) { m_entries.erase(name); }

  /// Removes and returns entries with expiry <= now, ordered by (expiry, name).
  std::vector<Name> expire(SimTime now);
  std::optional<SimTime> next_expiry() const;

  std::size_t size() const noexcept { return m_entries.size(); }
  const std::map<Name, PitEntry>& entries() const noexcept { return m_entries; }

private:
  std::map<Name, PitEntry> m_entries;
};

/// LRU cache of Data keyed by exact name. Entries are served only while
/// now - inserted_at <= freshness_ms; packets with zero freshness are never stored.
class ContentStore
{
public:
  explicit ContentStore(std::size_t capacity)
    : m_capacity(capacity)
  {
  }

  std::optional<DataPacket> find(const Name& name, SimTime now);
  void insert(const DataPacket& data, SimTime now);

  std::size_t size() const noexcept { return m_order.size(); }
  std::size_t capacity() const noexcept { return m_capacity; }

  struct Entry
  {
    DataPacket data;
    SimTime inserted_at;
  };

  /// Most recently used first.
  const std::list<Entry>& entries() const noexcept { return m_order; }

private:
  std::size_t m_capacity;
  std::list<Entry> m_order;
  std::map<Name, std::list<Entry>::iterator> m_index;
};

enum class StrategyKind {
  BestCost,
  RoundRobin,
};

std::string_view to_string(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(std::string_view text);

class Strategy
{
public:
  virtual ~Strategy() = default;
  virtual StrategyKind kind() const = 0;

  /// Picks an outgoing face among `entry`'s next hops, never `in_face`.
  virtual std::optional<FaceId> select(const FibEntry& entry, FaceId in_face) = 0;
};

/// Minimum cost; ties go to the lowest face id.
class BestCostStrategy final : public Strategy
{
public:
  StrategyKind kind() const override { return StrategyKind::BestCost; }
  std::optional<FaceId> select(const FibEntry& entry, FaceId in_face) override;
};

/// Cycles through the eligible next hops of each FIB prefix.
class RoundRobinStrategy final : public Strategy
{
public:
  StrategyKind kind() const override { return StrategyKind::RoundRobin; }
  std::optional<FaceId> select(const FibEntry& entry, FaceId in_face) override;

private:
  std::map<Name, std::size_t> m_cursor;
};

std::unique_ptr<Strategy> make_strategy(StrategyKind kind);

struct ForwardInterest
{
  FaceId face;
  Interest interest;
};

struct SendData
{
  FaceId face;
  DataPacket data;
};

enum class DropReason {
  DuplicateNonce,
  Unsolicited,
};

std::string_view to_string(DropReason reason);

struct Drop
{
  DropReason reason;
};

using Emission = std::variant<ForwardInterest, SendData, Drop>;

struct ForwarderCounters
{
  std::uint64_t cs_hits = 0;
  std::uint64_t cs_misses = 0;
  std::uint64_t aggregated = 0;
  std::uint64_t no_route = 0;
  std::uint64_t duplicate_nonce = 0;
  std::uint64_t unsolicited = 0;
  std::uint64_t pit_expired = 0;
};

/// Negative acknowledgement sent back when no route exists for an Interest.
DataPacket make_no_route(const Name& name);

class Forwarder
{
public:
  explicit Forwarder(std::size_t cs_capacity = 256, StrategyKind strategy = StrategyKind::BestCost);

  std::vector<Emission> on_interest(FaceId in_face, const Interest& interest, SimTime now);
  std::vector<Emission> on_data(FaceId in_face, const DataPacket& data, SimTime now);
  std::vector<Name> on_timeout(SimTime now);

  Fib& fib() noexcept { return m_fib; }
  const Fib& fib() const noexcept { return m_fib; }
  Pit& pit() noexcept { return m_pit; }
  const Pit& pit() const noexcept { return m_pit; }
  ContentStore& content_store() noexcept { return m_cs; }
  const ContentStore& content_store() const noexcept { return m_cs; }
  const Strategy& strategy() const noexcept { return *m_strategy; }
  const ForwarderCounters& counters() const noexcept { return m_counters; }

  using FaceLabeler = std::function<std::string(FaceId)>;

  /// Human-readable FIB/PIT/CS report.
  std::string dump(const FaceLabeler& label, SimTime now) const;

private:
  Fib m_fib;
  Pit m_pit;
  ContentStore m_cs;
  std::unique_ptr<Strategy> m_strategy;
  ForwarderCounters m_counters;
};

} // namespace lidc
