#include "lidc/forwarder.hpp"

#include <algorithm>
#include <sstream>

namespace lidc {

void Fib::register_prefix(const Name& prefix, FaceId face, std::uint64_t cost)
{
  auto& entry = m_entries[prefix];
  entry.prefix = prefix;
  auto it = std::find_if(entry.next_hops.begin(), entry.next_hops.end(),
                         [face](const NextHop& nh) { return nh.face == face; });
  if (it != entry.next_hops.end()) {
    it->cost = cost;
  }
  else {
    entry.next_hops.push_back({face, cost});
  }
  std::sort(entry.next_hops.begin(), entry.next_hops.end(), [](const NextHop& a, const NextHop& b) {
    return a.cost != b.cost ? a.cost < b.cost : a.face < b.face;
  });
}

void Fib::unregister_prefix(const Name& prefix, FaceId face)
{
  auto it = m_entries.find(prefix);
  if (it == m_entries.end()) {
    return;
  }
  std::erase_if(it->second.next_hops, [face](const NextHop& nh) { return nh.face == face; });
  if (it->second.next_hops.empty()) {
    m_entries.erase(it);
  }
}

const FibEntry* Fib::lpm_lookup(const Name& name) const
{
  if (m_entries.empty()) {
    return nullptr;
  }
  for (std::size_t len = name.size() + 1; len-- > 0;) {
    if (auto* e = find_exact(name.prefix(len))) {
      return e;
    }
  }
  return nullptr;
}

const FibEntry* Fib::find_exact(const Name& prefix) const
{
  auto it = m_entries.find(prefix);
  return it == m_entries.end() ? nullptr : &it->second;
}

PitEntry* Pit::find(const Name& name)
{
  auto it = m_entries.find(name);
  return it == m_entries.end() ? nullptr : &it->second;
}

PitEntry& Pit::insert(const Name& name, PitEntry entry)
{
  return m_entries.insert_or_assign(name, std::move(entry)).first->second;
}

std::vector<Name> Pit::expire(SimTime now)
{
  std::vector<std::pair<SimTime, Name>> expired;
  for (auto it = m_entries.begin(); it != m_entries.end();) {
    if (it->second.expiry <= now) {
      expired.emplace_back(it->second.expiry, it->first);
      it = m_entries.erase(it);
    }
    else {
      ++it;
    }
  }
  std::sort(expired.begin(), expired.end());
  std::vector<Name> out;
  out.reserve(expired.size());
  for (auto& [_, name] : expired) {
    out.push_back(std::move(name));
  }
  return out;
}

std::optional<SimTime> Pit::next_expiry() const
{
  std::optional<SimTime> out;
  for (const auto& [_, e] : m_entries) {
    if (!out || e.expiry < *out) {
      out = e.expiry;
    }
  }
  return out;
}

std::optional<DataPacket> ContentStore::find(const Name& name, SimTime now)
{
  auto it = m_index.find(name);
  if (it == m_index.end()) {
    return std::nullopt;
  }
  auto entry = it->second;
  if (now - entry->inserted_at > static_cast<SimTime>(entry->data.freshness_ms)) {
    m_order.erase(entry);
    m_index.erase(it);
    return std::nullopt;
  }
  m_order.splice(m_order.begin(), m_order, entry);
  return entry->data;
}

void ContentStore::insert(const DataPacket& data, SimTime now)
{
  if (m_capacity == 0 || data.freshness_ms == 0) {
    return;
  }
  if (auto it = m_index.find(data.name); it != m_index.end()) {
    it->second->data = data;
    it->second->inserted_at = now;
    m_order.splice(m_order.begin(), m_order, it->second);
    return;
  }
  if (m_order.size() == m_capacity) {
    m_index.erase(m_order.back().data.name);
    m_order.pop_back();
  }
  m_order.push_front({data, now});
  m_index.emplace(data.name, m_order.begin());
}

std::string_view to_string(StrategyKind kind)
{
  return kind == StrategyKind::BestCost ? "best-cost" : "round-robin";
}

std::optional<StrategyKind> parse_strategy(std::string_view text)
{
  if (text == "best-cost") return StrategyKind::BestCost;
  if (text == "round-robin") return StrategyKind::RoundRobin;
  return std::nullopt;
}

std::optional<FaceId> BestCostStrategy::select(const FibEntry& entry, FaceId in_face)
{
  // next_hops is kept sorted by (cost, face)
  for (const auto& nh : entry.next_hops) {
    if (nh.face != in_face) {
      return nh.face;
    }
  }
  return std::nullopt;
}

std::optional<FaceId> RoundRobinStrategy::select(const FibEntry& entry, FaceId in_face)
{
  std::vector<FaceId> eligible;
  for (const auto& nh : entry.next_hops) {
    if (nh.face != in_face) {
      eligible.push_back(nh.face);
    }
  }
  if (eligible.empty()) {
    return std::nullopt;
  }
  auto& cursor = m_cursor[entry.prefix];
  FaceId chosen = eligible[cursor % eligible.size()];
  ++cursor;
  return chosen;
}

std::unique_ptr<Strategy> make_strategy(StrategyKind kind)
{
  if (kind == StrategyKind::RoundRobin) {
    return std::make_unique<RoundRobinStrategy>();
  }
  return std::make_unique<BestCostStrategy>();
}

std::string_view to_string(DropReason reason)
{
  return reason == DropReason::DuplicateNonce ? "duplicate-nonce" : "unsolicited";
}

DataPacket make_no_route(const Name& name)
{
  return DataPacket::make(name, to_bytes("no-route"), 0, ContentType::NoRoute);
}

Forwarder::Forwarder(std::size_t cs_capacity, StrategyKind strategy)
  : m_cs(cs_capacity)
  , m_strategy(make_strategy(strategy))
{
}

std::vector<Emission> Forwarder::on_interest(FaceId in_face, const Interest& interest, SimTime now)
{
  if (auto cached = m_cs.find(interest.name, now)) {
    ++m_counters.cs_hits;
    return {SendData{in_face, std::move(*cached)}};
  }
  ++m_counters.cs_misses;

  if (auto* entry = m_pit.find(interest.name)) {
    if (entry->nonces.contains(interest.nonce)) {
      ++m_counters.duplicate_nonce;
      return {Drop{DropReason::DuplicateNonce}};
    }
    entry->nonces.insert(interest.nonce);
    entry->in_faces.insert(in_face);
    entry->expiry = std::max(entry->expiry, now + static_cast<SimTime>(interest.lifetime_ms));
    ++m_counters.aggregated;
    return {};
  }

  const FibEntry* route = m_fib.lpm_lookup(interest.name);
  std::optional<FaceId> out_face;
  if (route != nullptr) {
    out_face = m_strategy->select(*route, in_face);
  }
  if (!out_face) {
    ++m_counters.no_route;
    return {SendData{in_face, make_no_route(interest.name)}};
  }

  PitEntry entry;
  entry.in_faces.insert(in_face);
  entry.nonces.insert(interest.nonce);
  entry.expiry = now + static_cast<SimTime>(interest.lifetime_ms);
  m_pit.insert(interest.name, std::move(entry));
  return {ForwardInterest{*out_face, interest}};
}

std::vector<Emission> Forwarder::on_data(FaceId /*in_face*/, const DataPacket& data, SimTime now)
{
  auto* entry = m_pit.find(data.name);
  if (entry == nullptr) {
    ++m_counters.unsolicited;
    return {Drop{DropReason::Unsolicited}};
  }
  m_cs.insert(data, now);
  std::vector<Emission> out;
  out.reserve(entry->in_faces.size());
  for (FaceId face : entry->in_faces) {
    out.push_back(SendData{face, data});
  }
  m_pit.erase(data.name);
  return out;
}

std::vector<Name> Forwarder::on_timeout(SimTime now)
{
  auto expired = m_pit.expire(now);
  m_counters.pit_expired += expired.size();
  return expired;
}

std::string Forwarder::dump(const FaceLabeler& label, SimTime now) const
{
  std::ostringstream os;
  os << "strategy=" << to_string(m_strategy->kind()) << "\n";
  os << "fib_entries=" << m_fib.size() << "\n";
  for (const auto& [prefix, entry] : m_fib.entries()) {
    os << "fib prefix=" << prefix.to_uri() << " nexthops=";
    bool first = true;
    for (const auto& nh : entry.next_hops) {
      os << (first ? "" : ",") << label(nh.face) << ":" << nh.cost;
      first = false;
    }
    os << "\n";
  }
  os << "pit_entries=" << m_pit.size() << "\n";
  for (const auto& [name, entry] : m_pit.entries()) {
    os << "pit name=" << name.to_uri() << " in_faces=";
    bool first = true;
    for (FaceId f : entry.in_faces) {
      os << (first ? "" : ",") << label(f);
      first = false;
    }
    os << " nonces=" << entry.nonces.size() << " expiry=" << entry.expiry << "\n";
  }
  os << "cs_entries=" << m_cs.size() << " cs_capacity=" << m_cs.capacity() << "\n";
  for (const auto& e : m_cs.entries()) {
    bool fresh = now - e.inserted_at <= static_cast<SimTime>(e.data.freshness_ms);
    os << "cs name=" << e.data.name.to_uri() << " size=" << e.data.content.size()
       << " inserted_at=" << e.inserted_at << " fresh=" << (fresh ? "yes" : "no") << "\n";
  }
  os << "counters cs_hits=" << m_counters.cs_hits << " cs_misses=" << m_counters.cs_misses
     << " aggregated=" << m_counters.aggregated << " no_route=" << m_counters.no_route
     << " duplicate_nonce=" << m_counters.duplicate_nonce << " unsolicited=" << m_counters.unsolicited
     << " pit_expired=" << m_counters.pit_expired << "\n";
  return os.str();
}

} // namespace lidc
