#include "lidc/topology.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace lidc {

std::string_view to_string(NodeKind kind)
{
  switch (kind) {
  case NodeKind::Client:
    return "client";
  case NodeKind::Router:
    return "router";
  case NodeKind::Cluster:
    return "cluster";
  }
  return "unknown";
}

std::vector<std::string> split_words(std::string_view line)
{
  if (auto hash = line.find('#'); hash != std::string_view::npos) {
    line = line.substr(0, hash);
  }
  std::vector<std::string> words;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) {
    words.push_back(w);
  }
  return words;
}

namespace {

template <typename T>
T parse_uint(std::string_view text, std::string_view what, int line)
{
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("bad " + std::string(what) + " '" + std::string(text) + "'", line);
  }
  return v;
}

std::vector<std::string> split_list(std::string_view text)
{
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (!item.empty()) {
      out.emplace_back(item);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

Name parse_prefix(const std::string& text, int line)
{
  try {
    return Name::parse(text);
  }
  catch (const NameError& e) {
    throw ConfigError(std::string("bad prefix: ") + e.what(), line);
  }
}

} // namespace

void apply_node_options(NodeConfig& node, std::span<const std::string> options, const fs::path& base_dir, int line)
{
  bool cluster = node.kind == NodeKind::Cluster;
  bool has_cpu = false;
  bool has_mem = false;
  bool has_apps = false;
  for (const auto& opt : options) {
    auto eq = opt.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key=value, got '" + opt + "'", line);
    }
    std::string key = opt.substr(0, eq);
    std::string value = opt.substr(eq + 1);
    auto cluster_only = [&] {
      if (!cluster) {
        throw ConfigError("option '" + key + "' applies to clusters only", line);
      }
    };
    if (key == "cpu") {
      cluster_only();
      node.cpu = parse_uint<std::uint32_t>(value, "cpu", line);
      has_cpu = true;
    }
    else if (key == "mem") {
      cluster_only();
      node.mem_gb = parse_uint<std::uint32_t>(value, "mem", line);
      has_mem = true;
    }
    else if (key == "apps") {
      cluster_only();
      node.apps = split_list(value);
      has_apps = true;
    }
    else if (key == "trace") {
      cluster_only();
      fs::path p(value);
      node.trace = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }
    else if (key == "startup") {
      cluster_only();
      node.startup_ms = parse_uint<SimTime>(value, "startup", line);
    }
    else if (key == "cs") {
      node.cs_capacity = parse_uint<std::size_t>(value, "cs", line);
    }
    else if (key == "strategy") {
      auto s = parse_strategy(value);
      if (!s) {
        throw ConfigError("unknown strategy '" + value + "'", line);
      }
      node.strategy = *s;
    }
    else {
      throw ConfigError("unknown option '" + key + "'", line);
    }
  }
  if (cluster) {
    if (!has_cpu || !has_mem || !has_apps) {
      throw ConfigError("cluster '" + node.id + "' needs cpu=, mem= and apps=", line);
    }
    if (node.cpu == 0 || node.mem_gb == 0) {
      throw ConfigError("cluster '" + node.id + "' needs positive cpu and mem", line);
    }
  }
}

const NodeConfig* TopologyConfig::find(std::string_view id) const
{
  for (const auto& n : nodes) {
    if (n.id == id) {
      return &n;
    }
  }
  return nullptr;
}

TopologyConfig TopologyConfig::parse(std::string_view text, const fs::path& base_dir)
{
  TopologyConfig config;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto words = split_words(raw);
    if (words.empty()) {
      continue;
    }
    const auto& directive = words[0];
    if (directive == "node") {
      if (words.size() < 3) {
        throw ConfigError("usage: node <id> <client|router|cluster> [options]", line);
      }
      NodeConfig node;
      node.id = words[1];
      node.line = line;
      if (words[2] == "client") node.kind = NodeKind::Client;
      else if (words[2] == "router") node.kind = NodeKind::Router;
      else if (words[2] == "cluster") node.kind = NodeKind::Cluster;
      else throw ConfigError("unknown node kind '" + words[2] + "'", line);
      apply_node_options(node, std::span(words).subspan(3), base_dir, line);
      config.nodes.push_back(std::move(node));
    }
    else if (directive == "link") {
      if (words.size() != 4) {
        throw ConfigError("usage: link <a> <b> <latency_ms>", line);
      }
      config.links.push_back({words[1], words[2], parse_uint<SimTime>(words[3], "latency", line), line});
    }
    else if (directive == "announce") {
      if (words.size() != 3) {
        throw ConfigError("usage: announce <node> <prefix>", line);
      }
      config.announcements.push_back({words[1], parse_prefix(words[2], line), line});
    }
    else {
      throw ConfigError("unknown directive '" + directive + "'", line);
    }
  }
  config.validate();
  return config;
}

TopologyConfig TopologyConfig::load(const fs::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open topology file " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

void TopologyConfig::validate() const
{
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    if (!ids.insert(n.id).second) {
      throw ConfigError("duplicate node id '" + n.id + "'", n.line);
    }
  }
  std::set<std::pair<std::string, std::string>> seen_links;
  for (const auto& l : links) {
    for (const auto* end : {&l.a, &l.b}) {
      if (!ids.contains(*end)) {
        throw ConfigError("link references unknown node '" + *end + "'", l.line);
      }
    }
    if (l.a == l.b) {
      throw ConfigError("self-link on '" + l.a + "'", l.line);
    }
    auto key = std::minmax(l.a, l.b);
    if (!seen_links.insert({key.first, key.second}).second) {
      throw ConfigError("duplicate link " + l.a + " " + l.b, l.line);
    }
  }
  std::set<std::string> serving;
  for (const auto& a : announcements) {
    const auto* node = find(a.node);
    if (node == nullptr) {
      throw ConfigError("announcement by unknown node '" + a.node + "'", a.line);
    }
    if (node->kind != NodeKind::Cluster) {
      throw ConfigError("only clusters announce prefixes ('" + a.node + "')", a.line);
    }
    if (prefixes::compute().is_prefix_of(a.prefix) || prefixes::data().is_prefix_of(a.prefix)) {
      serving.insert(a.node);
    }
  }
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::Cluster && !serving.contains(n.id)) {
      throw ConfigError("cluster '" + n.id + "' announces neither /ndn/k8s/compute nor /ndn/k8s/data", n.line);
    }
  }
}

} // namespace lidc
