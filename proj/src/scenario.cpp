#include "lidc/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace lidc {

namespace {

SimTime parse_time(std::string_view text, int line)
{
  SimTime v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || v < 0) {
    throw ConfigError("bad time '" + std::string(text) + "'", line);
  }
  return v;
}

Name parse_name(const std::string& text, int line)
{
  try {
    return Name::parse(text);
  }
  catch (const NameError& e) {
    throw ConfigError(std::string("bad name '") + text + "': " + e.what(), line);
  }
}

std::optional<std::size_t> parse_ref(const std::string& text, int line)
{
  if (text.empty() || text[0] != '@') {
    return std::nullopt;
  }
  std::size_t k = 0;
  auto [ptr, ec] = std::from_chars(text.data() + 1, text.data() + text.size(), k);
  if (ec != std::errc{} || ptr != text.data() + text.size() || k == 0) {
    throw ConfigError("bad submission reference '" + text + "'", line);
  }
  return k;
}

void expect_args(const std::vector<std::string>& w, std::size_t n, std::string_view usage, int line)
{
  if (w.size() != n) {
    throw ConfigError("usage: " + std::string(usage), line);
  }
}

Bytes read_file(const fs::path& p, int line)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read file " + p.string(), line);
  }
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

Command parse_command(std::string_view text, const fs::path& base_dir, int line)
{
  auto w = split_words(text);
  if (w.empty()) {
    throw ConfigError("empty command", line);
  }
  const auto& verb = w[0];
  if (verb == "submit") {
    expect_args(w, 3, "submit <client> <compute-uri>", line);
    Name name = parse_name(w[2], line);
    if (!prefixes::compute().is_prefix_of(name)) {
      throw ConfigError("submit needs a /ndn/k8s/compute name", line);
    }
    return SubmitCmd{w[1], std::move(name)};
  }
  if (verb == "status") {
    expect_args(w, 3, "status <client> <job_id|@k>", line);
    if (auto k = parse_ref(w[2], line)) {
      return StatusCmd{w[1], *k};
    }
    try {
      return StatusCmd{w[1], JobId::parse(w[2])};
    }
    catch (const NameError& e) {
      throw ConfigError(e.what(), line);
    }
  }
  if (verb == "interest") {
    expect_args(w, 3, "interest <client> <uri>", line);
    return InterestCmd{w[1], parse_name(w[2], line)};
  }
  if (verb == "fetch") {
    expect_args(w, 3, "fetch <client> <uri|@k>", line);
    if (auto k = parse_ref(w[2], line)) {
      return FetchCmd{w[1], *k};
    }
    return FetchCmd{w[1], parse_name(w[2], line)};
  }
  if (verb == "publish") {
    expect_args(w, 4, "publish <cluster> <uri> <file>", line);
    fs::path p(w[3]);
    auto full = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    return PublishCmd{w[1], parse_name(w[2], line), read_file(full, line), w[3]};
  }
  if (verb == "add-cluster") {
    if (w.size() < 2) {
      throw ConfigError("usage: add-cluster <id> cpu=<n> mem=<n> apps=<a,b> [announce=<p1,p2>]", line);
    }
    AddCluster change;
    change.node.id = w[1];
    change.node.kind = NodeKind::Cluster;
    change.node.line = line;
    std::vector<std::string> options;
    for (std::size_t i = 2; i < w.size(); ++i) {
      if (w[i].starts_with("announce=")) {
        std::string_view list = std::string_view(w[i]).substr(9);
        std::size_t pos = 0;
        while (pos <= list.size()) {
          auto comma = list.find(',', pos);
          auto item = list.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
          if (!item.empty()) {
            change.announce.push_back(parse_name(std::string(item), line));
          }
          if (comma == std::string_view::npos) break;
          pos = comma + 1;
        }
      }
      else {
        options.push_back(w[i]);
      }
    }
    apply_node_options(change.node, options, base_dir, line);
    if (change.announce.empty()) {
      change.announce = {prefixes::compute(), prefixes::status(), prefixes::data()};
    }
    return TopologyChange{std::move(change)};
  }
  if (verb == "remove-cluster") {
    expect_args(w, 2, "remove-cluster <id>", line);
    return TopologyChange{RemoveCluster{w[1]}};
  }
  if (verb == "add-link") {
    expect_args(w, 4, "add-link <a> <b> <latency_ms>", line);
    return TopologyChange{AddLink{LinkConfig{w[1], w[2], parse_time(w[3], line), line}}};
  }
  if (verb == "remove-link") {
    expect_args(w, 3, "remove-link <a> <b>", line);
    return TopologyChange{RemoveLink{w[1], w[2]}};
  }
  if (verb == "announce") {
    expect_args(w, 3, "announce <node> <prefix>", line);
    return TopologyChange{Announce{w[1], parse_name(w[2], line)}};
  }
  throw ConfigError("unknown command '" + verb + "'", line);
}

Script Script::parse(std::string_view text, const fs::path& base_dir)
{
  Script script;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto w = split_words(raw);
    if (w.empty()) {
      continue;
    }
    if (w[0] == "topology") {
      expect_args(w, 2, "topology <file>", line);
      fs::path p(w[1]);
      script.topology = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }
    else if (w[0] == "end") {
      expect_args(w, 2, "end <ms>", line);
      script.end = parse_time(w[1], line);
    }
    else if (w[0] == "at") {
      if (w.size() < 3) {
        throw ConfigError("usage: at <ms> <command> ...", line);
      }
      SimTime at = parse_time(w[1], line);
      std::string rest;
      for (std::size_t i = 2; i < w.size(); ++i) {
        rest += (i > 2 ? " " : "") + w[i];
      }
      script.commands.push_back({at, parse_command(rest, base_dir, line), line, rest});
    }
    else {
      throw ConfigError("unknown directive '" + w[0] + "'", line);
    }
  }
  std::stable_sort(script.commands.begin(), script.commands.end(),
                   [](const ScriptLine& a, const ScriptLine& b) { return a.at < b.at; });
  return script;
}

Script Script::load(const fs::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open script " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

namespace {

std::string ref_text(const JobRef& ref)
{
  if (auto* k = std::get_if<std::size_t>(&ref)) {
    return "@" + std::to_string(*k);
  }
  return std::get<JobId>(ref).str();
}

} // namespace

std::string describe(const Command& command)
{
  struct Visitor
  {
    std::string operator()(const SubmitCmd& c) const { return "submit " + c.client + " " + c.name.to_uri(); }
    std::string operator()(const StatusCmd& c) const { return "status " + c.client + " " + ref_text(c.job); }
    std::string operator()(const InterestCmd& c) const { return "interest " + c.client + " " + c.name.to_uri(); }
    std::string operator()(const FetchCmd& c) const
    {
      if (auto* k = std::get_if<std::size_t>(&c.target)) {
        return "fetch " + c.client + " @" + std::to_string(*k);
      }
      return "fetch " + c.client + " " + std::get<Name>(c.target).to_uri();
    }
    std::string operator()(const PublishCmd& c) const
    {
      return "publish " + c.cluster + " " + c.name.to_uri() + " " + c.source;
    }
    std::string operator()(const TopologyChange& c) const
    {
      struct Inner
      {
        std::string operator()(const AddCluster& a) const { return "add-cluster " + a.node.id; }
        std::string operator()(const RemoveCluster& r) const { return "remove-cluster " + r.id; }
        std::string operator()(const AddLink& l) const
        {
          return "add-link " + l.link.a + " " + l.link.b + " " + std::to_string(l.link.latency_ms);
        }
        std::string operator()(const RemoveLink& l) const { return "remove-link " + l.a + " " + l.b; }
        std::string operator()(const Announce& a) const { return "announce " + a.node + " " + a.prefix.to_uri(); }
      };
      return std::visit(Inner{}, c);
    }
  };
  return std::visit(Visitor{}, command);
}

} // namespace lidc
