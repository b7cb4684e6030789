#include "lidc/compute_spec.hpp"
#include "lidc/digest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <utility>

namespace lidc {

namespace {

constexpr std::string_view kApp = "app";
constexpr std::string_view kMem = "mem";
constexpr std::string_view kCpu = "cpu";
constexpr std::string_view kData = "data";

std::vector<std::string_view> split(std::string_view text, char sep)
{
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = text.find(sep, pos);
    out.push_back(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) {
      return out;
    }
    pos = next + 1;
  }
}

std::string unescape_value(std::string_view text)
{
  try {
    return percent_unescape(text);
  }
  catch (const NameError& e) {
    throw NameError(NameErrc::BadValue, e.what());
  }
}

std::uint32_t parse_positive(std::string_view key, std::string_view text)
{
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || value == 0) {
    throw NameError(NameErrc::BadValue, std::string(key) + " must be a positive integer");
  }
  return value;
}

} // namespace

bool is_reserved_key(std::string_view key)
{
  return key == kApp || key == kMem || key == kCpu || key == kData;
}

void validate(const ComputeSpec& spec)
{
  if (spec.app.empty()) {
    throw NameError(NameErrc::BadValue, "app must be non-empty");
  }
  if (spec.mem_gb < 1) {
    throw NameError(NameErrc::BadValue, "mem must be >= 1");
  }
  if (spec.cpu < 1) {
    throw NameError(NameErrc::BadValue, "cpu must be >= 1");
  }
  for (const auto& [key, value] : spec.params) {
    if (key.empty() || value.empty()) {
      throw NameError(NameErrc::BadValue, "parameter keys and values must be non-empty");
    }
    if (is_reserved_key(key)) {
      throw NameError(NameErrc::BadValue, "reserved parameter key: " + key);
    }
  }
}

ComputeSpec parse_compute_component(std::string_view component)
{
  ComputeSpec spec;
  bool has_app = false;
  bool has_mem = false;
  bool has_cpu = false;
  bool has_data = false;

  for (auto pair : split(component, '&')) {
    auto eq = pair.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw NameError(NameErrc::BadValue, "malformed parameter: " + std::string(pair));
    }
    std::string key = unescape_value(pair.substr(0, eq));
    auto raw_value = pair.substr(eq + 1);

    auto check_dup = [&](bool& seen) {
      if (seen) {
        throw NameError(NameErrc::DuplicateKey, "duplicate key: " + key);
      }
      seen = true;
    };

    if (key == kApp) {
      check_dup(has_app);
      spec.app = unescape_value(raw_value);
      if (spec.app.empty()) {
        throw NameError(NameErrc::BadValue, "app must be non-empty");
      }
    }
    else if (key == kMem) {
      check_dup(has_mem);
      spec.mem_gb = parse_positive(kMem, raw_value);
    }
    else if (key == kCpu) {
      check_dup(has_cpu);
      spec.cpu = parse_positive(kCpu, raw_value);
    }
    else if (key == kData) {
      check_dup(has_data);
      for (auto item : split(raw_value, ',')) {
        if (item.empty()) {
          throw NameError(NameErrc::BadValue, "empty dataset name");
        }
        try {
          spec.datasets.push_back(Name::parse(unescape_value(item)));
        }
        catch (const NameError& e) {
          throw NameError(NameErrc::BadValue, std::string("bad dataset name: ") + e.what());
        }
      }
    }
    else {
      std::string value = unescape_value(raw_value);
      if (value.empty()) {
        throw NameError(NameErrc::BadValue, "empty value for key: " + key);
      }
      if (!spec.params.emplace(key, std::move(value)).second) {
        throw NameError(NameErrc::DuplicateKey, "duplicate key: " + key);
      }
    }
  }

  if (!has_app) throw NameError(NameErrc::MissingKey, "missing key: app");
  if (!has_mem) throw NameError(NameErrc::MissingKey, "missing key: mem");
  if (!has_cpu) throw NameError(NameErrc::MissingKey, "missing key: cpu");
  return spec;
}

std::string build_compute_component(const ComputeSpec& spec)
{
  validate(spec);
  std::vector<std::pair<std::string, std::string>> entries;
  entries.emplace_back(kApp, spec.app);
  entries.emplace_back(kCpu, std::to_string(spec.cpu));
  entries.emplace_back(kMem, std::to_string(spec.mem_gb));
  if (!spec.datasets.empty()) {
    std::string joined;
    for (const auto& ds : spec.datasets) {
      if (!joined.empty()) {
        joined.push_back(',');
      }
      joined += percent_escape(ds.to_uri(), EscapeSet::ParamValue);
    }
    // already escaped: keep it out of the per-value escaping below
    entries.emplace_back(kData, std::move(joined));
  }
  for (const auto& [k, v] : spec.params) {
    entries.emplace_back(k, v);
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::string out;
  for (const auto& [k, v] : entries) {
    if (!out.empty()) {
      out.push_back('&');
    }
    out += percent_escape(k, EscapeSet::ParamValue);
    out.push_back('=');
    out += k == kData ? v : percent_escape(v, EscapeSet::ParamValue);
  }
  return out;
}

Name build_compute_name(const ComputeSpec& spec)
{
  return prefixes::compute().append(build_compute_component(spec));
}

JobId JobId::parse(std::string_view text)
{
  bool ok = text.size() == 16 && std::all_of(text.begin(), text.end(), [](char c) {
              return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
            });
  if (!ok) {
    throw NameError(NameErrc::BadValue, "job id must be 16 lowercase hex characters");
  }
  return JobId(std::string(text));
}

JobId JobId::derive(const Name& compute_name, std::uint32_t nonce)
{
  auto uri = compute_name.to_uri();
  std::array<std::uint8_t, 4> nonce_bytes{
    static_cast<std::uint8_t>(nonce >> 24), static_cast<std::uint8_t>(nonce >> 16),
    static_cast<std::uint8_t>(nonce >> 8), static_cast<std::uint8_t>(nonce)};
  auto digest = sha256({ByteView(reinterpret_cast<const std::uint8_t*>(uri.data()), uri.size()),
                        ByteView(nonce_bytes)});
  return JobId(to_hex(ByteView(digest).first(8)));
}

ParsedRequest classify_request(const Name& name)
{
  if (prefixes::compute().is_prefix_of(name)) {
    if (name.size() != prefixes::compute().size() + 1) {
      throw NameError(NameErrc::BadValue, "compute name must have exactly one parameter component");
    }
    return ComputeRequest{parse_compute_component(name.back())};
  }
  if (prefixes::status().is_prefix_of(name)) {
    if (name.size() != prefixes::status().size() + 1) {
      throw NameError(NameErrc::BadValue, "status name must end with a job id");
    }
    return StatusRequest{JobId::parse(name.back())};
  }
  if (prefixes::data().is_prefix_of(name)) {
    return DataRequest{name};
  }
  throw NameError(NameErrc::UnknownPrefix, "unrecognized prefix: " + name.to_uri());
}

Name status_name(const JobId& id) { return prefixes::status().append(id.str()); }

Name result_name(const JobId& id) { return prefixes::results().append(id.str()); }

} // namespace lidc
