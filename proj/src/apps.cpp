#include "lidc/apps.hpp"

#include <regex>
#include <sstream>

namespace lidc::apps {

Bytes run_blast(const ComputeSpec& spec, std::span<const JobInput> inputs)
{
  auto srr_it = spec.params.find("srr");
  std::string srr = srr_it == spec.params.end() ? "" : srr_it->second;

  Bytes material = to_bytes(srr);
  for (const auto& in : inputs) {
    material.insert(material.end(), in.digest.begin(), in.digest.end());
  }
  auto digest = sha256(material);

  std::ostringstream os;
  os << "app=BLAST\n"
     << "srr=" << srr << "\n"
     << "mem_gb=" << spec.mem_gb << "\n"
     << "cpu=" << spec.cpu << "\n";
  for (const auto& in : inputs) {
    os << "reference=" << in.name.to_uri() << " digest=" << to_hex(in.digest) << "\n";
  }
  // a few pseudo alignment hits so the report has some body
  for (int i = 0; i < 4; ++i) {
    std::uint32_t score = std::uint32_t{digest[4 * i]} << 8 | digest[4 * i + 1];
    std::uint32_t pos = std::uint32_t{digest[4 * i + 2]} << 8 | digest[4 * i + 3];
    os << "hit=" << i << " position=" << pos << " score=" << score % 1000 << "\n";
  }
  os << "alignment_digest=" << to_hex(digest) << "\n";
  return to_bytes(os.str());
}

Bytes run_compress(const ComputeSpec&, std::span<const JobInput> inputs)
{
  Bytes out;
  std::optional<std::uint8_t> current;
  std::uint8_t count = 0;
  auto flush = [&] {
    if (current) {
      out.push_back(count);
      out.push_back(*current);
    }
  };
  for (const auto& in : inputs) {
    for (auto b : in.payload) {
      if (current == b && count < 255) {
        ++count;
        continue;
      }
      flush();
      current = b;
      count = 1;
    }
  }
  flush();
  return out;
}

std::optional<std::string> check_blast(const ComputeSpec& spec)
{
  static const std::regex kAccession("^[SED]RR[0-9]{6,}$");
  auto it = spec.params.find("srr");
  if (it == spec.params.end()) {
    return "missing SRR_ID";
  }
  if (!std::regex_match(it->second, kAccession)) {
    return "invalid SRR_ID";
  }
  return std::nullopt;
}

std::optional<std::string> check_compress(const ComputeSpec& spec)
{
  if (spec.datasets.empty()) {
    return "compress requires at least one dataset";
  }
  return std::nullopt;
}

ValidationRegistry builtin_validations()
{
  ValidationRegistry registry;
  registry.register_plugin(std::string(kBlast), check_blast);
  registry.register_plugin(std::string(kCompress), check_compress);
  return registry;
}

AppRegistry builtin_apps(std::span<const std::string> names, const std::optional<TraceTable>& trace,
                         const LinearModel& linear)
{
  AppRegistry registry;
  for (const auto& name : names) {
    if (name == kBlast) {
      DurationModel model = linear;
      if (trace) {
        model = TraceModel{*trace, linear};
      }
      registry.add(name, App{run_blast, std::move(model)});
    }
    else if (name == kCompress) {
      registry.add(name, App{run_compress, linear});
    }
    else {
      throw OrchestratorError(OrchestratorErrc::UnknownApp, "unknown app: " + name);
    }
  }
  return registry;
}

} // namespace lidc::apps
