#include "lidc/datalake.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace lidc {

namespace {

constexpr std::string_view kManifestComponent = "manifest";
constexpr std::string_view kSegmentPrefix = "seg=";

std::optional<std::uint64_t> parse_u64(std::string_view text)
{
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return v;
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return a == 0 ? 0 : 1 + (a - 1) / b; }

Bytes read_file(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    throw DataLakeError(DataLakeErrc::CorruptStore, "cannot read " + p.string());
  }
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, ByteView bytes)
{
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("cannot write " + p.string());
  }
}

DataPacket error_data(const Name& name, std::string_view message)
{
  return DataPacket::make(name, to_bytes("error=" + std::string(message)), 0, ContentType::Error);
}

} // namespace

std::string DatasetManifest::to_text() const
{
  std::ostringstream os;
  os << "name=" << name.to_uri() << "\n"
     << "declared_size=" << declared_size << "\n"
     << "stored_size=" << stored_size << "\n"
     << "segment_size=" << segment_size << "\n"
     << "segment_count=" << segment_count << "\n"
     << "digest=" << to_hex(digest) << "\n";
  return os.str();
}

DatasetManifest DatasetManifest::from_text(std::string_view text)
{
  std::map<std::string, std::string, std::less<>> fields;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataLakeError(DataLakeErrc::CorruptStore, "malformed manifest line: " + line);
    }
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto field = [&](std::string_view key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) {
      throw DataLakeError(DataLakeErrc::CorruptStore, "manifest missing " + std::string(key));
    }
    return it->second;
  };
  auto number = [&](std::string_view key) {
    auto v = parse_u64(field(key));
    if (!v) {
      throw DataLakeError(DataLakeErrc::CorruptStore, "manifest field not numeric: " + std::string(key));
    }
    return *v;
  };

  DatasetManifest m;
  try {
    m.name = Name::parse(field("name"));
    auto digest = from_hex(field("digest"));
    if (digest.size() != m.digest.size()) {
      throw DataLakeError(DataLakeErrc::CorruptStore, "manifest digest has wrong length");
    }
    std::copy(digest.begin(), digest.end(), m.digest.begin());
  }
  catch (const NameError& e) {
    throw DataLakeError(DataLakeErrc::CorruptStore, e.what());
  }
  catch (const std::invalid_argument& e) {
    throw DataLakeError(DataLakeErrc::CorruptStore, e.what());
  }
  m.declared_size = number("declared_size");
  m.stored_size = number("stored_size");
  m.segment_size = number("segment_size");
  m.segment_count = number("segment_count");
  return m;
}

Name manifest_name(const Name& dataset) { return dataset.append(std::string(kManifestComponent)); }

Name segment_name(const Name& dataset, std::uint64_t index)
{
  return dataset.append(std::string(kSegmentPrefix) + std::to_string(index));
}

DataLake::DataLake(std::uint64_t segment_size)
  : m_segment_size(segment_size)
{
  if (segment_size == 0 || segment_size > kMaxSegmentSize) {
    throw DataLakeError(DataLakeErrc::InvalidArgument, "segment size out of range");
  }
}

const DatasetManifest& DataLake::publish(const Name& name, Bytes payload,
                                         std::optional<std::uint64_t> declared_size, bool overwrite)
{
  if (!prefixes::data().is_prefix_of(name) || name.size() <= prefixes::data().size()) {
    throw DataLakeError(DataLakeErrc::NamespaceViolation, "not under /ndn/k8s/data: " + name.to_uri());
  }
  if (!overwrite && m_datasets.contains(name)) {
    throw DataLakeError(DataLakeErrc::NameCollision, "already published: " + name.to_uri());
  }
  std::uint64_t declared = declared_size.value_or(payload.size());
  if (declared < payload.size()) {
    throw DataLakeError(DataLakeErrc::InvalidArgument, "declared size smaller than payload");
  }

  DatasetManifest m;
  m.name = name;
  m.declared_size = declared;
  m.stored_size = payload.size();
  m.segment_size = m_segment_size;
  m.segment_count = ceil_div(payload.size(), m_segment_size);
  m.digest = sha256(payload);

  auto& slot = m_datasets[name];
  slot = Dataset{std::move(m), std::move(payload)};
  return slot.manifest;
}

const DataLake::Dataset& DataLake::find(const Name& name) const
{
  auto it = m_datasets.find(name);
  if (it == m_datasets.end()) {
    throw DataLakeError(DataLakeErrc::NotFound, "not found: " + name.to_uri());
  }
  return it->second;
}

const DatasetManifest& DataLake::get_manifest(const Name& name) const { return find(name).manifest; }

ByteView DataLake::get_segment(const Name& name, std::uint64_t index) const
{
  const auto& ds = find(name);
  if (index >= ds.manifest.segment_count) {
    throw DataLakeError(DataLakeErrc::SegmentOutOfRange, "segment out of range");
  }
  std::uint64_t begin = index * ds.manifest.segment_size;
  std::uint64_t len = std::min(ds.manifest.segment_size, ds.manifest.stored_size - begin);
  return ByteView(ds.payload).subspan(begin, len);
}

const Bytes& DataLake::payload(const Name& name) const { return find(name).payload; }

DataPacket DataLake::serve(const Interest& interest) const
{
  const Name& name = interest.name;
  if (name.empty()) {
    return error_data(name, "not found");
  }
  Name dataset = name.prefix(name.size() - 1);
  const std::string& last = name.back();
  try {
    if (last == kManifestComponent) {
      return DataPacket::make(name, to_bytes(get_manifest(dataset).to_text()), kDataLakeFreshnessMs);
    }
    if (last.starts_with(kSegmentPrefix)) {
      auto index = parse_u64(std::string_view(last).substr(kSegmentPrefix.size()));
      if (!index) {
        return error_data(name, "bad segment index");
      }
      auto seg = get_segment(dataset, *index);
      return DataPacket::make(name, Bytes(seg.begin(), seg.end()), kDataLakeFreshnessMs);
    }
  }
  catch (const DataLakeError& e) {
    return error_data(name, e.code() == DataLakeErrc::NotFound ? "not found" : "segment out of range");
  }
  return error_data(name, "not found");
}

void DataLake::persist(const fs::path& root) const
{
  fs::create_directories(root);
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && entry.path().filename().string().starts_with("%2F")) {
      fs::remove_all(entry.path());
    }
  }
  for (const auto& [name, ds] : m_datasets) {
    auto dir = root / percent_escape(name.to_uri(), EscapeSet::UriComponent);
    fs::create_directories(dir);
    auto text = ds.manifest.to_text();
    write_file(dir / "manifest", to_bytes(text));
    write_file(dir / "payload", ds.payload);
  }
}

DataLake DataLake::load(const fs::path& root, std::uint64_t segment_size)
{
  DataLake lake(segment_size);
  if (!fs::is_directory(root)) {
    throw DataLakeError(DataLakeErrc::NotFound, "no data lake at " + root.string());
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    auto manifest = DatasetManifest::from_text(to_string(ByteView(read_file(dir / "manifest"))));
    auto payload = read_file(dir / "payload");
    bool consistent = manifest.stored_size == payload.size() && manifest.declared_size >= manifest.stored_size &&
                      manifest.segment_size > 0 && manifest.segment_size <= kMaxSegmentSize &&
                      manifest.segment_count == ceil_div(manifest.stored_size, manifest.segment_size) &&
                      sha256(payload) == manifest.digest &&
                      dir.filename().string() == percent_escape(manifest.name.to_uri(), EscapeSet::UriComponent);
    if (!consistent) {
      throw DataLakeError(DataLakeErrc::CorruptStore, "corrupt dataset at " + dir.string());
    }
    Name name = manifest.name;
    lake.m_datasets[name] = Dataset{std::move(manifest), std::move(payload)};
  }
  return lake;
}

std::vector<Name> DataLake::names() const
{
  std::vector<Name> out;
  for (const auto& [name, _] : m_datasets) {
    out.push_back(name);
  }
  return out;
}

} // namespace lidc
