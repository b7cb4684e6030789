#pragma once

#include "lidc/common.hpp"
#include "lidc/digest.hpp"
#include "lidc/name.hpp"
#include "lidc/wire.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>

namespace lidc {

enum class DataLakeErrc {
  NameCollision,
  NamespaceViolation,
  NotFound,
  SegmentOutOfRange,
  CorruptStore,
  InvalidArgument,
};

class DataLakeError : public std::runtime_error
{
public:
  DataLakeError(DataLakeErrc code, const std::string& what)
    : std::runtime_error(what)
    , m_code(code)
  {
  }

  DataLakeErrc code() const noexcept { return m_code; }

private:
  DataLakeErrc m_code;
};

inline constexpr std::uint64_t kDefaultSegmentSize = 8 * 1024;
inline constexpr std::uint64_t kMaxSegmentSize = kMaxPacketSize - 64 * 1024;
inline constexpr std::uint64_t kDataLakeFreshnessMs = 3'600'000;

struct DatasetManifest
{
  Name name;
  std::uint64_t declared_size = 0;
  std::uint64_t stored_size = 0;
  std::uint64_t segment_size = kDefaultSegmentSize;
  std::uint64_t segment_count = 0;
  Digest digest{};

  /// Lines "name=", "declared_size=", "stored_size=", "segment_size=",
  /// "segment_count=", "digest=<hex>".
  std::string to_text() const;
  /// Throws DataLakeError(CorruptStore) on malformed text.
  static DatasetManifest from_text(std::string_view text);

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Named repository under /ndn/k8s/data. Manifests are served under "<name>/manifest"
/// and segments under "<name>/seg=<i>".
class DataLake
{
public:
  explicit DataLake(std::uint64_t segment_size = kDefaultSegmentSize);

  /// declared_size defaults to the payload size and may not be smaller than it.
  const DatasetManifest& publish(const Name& name, Bytes payload,
                                 std::optional<std::uint64_t> declared_size = std::nullopt,
                                 bool overwrite = false);

  bool contains(const Name& name) const { return m_datasets.contains(name); }
  const DatasetManifest& get_manifest(const Name& name) const;
  ByteView get_segment(const Name& name, std::uint64_t index) const;
  const Bytes& payload(const Name& name) const;

  /// Answers a manifest or segment Interest. Missing datasets and bad segment indices
  /// produce an Error-typed Data packet.
  DataPacket serve(const Interest& interest) const;

  /// One directory per dataset (escaped URI), holding "manifest" and "payload".
  void persist(const std::filesystem::path& root) const;
  static DataLake load(const std::filesystem::path& root, std::uint64_t segment_size = kDefaultSegmentSize);

  std::uint64_t segment_size() const noexcept { return m_segment_size; }
  std::size_t size() const noexcept { return m_datasets.size(); }
  std::vector<Name> names() const;

  friend bool operator==(const DataLake&, const DataLake&) = default;

private:
  struct Dataset
  {
    DatasetManifest manifest;
    Bytes payload;

    friend bool operator==(const Dataset&, const Dataset&) = default;
  };

  const Dataset& find(const Name& name) const;

  std::uint64_t m_segment_size;
  std::map<Name, Dataset> m_datasets;
};

Name manifest_name(const Name& dataset);
Name segment_name(const Name& dataset, std::uint64_t index);

} // namespace lidc
