#pragma once

#include "lidc/gateway.hpp"
#include "lidc/orchestrator.hpp"

#include <optional>

namespace lidc::apps {

inline constexpr std::string_view kBlast = "BLAST";
inline constexpr std::string_view kCompress = "compress";

/// Stand-in for the sequence aligner: a deterministic report derived from the SRR id
/// and the digests of the input datasets.
Bytes run_blast(const ComputeSpec& spec, std::span<const JobInput> inputs);

/// Run-length encoding of the concatenated inputs: (count, byte) pairs, count <= 255.
Bytes run_compress(const ComputeSpec& spec, std::span<const JobInput> inputs);

/// Requires an "srr" parameter shaped like an SRA run accession (SRR/ERR/DRR + digits).
std::optional<std::string> check_blast(const ComputeSpec& spec);

/// Requires at least one input dataset.
std::optional<std::string> check_compress(const ComputeSpec& spec);

ValidationRegistry builtin_validations();

/// Builds a registry holding the named built-in apps. BLAST uses the trace model when a
/// trace table is supplied, falling back to `linear` otherwise. Throws
/// OrchestratorError(UnknownApp) for names that are not built in.
AppRegistry builtin_apps(std::span<const std::string> names, const std::optional<TraceTable>& trace,
                         const LinearModel& linear = {});

} // namespace lidc::apps
