#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "bcer/types.hpp"
#include "json.hpp"

namespace bcer {

std::uint64_t fnv1a64(std::string_view data);

/// 16-hex-char digest of a payload. Pure function of its input, so
/// identical tool invocations always yield identical digests.
std::string digest_hex(std::string_view payload);

/// A synthetic case-scoped artifact. The payload is small deterministic
/// JSON text; the digest is a pure function of (tool name, canonical
/// sorted argument values, input artifact digests), which is exactly
/// what the payload encodes.
struct SimArtifact {
  std::string artifact_id;
  SemanticType semantic_type = SemanticType::VolumeRef;
  std::string content_digest;
  std::string produced_by;  // node id or "case-input"
  std::string case_id;
  std::string payload;
};

nlohmann::json artifact_meta_to_json(const SimArtifact& a);
SimArtifact artifact_from_meta_json(const nlohmann::json& j);

}  // namespace bcer
