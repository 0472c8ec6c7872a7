#include "bcer/artifact.hpp"

#include <cstdio>

namespace bcer {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string digest_hex(std::string_view payload) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(payload)));
  return buf;
}

nlohmann::json artifact_meta_to_json(const SimArtifact& a) {
  return {
      {"artifact_id", a.artifact_id},
      {"semantic_type", to_string(a.semantic_type)},
      {"content_digest", a.content_digest},
      {"produced_by", a.produced_by},
      {"case_id", a.case_id},
  };
}

SimArtifact artifact_from_meta_json(const nlohmann::json& j) {
  SimArtifact a;
  a.artifact_id = j.at("artifact_id").get<std::string>();
  a.semantic_type =
      semantic_type_from(j.at("semantic_type").get<std::string>())
          .value_or(SemanticType::VolumeRef);
  a.content_digest = j.at("content_digest").get<std::string>();
  a.produced_by = j.at("produced_by").get<std::string>();
  a.case_id = j.at("case_id").get<std::string>();
  return a;
}

}  // namespace bcer
