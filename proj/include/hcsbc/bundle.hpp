#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "hcsbc/hierarchy.hpp"
#include "hcsbc/ontology.hpp"

namespace hcsbc {

inline constexpr std::string_view kEngineVersion = "0.3.0";
inline constexpr int kBundleFormatVersion = 1;

struct BundleOptions {
  // Manifest creation time. Defaults to the current UTC time; fix it to get
  // byte-identical bundles from identical trainings.
  std::optional<std::string> created;
};

// Writes the bundle directory (created if needed):
//   manifest.json, ontology.json, prep.json, config.json,
//   stage1/ + branches/<code>/ (hierarchical) or model/ (flat),
//   each component holding backend.json, component.json, model.bin.
void save_bundle(const PipelineModel& model, const std::filesystem::path& dir,
                 const BundleOptions& opts = {});

struct LoadedBundle {
  std::shared_ptr<PipelineModel> model;
  nlohmann::json manifest;
  std::string bundle_id;  // short hash of the manifest bytes
};

// Verifies format version, the ontology checksum (against the bundled
// ontology and, when given, against `expected`), and every file hash.
// Throws BundleError; nothing is returned on failure.
LoadedBundle load_bundle(const std::filesystem::path& dir, const Ontology* expected = nullptr);

}  // namespace hcsbc
