#include "hcsbc/bundle.hpp"

#include <chrono>
#include <ctime>
#include <map>

#include "hcsbc/corpus.hpp"
#include "hcsbc/errors.hpp"
#include "hcsbc/hash.hpp"

namespace hcsbc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class BundleWriter {
 public:
  explicit BundleWriter(fs::path root) : root_(std::move(root)) {}

  void put(const std::string& rel, std::string_view bytes) {
    const fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    write_file(p, bytes);
    files_[rel] = sha256_hex(bytes);
  }
  void put_json(const std::string& rel, const json& j) { put(rel, j.dump(2) + "\n"); }

  const std::map<std::string, std::string>& files() const { return files_; }

 private:
  fs::path root_;
  std::map<std::string, std::string> files_;
};

void put_component(BundleWriter& w, const std::string& dir, const Component& c,
                   const json& extra = json::object()) {
  json meta = {{"name", c.name},
               {"labels", c.labels()},
               {"thresholds", c.thresholds},
               {"n_train", c.n_train},
               {"warnings", c.warnings},
               {"classifier", c.classifier->kind()}};
  for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
  w.put_json(dir + "/backend.json", c.backend.to_json());
  w.put_json(dir + "/component.json", meta);
  w.put(dir + "/model.bin", c.classifier->serialize());
}

struct BundleReader {
  fs::path root;
  const json* files = nullptr;

  std::string get(const std::string& rel) const {
    if (!files->contains(rel)) throw BundleError("bundle: manifest does not list " + rel);
    std::string bytes;
    try {
      bytes = read_file(root / rel);
    } catch (const InputError&) {
      throw BundleError("bundle: missing file " + rel);
    }
    if (sha256_hex(bytes) != (*files)[rel].get<std::string>()) {
      throw BundleError("bundle: hash mismatch for " + rel + " (corrupt bundle)");
    }
    return bytes;
  }
  json get_json(const std::string& rel) const {
    try {
      return json::parse(get(rel));
    } catch (const json::exception& e) {
      throw BundleError("bundle: " + rel + ": " + e.what());
    }
  }
};

Component read_component(const BundleReader& r, const std::string& dir, json* meta_out = nullptr) {
  const json meta = r.get_json(dir + "/component.json");
  Component c;
  c.name = meta.at("name").get<std::string>();
  c.thresholds = meta.at("thresholds").get<std::vector<double>>();
  c.n_train = meta.at("n_train").get<std::size_t>();
  c.warnings = meta.at("warnings").get<std::vector<std::string>>();
  c.backend = FeatureBackend::from_json(r.get_json(dir + "/backend.json"));
  std::shared_ptr<const Classifier> clf = deserialize_classifier(r.get(dir + "/model.bin"));
  if (clf->label_names() != meta.at("labels").get<std::vector<std::string>>()) {
    throw BundleError("bundle: " + dir + " label list disagrees with its model");
  }
  if (clf->dim() != c.backend.dim()) {
    throw BundleError("bundle: " + dir + " model dim disagrees with its feature backend");
  }
  c.classifier = std::move(clf);
  if (meta_out) *meta_out = meta;
  return c;
}

}  // namespace

void save_bundle(const PipelineModel& model, const fs::path& dir, const BundleOptions& opts) {
  fs::create_directories(dir);
  BundleWriter w(dir);
  const Ontology& ont = model.ontology();
  w.put("ontology.json", ont.serialize());
  w.put_json("prep.json", model.config().prep.to_json());
  w.put_json("config.json", model.config().to_json());
  if (const auto* h = dynamic_cast<const HierarchicalModel*>(&model)) {
    put_component(w, "stage1", h->stage1());
    for (const auto& code : ont.branch_codes()) {
      put_component(w, "branches/" + code, h->branch(code));
    }
  } else if (const auto* f = dynamic_cast<const FlatModel*>(&model)) {
    put_component(w, "model", f->model(), {{"severity_table", f->severity_table()}});
  } else {
    throw BundleError("bundle: unsupported model type");
  }
  json manifest = {{"format", "hcsbc-bundle"},
                   {"format_version", kBundleFormatVersion},
                   {"engine_version", std::string(kEngineVersion)},
                   {"kind", model.kind()},
                   {"ontology_version", ont.version()},
                   {"ontology_checksum", ont.checksum()},
                   {"seed", model.config().seed},
                   {"created", opts.created.value_or(utc_now())},
                   {"files", w.files()}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

LoadedBundle load_bundle(const fs::path& dir, const Ontology* expected) {
  std::string manifest_bytes;
  try {
    manifest_bytes = read_file(dir / "manifest.json");
  } catch (const InputError&) {
    throw BundleError("bundle: no manifest.json in " + dir.string());
  }
  json manifest;
  try {
    manifest = json::parse(manifest_bytes);
  } catch (const json::exception& e) {
    throw BundleError(std::string("bundle: malformed manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "hcsbc-bundle") {
    throw BundleError("bundle: not an hcsbc bundle");
  }
  const int version = manifest.value("format_version", -1);
  if (version != kBundleFormatVersion) {
    throw BundleError("bundle: format version " + std::to_string(version) + " (engine " +
                      manifest.value("engine_version", std::string("?")) +
                      ") is not supported by engine " + std::string(kEngineVersion));
  }
  if (!manifest.contains("files") || !manifest["files"].is_object()) {
    throw BundleError("bundle: manifest lacks a file table");
  }
  const std::string want_checksum = manifest.value("ontology_checksum", "");
  BundleReader r{dir, &manifest["files"]};

  // The ontology is checked by content before its file hash, so an edited
  // ontology reports as a checksum mismatch.
  std::optional<Ontology> ont;
  try {
    ont = Ontology::load(read_file(dir / "ontology.json"));
  } catch (const Error& e) {
    throw BundleError(std::string("bundle: ontology: ") + e.what());
  }
  if (ont->checksum() != want_checksum) {
    throw BundleError("bundle: ontology checksum mismatch (manifest " + want_checksum + ", file " +
                      ont->checksum() + ")");
  }
  if (expected && expected->checksum() != want_checksum) {
    throw BundleError("bundle: ontology checksum mismatch (bundle " + want_checksum +
                      ", supplied " + expected->checksum() + ")");
  }
  for (auto it = manifest["files"].begin(); it != manifest["files"].end(); ++it) r.get(it.key());

  HierarchyConfig cfg;
  try {
    cfg = HierarchyConfig::from_json(r.get_json("config.json"));
    cfg.prep = PrepConfig::from_json(r.get_json("prep.json"));
  } catch (const BundleError&) {
    throw;
  } catch (const std::exception& e) {
    throw BundleError(std::string("bundle: config: ") + e.what());
  }

  LoadedBundle out;
  out.manifest = manifest;
  out.bundle_id = sha256_hex(manifest_bytes).substr(0, 16);
  try {
    const std::string kind = manifest.value("kind", "");
    if (kind == "hierarchical") {
      Component stage1 = read_component(r, "stage1");
      std::map<std::string, Component> branches;
      for (const auto& code : ont->branch_codes()) {
        branches.emplace(code, read_component(r, "branches/" + code));
      }
      out.model = std::make_shared<HierarchicalModel>(*ont, cfg, std::move(stage1),
                                                      std::move(branches));
    } else if (kind == "flat") {
      json meta;
      Component c = read_component(r, "model", &meta);
      out.model = std::make_shared<FlatModel>(
          *ont, cfg, std::move(c),
          meta.at("severity_table").get<std::map<std::string, std::string>>());
    } else {
      throw BundleError("bundle: unknown model kind '" + kind + "'");
    }
  } catch (const BundleError&) {
    throw;
  } catch (const std::exception& e) {
    throw BundleError(std::string("bundle: ") + e.what());
  }
  return out;
}

}  // namespace hcsbc
