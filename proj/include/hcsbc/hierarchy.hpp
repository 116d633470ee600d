#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcsbc/corpus.hpp"
#include "hcsbc/features.hpp"
#include "hcsbc/learners.hpp"
#include "hcsbc/ontology.hpp"
#include "hcsbc/segmenter.hpp"
#include "hcsbc/textprep.hpp"

namespace hcsbc {

// Text after domain normalization plus its token stream (pre-mask).
struct PreparedText {
  std::string normalized;
  TokenStream tokens;
};

PreparedText prepare_text(std::string_view text, const PrepConfig& prep);

enum class BackendKind { Tfidf, Embed };

struct BackendConfig {
  BackendKind kind = BackendKind::Tfidf;
  TfidfConfig tfidf;
  EmbedProviderConfig embed;

  nlohmann::json to_json() const;
  static BackendConfig from_json(const nlohmann::json& j);
};

std::string_view to_string(BackendKind k);
BackendKind parse_backend_kind(std::string_view s);

// Feature backend fitted on one component's training rows: a rare-word
// mask and tf-idf model, or an embedding-provider reference.
class FeatureBackend {
 public:
  FeatureBackend() = default;

  // An empty row set yields a zero-dimensional tf-idf backend.
  static FeatureBackend fit(const BackendConfig& cfg, const PrepConfig& prep,
                            const std::vector<const PreparedText*>& rows);

  BackendKind kind() const noexcept { return kind_; }
  std::size_t dim() const;
  const VocabMask& mask() const noexcept { return mask_; }
  const TfidfModel& tfidf() const noexcept { return tfidf_; }
  const EmbedProviderConfig& embed() const noexcept { return embed_; }
  // For tests and offline runs: replaces the provider endpoint.
  void set_embed_endpoint(std::string url) { embed_.endpoint = std::move(url); }

  FeatureMatrix transform(const std::vector<const PreparedText*>& rows) const;
  SparseVector transform(const PreparedText& row) const;

  nlohmann::json to_json() const;
  static FeatureBackend from_json(const nlohmann::json& j);

 private:
  BackendKind kind_ = BackendKind::Tfidf;
  VocabMask mask_;
  TfidfModel tfidf_;
  EmbedProviderConfig embed_;
};

// One trained classifier with its own features and thresholds: the
// stage-1 severity model, one branch, or the flat model.
struct Component {
  std::string name;
  FeatureBackend backend;
  std::shared_ptr<const Classifier> classifier;
  std::vector<double> thresholds;  // one per classifier label
  std::size_t n_train = 0;
  std::vector<std::string> warnings;

  const std::vector<std::string>& labels() const { return classifier->label_names(); }
  std::vector<double> probabilities(const PreparedText& row) const;
  std::vector<std::vector<double>> probabilities(
      const std::vector<const PreparedText*>& rows) const;
};

struct HierarchyConfig {
  PrepConfig prep;
  BackendConfig stage1_backend;
  BackendConfig branch_backend;
  LearnerConfig stage1_learner;
  LearnerConfig branch_learner;
  double threshold = 0.5;
  std::map<std::string, double> thresholds;  // per severity or diagnosis
  std::uint64_t seed = 42;

  double threshold_for(const std::string& label) const;

  nlohmann::json to_json() const;
  static HierarchyConfig from_json(const nlohmann::json& j);
};

struct SeverityScore {
  std::string code;
  double probability = 0.0;

  bool operator==(const SeverityScore&) const = default;
};

struct DiagnosisScore {
  std::string label;
  double probability = 0.0;
  std::string severity;

  bool operator==(const DiagnosisScore&) const = default;
};

struct Prediction {
  std::string report_id;
  std::string part_id;
  std::vector<SeverityScore> severities;  // above threshold, ontology order
  std::vector<DiagnosisScore> diagnoses;  // above threshold, ontology order
  bool no_prediction = false;

  // Label set in the evaluation space (diagnosis names plus "NEG").
  std::vector<std::string> label_set() const;
  bool operator==(const Prediction&) const = default;
};

struct TrainingReport {
  struct Entry {
    std::string component;
    std::size_t n_train = 0;
    std::size_t n_labels = 0;
    std::size_t dim = 0;
    std::vector<std::string> warnings;
  };
  std::vector<Entry> components;

  nlohmann::json to_json() const;
};

// Token contribution to the current prediction.
struct TokenImportance {
  std::string token;
  std::string surface;
  double score = 0.0;
};

class PipelineModel {
 public:
  virtual ~PipelineModel() = default;

  virtual std::string kind() const = 0;  // "hierarchical" | "flat"
  virtual const Ontology& ontology() const = 0;
  virtual const HierarchyConfig& config() const = 0;
  virtual std::vector<Component*> components() = 0;
  virtual std::vector<const Component*> components() const = 0;

  virtual std::vector<Prediction> predict_prepared(
      const std::vector<const PreparedText*>& rows) const = 0;

  std::vector<Prediction> predict(const std::vector<SpecimenPart>& parts) const;
  Prediction predict(const SpecimenPart& part) const;

  // Reapplies the global threshold (and per-label overrides) to every
  // component, e.g. for a CLI --threshold flag.
  void set_threshold(double t, const std::map<std::string, double>& overrides = {});

  // Evaluation label space: ontology diagnoses then "NEG".
  std::vector<std::string> eval_labels() const;

  TrainingReport training_report() const;
};

class HierarchicalModel final : public PipelineModel {
 public:
  HierarchicalModel(Ontology ont, HierarchyConfig cfg, Component stage1,
                    std::map<std::string, Component> branches);

  std::string kind() const override { return "hierarchical"; }
  const Ontology& ontology() const override { return ont_; }
  const HierarchyConfig& config() const override { return cfg_; }
  std::vector<Component*> components() override;
  std::vector<const Component*> components() const override;
  std::vector<Prediction> predict_prepared(
      const std::vector<const PreparedText*>& rows) const override;

  const Component& stage1() const noexcept { return stage1_; }
  const Component& branch(const std::string& code) const;
  const std::map<std::string, Component>& branches() const noexcept { return branches_; }

 private:
  Ontology ont_;
  HierarchyConfig cfg_;
  Component stage1_;
  std::map<std::string, Component> branches_;
};

class FlatModel final : public PipelineModel {
 public:
  // severity_table maps each label to its severity code, for display only.
  FlatModel(Ontology ont, HierarchyConfig cfg, Component model,
            std::map<std::string, std::string> severity_table);

  std::string kind() const override { return "flat"; }
  const Ontology& ontology() const override { return ont_; }
  const HierarchyConfig& config() const override { return cfg_; }
  std::vector<Component*> components() override { return {&model_}; }
  std::vector<const Component*> components() const override { return {&model_}; }
  std::vector<Prediction> predict_prepared(
      const std::vector<const PreparedText*>& rows) const override;

  const Component& model() const noexcept { return model_; }
  const std::map<std::string, std::string>& severity_table() const noexcept {
    return severity_table_;
  }

 private:
  Ontology ont_;
  HierarchyConfig cfg_;
  Component model_;
  std::map<std::string, std::string> severity_table_;
};

// Gold severity set of a part: severities of its diagnoses, or {NEG}.
std::vector<std::string> gold_severities(const LabeledPart& part, const Ontology& ont);

HierarchicalModel train_hierarchical(const std::vector<LabeledPart>& corpus,
                                     const Ontology& ont, const HierarchyConfig& cfg);
FlatModel train_flat(const std::vector<LabeledPart>& corpus, const Ontology& ont,
                     const HierarchyConfig& cfg);

// Runs stage 1 and every branch unconditionally, then applies the routing
// rule. Reference for predict_prepared.
Prediction route_reference(const HierarchicalModel& m, const PreparedText& row);

// Word importance for one part against its prediction. Linear heads use
// w * x; forests use occlusion. Embedding backends yield an empty list.
std::vector<TokenImportance> word_importance(const PipelineModel& m, const SpecimenPart& part,
                                             const Prediction& pred);

}  // namespace hcsbc
