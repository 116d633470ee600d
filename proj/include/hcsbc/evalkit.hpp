#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hcsbc/corpus.hpp"
#include "hcsbc/hierarchy.hpp"
#include "hcsbc/learners.hpp"
#include "hcsbc/ontology.hpp"

namespace hcsbc {

struct SplitConfig {
  double train = 0.60;
  double val = 0.20;
  double test = 0.20;
  std::uint64_t seed = 42;

  // Throws InputError unless all fractions are positive and sum to 1.
  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

// Seeded shuffle, then contiguous slices: train = floor(n * train),
// val = floor(n * val), test = the remainder. Throws InputError when n < 5.
SplitIndices split_indices(std::size_t n, const SplitConfig& cfg);

struct CorpusSplit {
  std::vector<LabeledPart> train, val, test;
};
CorpusSplit split(const std::vector<LabeledPart>& corpus, const SplitConfig& cfg);

struct LabelMetrics {
  std::string label;
  std::size_t tp = 0, fp = 0, fn = 0, support = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct MetricsOptions {
  // Count zero-support labels as 0 in macro averages instead of skipping them.
  bool macro_include_zero_support = false;
};

struct EvalReport {
  std::vector<LabelMetrics> per_label;
  std::size_t n_rows = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  double micro_precision = 0.0, micro_recall = 0.0, micro_f1 = 0.0;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  std::size_t macro_labels = 0;  // labels that entered the macro average
  double subset_accuracy = 0.0;
  bool macro_include_zero_support = false;

  nlohmann::json to_json() const;
};

// Zero denominators give 0 (precision, recall, F1 alike).
EvalReport compute_metrics(const LabelMatrix& gold, const LabelMatrix& pred,
                           const MetricsOptions& opts = {});

struct McNemarResult {
  std::size_t b = 0;  // a correct, b wrong
  std::size_t c = 0;  // a wrong, b correct
  double statistic = 0.0;
  double p_value = 1.0;

  nlohmann::json to_json() const;
};

// Continuity-corrected statistic with 1 degree of freedom.
McNemarResult mcnemar_from_counts(std::size_t b, std::size_t c);
// Pooled over every (row, label) decision.
McNemarResult mcnemar(const LabelMatrix& pred_a, const LabelMatrix& pred_b,
                      const LabelMatrix& gold);
std::vector<McNemarResult> mcnemar_per_label(const LabelMatrix& pred_a, const LabelMatrix& pred_b,
                                             const LabelMatrix& gold);

enum class ErrorCategory { WrongDiagnosis, MissedDiagnosis, SpuriousDiagnosis };
std::string_view to_string(ErrorCategory c);

struct ErrorCase {
  std::string report_id;
  std::string part_id;
  ErrorCategory category = ErrorCategory::MissedDiagnosis;
  std::string gold_label;       // empty for SPURIOUS
  std::string predicted_label;  // empty for MISSED
  std::optional<std::pair<std::string, std::string>> severity_pair;  // (gold, predicted)
};

struct ReviewCandidate {
  std::string report_id;
  std::string part_id;
  std::string label;
  double probability = 0.0;
};

struct ErrorAnalysis {
  std::vector<ErrorCase> cases;
  std::map<std::pair<std::string, std::string>, std::size_t> severity_pairs;
  std::size_t wrong = 0, missed = 0, spurious = 0;
  std::vector<ReviewCandidate> review_candidates;

  nlohmann::json to_json() const;
};

struct PartLabels {
  std::string report_id;
  std::string part_id;
  std::vector<std::string> labels;  // diagnosis names and/or "NEG"
};

// Per part: a gold label missing from the prediction pairs with the first
// unpaired spurious label of a different severity into one WRONG_DIAGNOSIS
// entry; whatever stays unpaired is MISSED or SPURIOUS. Throws InputError on
// labels outside the ontology.
ErrorAnalysis categorize_errors(const std::vector<PartLabels>& gold,
                                const std::vector<PartLabels>& pred, const Ontology& ont);
// Same, plus review candidates: predicted labels with probability >=
// review_threshold that are absent from gold.
ErrorAnalysis categorize_errors(const std::vector<LabeledPart>& gold,
                                const std::vector<Prediction>& pred, const Ontology& ont,
                                double review_threshold = 0.9);

// Gold labels in evaluation space: diagnoses, or {"NEG"} when there are none.
std::vector<std::string> gold_label_set(const LabeledPart& part);
// Throws InputError on a label not in `labels`.
LabelMatrix to_label_matrix(const std::vector<std::vector<std::string>>& sets,
                            const std::vector<std::string>& labels);

struct Evaluation {
  EvalReport report;
  LabelMatrix gold;
  LabelMatrix pred;
  std::vector<Prediction> predictions;
};

// Predicts every part and scores the result in the model's label space.
// Throws InputError on an empty corpus.
Evaluation evaluate(const PipelineModel& model, const std::vector<LabeledPart>& corpus,
                    const MetricsOptions& opts = {});

}  // namespace hcsbc
