#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcsbc/features.hpp"

namespace hcsbc {

// n_samples x n_labels multi-hot targets, row-major.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t n_samples, std::vector<std::string> label_names);

  std::size_t n_samples() const noexcept { return n_samples_; }
  std::size_t n_labels() const noexcept { return names_.size(); }
  const std::vector<std::string>& label_names() const noexcept { return names_; }

  bool at(std::size_t row, std::size_t label) const {
    return bits_[row * names_.size() + label] != 0;
  }
  void set(std::size_t row, std::size_t label, bool v = true) {
    bits_[row * names_.size() + label] = v ? 1 : 0;
  }
  std::size_t positives(std::size_t label) const;
  // Labels set in one row.
  std::vector<std::size_t> row_labels(std::size_t row) const;

  bool operator==(const LabelMatrix&) const = default;

 private:
  std::size_t n_samples_ = 0;
  std::vector<std::string> names_;
  std::vector<std::uint8_t> bits_;
};

// rows x labels probability matrix.
using ProbMatrix = std::vector<std::vector<double>>;

// Common contract of every multi-label learner: one-vs-rest probabilities per
// label, immutable after fitting, binary-serializable.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t n_labels() const = 0;
  virtual std::size_t dim() const = 0;
  virtual const std::vector<std::string>& label_names() const = 0;

  // Throws DimensionError if row.dim != dim().
  virtual std::vector<double> predict_row(const SparseVector& row) const = 0;
  virtual ProbMatrix predict_proba(const FeatureMatrix& x) const;

  virtual std::string serialize() const = 0;

  // Non-fatal notes collected during fitting (e.g. constant-prior heads).
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 protected:
  void check_dim(std::size_t got) const;
  std::vector<std::string> warnings_;
};

struct LogRegConfig {
  double learning_rate = 0.1;
  double l2_lambda = 1e-4;
  std::size_t max_epochs = 500;
  double tol = 1e-6;
  bool class_weighting = true;
  std::size_t max_halvings = 40;

  nlohmann::json to_json() const;
  static LogRegConfig from_json(const nlohmann::json& j);
};

enum class MaxFeatures { Sqrt, Log2, All };

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  MaxFeatures max_features = MaxFeatures::Sqrt;
  bool bootstrap = true;
  std::uint64_t seed = 42;
  std::size_t min_samples_split = 2;
  std::size_t n_threads = 0;  // 0 = hardware concurrency

  nlohmann::json to_json() const;
  static ForestConfig from_json(const nlohmann::json& j);
};

struct LearnerConfig {
  std::string kind = "forest";  // "forest" | "logreg"
  LogRegConfig logreg;
  ForestConfig forest;

  nlohmann::json to_json() const;
  static LearnerConfig from_json(const nlohmann::json& j);
};

// Fixed per-label probabilities, for components with no usable training
// rows (e.g. a branch whose severity never occurs in the training fold).
class ConstantClassifier final : public Classifier {
 public:
  ConstantClassifier(std::vector<std::string> labels, std::size_t dim, std::vector<double> probs);

  std::string kind() const override { return "constant"; }
  std::size_t n_labels() const override { return labels_.size(); }
  std::size_t dim() const override { return dim_; }
  const std::vector<std::string>& label_names() const override { return labels_; }
  std::vector<double> predict_row(const SparseVector& row) const override;
  std::string serialize() const override;
  static ConstantClassifier deserialize(std::string_view bytes);

  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  std::vector<std::string> labels_;
  std::size_t dim_;
  std::vector<double> probs_;
};

// Throws DimensionError when |X| != Y.n_samples or rows disagree on dim.
void check_training_shapes(const FeatureMatrix& x, const LabelMatrix& y);

std::unique_ptr<Classifier> fit_classifier(const LearnerConfig& cfg,
                                           const FeatureMatrix& x, const LabelMatrix& y);
// Dispatches on the payload magic.
std::unique_ptr<Classifier> deserialize_classifier(std::string_view bytes);

}  // namespace hcsbc
