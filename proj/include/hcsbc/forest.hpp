#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hcsbc/learners.hpp"

namespace hcsbc {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double prob = 0.0;          // positive fraction of the training weight at this node

  bool leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  // x is a dense copy of the input row.
  double predict(const std::vector<double>& x) const;
  std::size_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

class ForestModel final : public Classifier {
 public:
  ForestModel(std::vector<std::string> labels, std::size_t dim,
              std::vector<std::vector<DecisionTree>> forests, ForestConfig cfg);

  std::string kind() const override { return "forest"; }
  std::size_t n_labels() const override { return labels_.size(); }
  std::size_t dim() const override { return dim_; }
  const std::vector<std::string>& label_names() const override { return labels_; }
  std::vector<double> predict_row(const SparseVector& row) const override;
  std::vector<double> predict_dense(const std::vector<double>& x) const;
  std::string serialize() const override;

  static ForestModel deserialize(std::string_view bytes);

  const std::vector<DecisionTree>& trees(std::size_t label) const { return forests_.at(label); }
  const ForestConfig& config() const noexcept { return cfg_; }

 private:
  friend ForestModel forest_fit(const FeatureMatrix&, const LabelMatrix&, const ForestConfig&);

  std::vector<std::string> labels_;
  std::size_t dim_;
  std::vector<std::vector<DecisionTree>> forests_;
  ForestConfig cfg_;
};

// Number of candidate features tried per node for a feature dimension d.
std::size_t forest_mtry(MaxFeatures rule, std::size_t d);
// Seed of tree t of label l, derived from the master seed.
std::uint64_t forest_tree_seed(std::uint64_t master, std::size_t label, std::size_t tree);

ForestModel forest_fit(const FeatureMatrix& x, const LabelMatrix& y, const ForestConfig& cfg);

}  // namespace hcsbc
