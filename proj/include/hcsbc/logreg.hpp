#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hcsbc/learners.hpp"

namespace hcsbc {

// One-vs-rest logistic regression. Heads whose training labels are all one
// class hold a constant prior instead of weights.
class LogRegModel final : public Classifier {
 public:
  struct Head {
    std::vector<double> w;
    double b = 0.0;
    bool constant = false;
    double prior = 0.5;  // used only when constant
  };

  LogRegModel(std::vector<std::string> labels, std::size_t dim, std::vector<Head> heads,
              LogRegConfig cfg);

  std::string kind() const override { return "logreg"; }
  std::size_t n_labels() const override { return labels_.size(); }
  std::size_t dim() const override { return dim_; }
  const std::vector<std::string>& label_names() const override { return labels_; }
  std::vector<double> predict_row(const SparseVector& row) const override;
  std::string serialize() const override;

  static LogRegModel deserialize(std::string_view bytes);

  const Head& head(std::size_t label) const { return heads_.at(label); }
  const LogRegConfig& config() const noexcept { return cfg_; }
  // Loss after each accepted step, per label. Not serialized.
  const std::vector<std::vector<double>>& loss_traces() const noexcept { return traces_; }

 private:
  friend LogRegModel logreg_fit(const FeatureMatrix&, const LabelMatrix&, const LogRegConfig&);

  std::vector<std::string> labels_;
  std::size_t dim_;
  std::vector<Head> heads_;
  LogRegConfig cfg_;
  std::vector<std::vector<double>> traces_;
};

// Weighted binary cross-entropy of one head plus lambda * ||w||^2.
double logreg_loss(const FeatureMatrix& x, const std::vector<std::uint8_t>& y,
                   const std::vector<double>& w, double b, double alpha, double lambda);
// Analytic gradient of logreg_loss; gw is resized to x.dim.
void logreg_gradient(const FeatureMatrix& x, const std::vector<std::uint8_t>& y,
                     const std::vector<double>& w, double b, double alpha, double lambda,
                     std::vector<double>& gw, double& gb);

LogRegModel logreg_fit(const FeatureMatrix& x, const LabelMatrix& y, const LogRegConfig& cfg);

}  // namespace hcsbc
