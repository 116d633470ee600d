#include "hcsbc/learners.hpp"

#include <set>

#include "hcsbc/binary_io.hpp"
#include "hcsbc/errors.hpp"
#include "hcsbc/forest.hpp"
#include "hcsbc/logreg.hpp"

namespace hcsbc {

using nlohmann::json;

LabelMatrix::LabelMatrix(std::size_t n_samples, std::vector<std::string> label_names)
    : n_samples_(n_samples), names_(std::move(label_names)),
      bits_(n_samples_ * names_.size(), 0) {
  std::set<std::string> seen(names_.begin(), names_.end());
  if (seen.size() != names_.size()) throw InputError("label matrix: duplicate label names");
}

std::size_t LabelMatrix::positives(std::size_t label) const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < n_samples_; ++r) n += at(r, label) ? 1 : 0;
  return n;
}

std::vector<std::size_t> LabelMatrix::row_labels(std::size_t row) const {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < names_.size(); ++l) {
    if (at(row, l)) out.push_back(l);
  }
  return out;
}

ProbMatrix Classifier::predict_proba(const FeatureMatrix& x) const {
  check_dim(x.dim);
  ProbMatrix out;
  out.reserve(x.rows.size());
  for (const auto& r : x.rows) out.push_back(predict_row(r));
  return out;
}

void Classifier::check_dim(std::size_t got) const {
  if (got != dim()) {
    throw DimensionError(kind() + ": feature dim " + std::to_string(got) +
                         " does not match model dim " + std::to_string(dim()));
  }
}

ConstantClassifier::ConstantClassifier(std::vector<std::string> labels, std::size_t dim,
                                       std::vector<double> probs)
    : labels_(std::move(labels)), dim_(dim), probs_(std::move(probs)) {
  if (probs_.size() != labels_.size()) throw InputError("constant: one probability per label");
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("constant: probability outside [0,1]");
  }
}

std::vector<double> ConstantClassifier::predict_row(const SparseVector& row) const {
  check_dim(row.dim);
  return probs_;
}

std::string ConstantClassifier::serialize() const {
  BinaryWriter w;
  w.magic("HCSBCCN1");
  w.u64(dim_);
  w.u32(std::uint32_t(labels_.size()));
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    w.str(labels_[l]);
    w.f64(probs_[l]);
  }
  return w.take();
}

ConstantClassifier ConstantClassifier::deserialize(std::string_view bytes) {
  BinaryReader r(bytes);
  r.expect_magic("HCSBCCN1");
  const std::size_t dim = r.u64();
  const std::uint32_t n = r.u32();
  std::vector<std::string> labels;
  std::vector<double> probs;
  for (std::uint32_t l = 0; l < n; ++l) {
    labels.push_back(r.str());
    probs.push_back(r.f64());
  }
  if (!r.done()) throw BundleError("constant payload: trailing bytes");
  return ConstantClassifier(std::move(labels), dim, std::move(probs));
}

json LogRegConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"l2_lambda", l2_lambda},
          {"max_epochs", max_epochs},       {"tol", tol},
          {"class_weighting", class_weighting}, {"max_halvings", max_halvings}};
}

LogRegConfig LogRegConfig::from_json(const json& j) {
  LogRegConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.l2_lambda = j.value("l2_lambda", c.l2_lambda);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.tol = j.value("tol", c.tol);
  c.class_weighting = j.value("class_weighting", c.class_weighting);
  c.max_halvings = j.value("max_halvings", c.max_halvings);
  return c;
}

namespace {

std::string to_string(MaxFeatures m) {
  switch (m) {
    case MaxFeatures::Sqrt: return "sqrt";
    case MaxFeatures::Log2: return "log2";
    case MaxFeatures::All: return "all";
  }
  return "sqrt";
}

MaxFeatures parse_max_features(const std::string& s) {
  if (s == "sqrt") return MaxFeatures::Sqrt;
  if (s == "log2") return MaxFeatures::Log2;
  if (s == "all") return MaxFeatures::All;
  throw InputError("forest: unknown max_features rule '" + s + "'");
}

}  // namespace

json ForestConfig::to_json() const {
  return {{"n_trees", n_trees},     {"max_depth", max_depth},
          {"max_features", to_string(max_features)},
          {"bootstrap", bootstrap}, {"seed", seed},
          {"min_samples_split", min_samples_split}};
}

ForestConfig ForestConfig::from_json(const json& j) {
  ForestConfig c;
  c.n_trees = j.value("n_trees", c.n_trees);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.max_features = parse_max_features(j.value("max_features", to_string(c.max_features)));
  c.bootstrap = j.value("bootstrap", c.bootstrap);
  c.seed = j.value("seed", c.seed);
  c.min_samples_split = j.value("min_samples_split", c.min_samples_split);
  c.n_threads = j.value("n_threads", c.n_threads);
  return c;
}

json LearnerConfig::to_json() const {
  return {{"kind", kind}, {"logreg", logreg.to_json()}, {"forest", forest.to_json()}};
}

LearnerConfig LearnerConfig::from_json(const json& j) {
  LearnerConfig c;
  c.kind = j.value("kind", c.kind);
  if (j.contains("logreg")) c.logreg = LogRegConfig::from_json(j.at("logreg"));
  if (j.contains("forest")) c.forest = ForestConfig::from_json(j.at("forest"));
  if (c.kind != "forest" && c.kind != "logreg") {
    throw InputError("learner: unknown kind '" + c.kind + "'");
  }
  return c;
}

void check_training_shapes(const FeatureMatrix& x, const LabelMatrix& y) {
  if (x.rows.size() != y.n_samples()) {
    throw DimensionError("fit: " + std::to_string(x.rows.size()) + " feature rows but " +
                         std::to_string(y.n_samples()) + " label rows");
  }
  for (const auto& r : x.rows) {
    if (r.dim != x.dim) throw DimensionError("fit: feature rows disagree on dim");
  }
  if (y.n_labels() == 0) throw InputError("fit: no labels");
}

std::unique_ptr<Classifier> fit_classifier(const LearnerConfig& cfg, const FeatureMatrix& x,
                                           const LabelMatrix& y) {
  if (cfg.kind == "logreg") return std::make_unique<LogRegModel>(logreg_fit(x, y, cfg.logreg));
  if (cfg.kind == "forest") return std::make_unique<ForestModel>(forest_fit(x, y, cfg.forest));
  throw InputError("learner: unknown kind '" + cfg.kind + "'");
}

std::unique_ptr<Classifier> deserialize_classifier(std::string_view bytes) {
  if (bytes.substr(0, 8) == "HCSBCLR1") {
    return std::make_unique<LogRegModel>(LogRegModel::deserialize(bytes));
  }
  if (bytes.substr(0, 8) == "HCSBCRF1") {
    return std::make_unique<ForestModel>(ForestModel::deserialize(bytes));
  }
  if (bytes.substr(0, 8) == "HCSBCCN1") {
    return std::make_unique<ConstantClassifier>(ConstantClassifier::deserialize(bytes));
  }
  throw BundleError("model payload: unknown classifier format");
}

}  // namespace hcsbc
