#include "hcsbc/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hcsbc/errors.hpp"

namespace hcsbc {

using nlohmann::json;

double SparseVector::l2_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

void SparseVector::check() const {
  if (indices.size() != values.size()) {
    throw DimensionError("sparse vector: indices/values length mismatch");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= dim) throw DimensionError("sparse vector: index out of range");
    if (i > 0 && indices[i] <= indices[i - 1]) {
      throw DimensionError("sparse vector: indices not strictly increasing");
    }
    if (!std::isfinite(values[i]) || values[i] == 0.0) {
      throw DimensionError("sparse vector: values must be finite and non-zero");
    }
  }
}

SparseVector to_sparse(const DenseVector& v) {
  SparseVector out;
  out.dim = v.dim();
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    if (!std::isfinite(v.values[i])) throw DimensionError("dense vector: non-finite value");
    if (v.values[i] != 0.0) {
      out.indices.push_back(std::uint32_t(i));
      out.values.push_back(v.values[i]);
    }
  }
  return out;
}

TfidfModel::TfidfModel(std::vector<std::string> vocabulary, std::vector<double> idf,
                       std::size_t n_docs, TfidfConfig cfg)
    : vocabulary_(std::move(vocabulary)), idf_(std::move(idf)), n_docs_(n_docs), cfg_(cfg) {
  if (vocabulary_.size() != idf_.size()) {
    throw InputError("tfidf: vocabulary and idf sizes differ");
  }
  if (!std::is_sorted(vocabulary_.begin(), vocabulary_.end())) {
    throw InputError("tfidf: vocabulary must be sorted");
  }
  build_index();
}

void TfidfModel::build_index() {
  index_.clear();
  index_.reserve(vocabulary_.size());
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    index_.emplace(vocabulary_[i], std::uint32_t(i));
  }
}

std::int64_t TfidfModel::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : std::int64_t(it->second);
}

SparseVector TfidfModel::transform(const TokenStream& stream) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : stream.tokens) {
    auto it = index_.find(t);
    if (it != index_.end()) counts[it->second] += 1.0;
  }
  SparseVector out;
  out.dim = dim();
  out.indices.reserve(counts.size());
  out.values.reserve(counts.size());
  for (const auto& [idx, c] : counts) {
    const double tf = cfg_.sublinear_tf ? 1.0 + std::log(c) : c;
    out.indices.push_back(idx);
    out.values.push_back(tf * idf_[idx]);
  }
  if (cfg_.l2_normalize) {
    const double norm = out.l2_norm();
    if (norm > 0.0) {
      for (double& v : out.values) v /= norm;
    }
  }
  return out;
}

FeatureMatrix TfidfModel::transform(const std::vector<TokenStream>& corpus) const {
  FeatureMatrix m;
  m.dim = dim();
  m.rows.reserve(corpus.size());
  for (const auto& ts : corpus) m.rows.push_back(transform(ts));
  return m;
}

json TfidfModel::to_json() const {
  return {{"vocabulary", vocabulary_},
          {"idf", idf_},
          {"n_docs", n_docs_},
          {"sublinear_tf", cfg_.sublinear_tf},
          {"smooth_idf", cfg_.smooth_idf},
          {"norm", cfg_.l2_normalize ? "l2" : "none"},
          {"max_features", cfg_.max_features}};
}

TfidfModel TfidfModel::from_json(const json& j) {
  TfidfConfig cfg;
  cfg.sublinear_tf = j.at("sublinear_tf").get<bool>();
  cfg.smooth_idf = j.at("smooth_idf").get<bool>();
  cfg.l2_normalize = j.at("norm").get<std::string>() == "l2";
  cfg.max_features = j.at("max_features").get<std::size_t>();
  return TfidfModel(j.at("vocabulary").get<std::vector<std::string>>(),
                    j.at("idf").get<std::vector<double>>(),
                    j.at("n_docs").get<std::size_t>(), cfg);
}

TfidfModel tfidf_fit(const std::vector<TokenStream>& corpus, const TfidfConfig& cfg) {
  if (corpus.empty()) throw InputError("tfidf_fit: empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& ts : corpus) {
    std::vector<std::string> uniq(ts.tokens);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (auto& t : uniq) ++df[t];
  }
  std::vector<std::pair<std::string, std::size_t>> terms(df.begin(), df.end());
  if (cfg.max_features > 0 && terms.size() > cfg.max_features) {
    std::stable_sort(terms.begin(), terms.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    terms.resize(cfg.max_features);
    std::sort(terms.begin(), terms.end());
  }
  const double n = double(corpus.size());
  std::vector<std::string> vocab;
  std::vector<double> idf;
  vocab.reserve(terms.size());
  idf.reserve(terms.size());
  for (auto& [t, d] : terms) {
    vocab.push_back(t);
    idf.push_back(cfg.smooth_idf ? std::log((1.0 + n) / (1.0 + double(d))) + 1.0
                                 : std::log(n / double(d)) + 1.0);
  }
  return TfidfModel(std::move(vocab), std::move(idf), corpus.size(), cfg);
}

SparseVector tfidf_transform(const TfidfModel& model, const TokenStream& stream) {
  return model.transform(stream);
}

json FinetuneDoc::to_json() const {
  return {{"optimizer", optimizer},
          {"learning_rate", learning_rate},
          {"max_sequence_length", max_sequence_length},
          {"batch_size", batch_size},
          {"early_stopping_patience_epochs", early_stopping_patience_epochs},
          {"frozen_layers", frozen_layers},
          {"loss", loss}};
}

FinetuneDoc FinetuneDoc::from_json(const json& j) {
  FinetuneDoc d;
  d.optimizer = j.value("optimizer", d.optimizer);
  d.learning_rate = j.value("learning_rate", d.learning_rate);
  d.max_sequence_length = j.value("max_sequence_length", d.max_sequence_length);
  d.batch_size = j.value("batch_size", d.batch_size);
  d.early_stopping_patience_epochs =
      j.value("early_stopping_patience_epochs", d.early_stopping_patience_epochs);
  d.frozen_layers = j.value("frozen_layers", d.frozen_layers);
  d.loss = j.value("loss", d.loss);
  return d;
}

void EmbedProviderConfig::validate() const {
  if (dim == 0) throw InputError("embed: dim must be > 0");
  if (batch_size == 0) throw InputError("embed: batch_size must be > 0");
  if (parallelism == 0) throw InputError("embed: parallelism must be > 0");
  if (endpoint.empty()) throw InputError("embed: endpoint URL is empty");
}

json EmbedProviderConfig::to_json() const {
  return {{"endpoint", endpoint},
          {"dim", dim},
          {"timeout_ms", timeout.count()},
          {"batch_size", batch_size},
          {"parallelism", parallelism},
          {"finetune", finetune.to_json()}};
}

EmbedProviderConfig EmbedProviderConfig::from_json(const json& j) {
  EmbedProviderConfig c;
  c.endpoint = j.value("endpoint", c.endpoint);
  c.dim = j.value("dim", c.dim);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", std::int64_t(c.timeout.count())));
  c.batch_size = j.value("batch_size", c.batch_size);
  c.parallelism = j.value("parallelism", c.parallelism);
  if (j.contains("finetune")) c.finetune = FinetuneDoc::from_json(j.at("finetune"));
  return c;
}

}  // namespace hcsbc
