#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hcsbc/textprep.hpp"

namespace hcsbc {

// Sorted-index sparse vector. Indices strictly increase and stay below dim;
// stored values are finite and non-zero.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  std::size_t dim = 0;

  std::size_t nnz() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
  double l2_norm() const;
  // Throws DimensionError if the invariants above do not hold.
  void check() const;

  bool operator==(const SparseVector&) const = default;
};

struct DenseVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
};

SparseVector to_sparse(const DenseVector& v);

// Rows of one feature space; every row has dim == this->dim.
struct FeatureMatrix {
  std::size_t dim = 0;
  std::vector<SparseVector> rows;

  std::size_t size() const noexcept { return rows.size(); }
};

struct TfidfConfig {
  bool sublinear_tf = false;
  bool smooth_idf = true;
  bool l2_normalize = true;
  // 0 keeps every token; otherwise the top-K tokens by document frequency
  // (ties broken lexicographically).
  std::size_t max_features = 0;

  bool operator==(const TfidfConfig&) const = default;
};

// Raw-count tf, idf = ln((1 + N) / (1 + df)) + 1, L2-normalized rows.
class TfidfModel {
 public:
  TfidfModel() = default;
  TfidfModel(std::vector<std::string> vocabulary, std::vector<double> idf,
             std::size_t n_docs, TfidfConfig cfg);

  std::size_t dim() const noexcept { return vocabulary_.size(); }
  std::size_t n_docs() const noexcept { return n_docs_; }
  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
  const std::vector<double>& idf() const noexcept { return idf_; }
  const TfidfConfig& config() const noexcept { return cfg_; }

  // -1 when the token is outside the vocabulary.
  std::int64_t index_of(std::string_view token) const;

  SparseVector transform(const TokenStream& stream) const;
  FeatureMatrix transform(const std::vector<TokenStream>& corpus) const;

  nlohmann::json to_json() const;
  static TfidfModel from_json(const nlohmann::json& j);

 private:
  void build_index();

  std::vector<std::string> vocabulary_;  // sorted; position == feature id
  std::vector<double> idf_;
  std::size_t n_docs_ = 0;
  TfidfConfig cfg_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Throws InputError on an empty corpus.
TfidfModel tfidf_fit(const std::vector<TokenStream>& corpus, const TfidfConfig& cfg = {});
SparseVector tfidf_transform(const TfidfModel& model, const TokenStream& stream);

// Fine-tuning settings of the severity transformer. They are carried with
// the provider config so a bundle records how its embeddings were produced;
// nothing here is executed locally.
struct FinetuneDoc {
  std::string optimizer = "AdamW";
  double learning_rate = 2e-5;
  std::size_t max_sequence_length = 64;
  std::size_t batch_size = 32;
  std::size_t early_stopping_patience_epochs = 10;
  std::string frozen_layers = "embedding";
  std::string loss = "weighted binary cross-entropy";

  nlohmann::json to_json() const;
  static FinetuneDoc from_json(const nlohmann::json& j);
};

struct EmbedProviderConfig {
  std::string endpoint;  // e.g. "http://127.0.0.1:9000" or ".../v1"
  std::size_t dim = 768;
  std::chrono::milliseconds timeout{30000};
  std::size_t batch_size = 32;
  std::size_t parallelism = 1;
  FinetuneDoc finetune;

  void validate() const;
  nlohmann::json to_json() const;
  static EmbedProviderConfig from_json(const nlohmann::json& j);
};

// POSTs {"texts": [...]} to {endpoint}/embed in batch_size chunks and returns
// one vector per input, in input order. Any transport, status, shape, or
// dimension problem throws ProviderError; partial results are never returned.
std::vector<DenseVector> embed(const EmbedProviderConfig& cfg,
                               const std::vector<std::string>& texts);

}  // namespace hcsbc
