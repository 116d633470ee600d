// Shared fixtures and independent reference implementations for the unit
// and acceptance tests. Nothing here calls into the code under test except
// to build inputs.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hcsbc/corpus.hpp"
#include "hcsbc/features.hpp"
#include "hcsbc/forest.hpp"
#include "hcsbc/hierarchy.hpp"
#include "hcsbc/learners.hpp"
#include "hcsbc/ontology.hpp"
#include "hcsbc/segmenter.hpp"
#include "hcsbc/synth.hpp"

namespace hcsbc::testing {

// ---- segmenter fixtures -------------------------------------------------

struct SegFixture {
  std::string name;
  std::string text;
  MarkerStyleSet styles;
  std::vector<std::pair<std::string, std::string>> parts;  // (id, text)
};

inline std::vector<SegFixture> segmenter_fixtures() {
  using S = MarkerStyle;
  const MarkerStyleSet all = MarkerStyleSet::all();
  std::string eleven;
  std::vector<std::pair<std::string, std::string>> eleven_parts;
  for (int k = 1; k <= 11; ++k) {
    const std::string body = "finding " + std::string(1, char('a' + k - 1));
    eleven += std::to_string(k) + ". " + body + "\n";
    eleven_parts.emplace_back(std::to_string(k), body);
  }
  return {
      {"letter dot inline", "A. benign breast tissue. B. fibroadenoma.", {S::LetterDot},
       {{"A", "benign breast tissue."}, {"B", "fibroadenoma."}}},
      {"num paren inline", "1) negative for malignancy 2) cyst", {S::NumParen},
       {{"1", "negative for malignancy"}, {"2", "cyst"}}},
      {"no marker", "invasive ductal carcinoma, grade 2", all,
       {{"WHOLE", "invasive ductal carcinoma, grade 2"}}},
      {"letter colon", "A: fibroadenoma\nB: cyst", {S::LetterColon},
       {{"A", "fibroadenoma"}, {"B", "cyst"}}},
      {"letter paren", "A) usual ductal hyperplasia\nB) benign skin", {S::LetterParen},
       {{"A", "usual ductal hyperplasia"}, {"B", "benign skin"}}},
      {"num dot", "1. invasive ductal carcinoma\n2. ductal carcinoma in situ\n3. benign lymph node",
       {S::NumDot},
       {{"1", "invasive ductal carcinoma"},
        {"2", "ductal carcinoma in situ"},
        {"3", "benign lymph node"}}},
      {"num colon", "1: atypical ductal hyperplasia\n2: fibrocystic changes", {S::NumColon},
       {{"1", "atypical ductal hyperplasia"}, {"2", "fibrocystic changes"}}},
      {"repeated letter is body text", "A. see note. B. fibroadenoma. B. again mentioned. C. cyst.",
       {S::LetterDot},
       {{"A", "see note."}, {"B", "fibroadenoma. B. again mentioned."}, {"C", "cyst."}}},
      {"skipped letter is body text", "A. cyst. C. fibroadenoma.", {S::LetterDot},
       {{"A", "cyst. C. fibroadenoma."}}},
      {"chain must start at A", "B. cyst. C. fibroadenoma.", {S::LetterDot},
       {{"WHOLE", "B. cyst. C. fibroadenoma."}}},
      {"abbreviation after one space", "Dr A. Smith reviewed the slides", all,
       {{"WHOLE", "Dr A. Smith reviewed the slides"}}},
      {"preamble kept aside", "Left breast biopsy:\nA. benign\nB. cyst", {S::LetterDot},
       {{"A", "benign"}, {"B", "cyst"}}},
      {"earliest style wins", "A. x\nB. y\n1) z\n2) w", all,
       {{"A", "x"}, {"B", "y\n1) z\n2) w"}}},
      {"numeric style first", "1) x\n2) y\nA. z", all, {{"1", "x"}, {"2", "y\nA. z"}}},
      {"nested sub-part is body text", "A. breast:\nA1. benign\nB. cyst", all,
       {{"A", "breast:\nA1. benign"}, {"B", "cyst"}}},
      {"decimal is not a marker", "1. tumor size 2.5 cm\n2. margins negative", {S::NumDot},
       {{"1", "tumor size 2.5 cm"}, {"2", "margins negative"}}},
      {"single opening marker", "A. invasive lobular carcinoma", {S::LetterDot},
       {{"A", "invasive lobular carcinoma"}}},
      {"single marker after text", "Findings: A. benign", {S::LetterDot},
       {{"WHOLE", "Findings: A. benign"}}},
      {"style not enabled", "A. benign. B. cyst.", {S::NumDot},
       {{"WHOLE", "A. benign. B. cyst."}}},
      {"double space position", "A. benign tissue  B. cyst", {S::LetterDot},
       {{"A", "benign tissue"}, {"B", "cyst"}}},
      {"single space successor", "A. benign tissue B. cyst", {S::LetterDot},
       {{"A", "benign tissue"}, {"B", "cyst"}}},
      {"two digit numbers", eleven, {S::NumDot}, eleven_parts},
      {"crlf line ends", "A. benign\r\nB. cyst\r\n", {S::LetterDot},
       {{"A", "benign"}, {"B", "cyst"}}},
      {"marker needs trailing space", "A.B. benign", all, {{"WHOLE", "A.B. benign"}}},
      {"repeated paren letter", "A) benign\nA) benign again\nB) cyst", {S::LetterParen},
       {{"A", "benign\nA) benign again"}, {"B", "cyst"}}},
  };
}

// Preamble, then marker + body of every part, must tile the text exactly.
inline bool segmentation_lossless(const std::string& text, const Segmentation& seg) {
  std::size_t pos = 0;
  if (seg.preamble.begin != 0) return false;
  pos = seg.preamble.end;
  for (const auto& p : seg.parts) {
    if (p.part_id == kWholePartId) {
      if (p.span.begin != pos) return false;
    } else {
      if (p.marker_span.begin != pos || p.span.begin != p.marker_span.end) return false;
    }
    if (p.span.end < p.span.begin) return false;
    pos = p.span.end;
  }
  return pos == text.size();
}

inline std::string random_report_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "A. ", "B. ", "C. ", "A) ", "B) ", "A: ", "B: ", "1. ", "2. ", "3) ", "1) ", "2: ",
      "benign ", "carcinoma ", "cyst. ", "2.5 cm ", "\n", "  ", " ", "A1. ", "Dr ", ": ",
      "\r\n", "note.", "x", "Z. ", "10. ", "11. "};
  std::uniform_int_distribution<std::size_t> len(1, 40), pick(0, pieces.size() - 1);
  std::string s;
  const std::size_t n = len(rng);
  for (std::size_t k = 0; k < n; ++k) s += pieces[pick(rng)];
  return s;
}

// ---- tf-idf reference ----------------------------------------------------

// Straight from the definitions: raw counts, idf = ln((1+N)/(1+df)) + 1,
// then divide by the Euclidean norm. Returns token -> weight per document.
inline std::vector<std::map<std::string, double>> brute_tfidf(
    const std::vector<std::vector<std::string>>& docs) {
  std::map<std::string, double> df;
  for (const auto& d : docs) {
    std::set<std::string> seen(d.begin(), d.end());
    for (const auto& t : seen) df[t] += 1.0;
  }
  const double n = double(docs.size());
  std::vector<std::map<std::string, double>> out;
  for (const auto& d : docs) {
    std::map<std::string, double> w;
    for (const auto& t : d) w[t] += 1.0;
    double norm = 0.0;
    for (auto& [t, v] : w) {
      v *= std::log((1.0 + n) / (1.0 + df[t])) + 1.0;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm > 0) {
      for (auto& [t, v] : w) v /= norm;
    }
    out.push_back(w);
  }
  return out;
}

inline std::vector<std::vector<std::string>> random_docs(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> ndocs(1, 20), ntok(0, 30), vocab(0, 14);
  std::vector<std::vector<std::string>> docs(ndocs(rng));
  for (auto& d : docs) {
    const std::size_t k = ntok(rng);
    for (std::size_t i = 0; i < k; ++i) d.push_back("t" + std::to_string(vocab(rng)));
  }
  return docs;
}

inline std::vector<TokenStream> as_streams(const std::vector<std::vector<std::string>>& docs) {
  std::vector<TokenStream> out;
  for (const auto& d : docs) out.push_back({d, "", ""});
  return out;
}

// ---- learner helpers -----------------------------------------------------

inline FeatureMatrix dense_matrix(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix x;
  x.dim = rows.empty() ? 0 : rows[0].size();
  for (const auto& r : rows) {
    SparseVector v;
    v.dim = r.size();
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] != 0.0) {
        v.indices.push_back(std::uint32_t(j));
        v.values.push_back(r[j]);
      }
    }
    x.rows.push_back(v);
  }
  return x;
}

inline LabelMatrix label_matrix(const std::vector<std::vector<int>>& y,
                                const std::vector<std::string>& names) {
  LabelMatrix m(y.size(), names);
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t l = 0; l < names.size(); ++l) m.set(i, l, y[i][l] != 0);
  }
  return m;
}

// Recursive walk over a sparse row, independent of DecisionTree::predict.
inline double reference_tree_eval(const DecisionTree& t, const SparseVector& x, std::uint32_t n = 0) {
  const TreeNode& node = t.nodes.at(n);
  if (node.leaf()) return node.prob;
  double v = 0.0;
  for (std::size_t k = 0; k < x.indices.size(); ++k) {
    if (x.indices[k] == std::uint32_t(node.feature)) v = x.values[k];
  }
  return reference_tree_eval(t, x, v <= node.threshold ? node.left : node.right);
}

// ---- metric references ---------------------------------------------------

struct BruteCounts {
  std::vector<std::size_t> tp, fp, fn, support;
};

inline BruteCounts brute_counts(const std::vector<std::vector<int>>& gold,
                                const std::vector<std::vector<int>>& pred, std::size_t n_labels) {
  BruteCounts c{std::vector<std::size_t>(n_labels), std::vector<std::size_t>(n_labels),
                std::vector<std::size_t>(n_labels), std::vector<std::size_t>(n_labels)};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t l = 0; l < n_labels; ++l) {
      if (gold[i][l] && pred[i][l]) ++c.tp[l];
      if (!gold[i][l] && pred[i][l]) ++c.fp[l];
      if (gold[i][l] && !pred[i][l]) ++c.fn[l];
      if (gold[i][l]) ++c.support[l];
    }
  }
  return c;
}

inline double safe_ratio(double a, double b) { return b == 0 ? 0.0 : a / b; }

// Upper tail of chi-square(1) by Simpson integration of the standard normal
// density: P(X > s) = 2 * (0.5 - integral_0^sqrt(s) phi).
inline double chi2_1_survival(double s) {
  const double z = std::sqrt(s);
  const int n = 20000;
  const double h = z / n;
  const double pi = std::acos(-1.0);
  auto phi = [&](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2 * pi); };
  double acc = phi(0) + phi(z);
  for (int k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * phi(k * h);
  return 2.0 * (0.5 - acc * h / 3.0);
}

// ---- pipeline fixtures ---------------------------------------------------

inline SynthConfig small_synth_config(const Ontology& ont, std::uint64_t seed, std::size_t n) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_parts = n;
  for (const auto& d : ont.diagnoses()) cfg.priors[d.name] = 1.0;
  return cfg;
}

inline HierarchyConfig quick_config(const std::string& learner = "forest", std::size_t trees = 10) {
  HierarchyConfig cfg;
  cfg.stage1_learner.kind = cfg.branch_learner.kind = learner;
  cfg.stage1_learner.forest.n_trees = cfg.branch_learner.forest.n_trees = trees;
  cfg.stage1_learner.logreg.max_epochs = cfg.branch_learner.logreg.max_epochs = 200;
  cfg.stage1_learner.logreg.learning_rate = cfg.branch_learner.logreg.learning_rate = 1.0;
  return cfg;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() /
           ("hcsbc_test_" + name + "_" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace hcsbc::testing
