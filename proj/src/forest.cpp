#include "hcsbc/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "hcsbc/binary_io.hpp"
#include "hcsbc/errors.hpp"
#include "hcsbc/rng.hpp"

namespace hcsbc {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

double value_at(const SparseVector& row, std::uint32_t f) {
  auto it = std::lower_bound(row.indices.begin(), row.indices.end(), f);
  if (it == row.indices.end() || *it != f) return 0.0;
  return row.values[std::size_t(it - row.indices.begin())];
}

struct Entry {
  double value;
  double weight;
  double pos;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const std::vector<std::uint8_t>& y,
              const ForestConfig& cfg, std::size_t mtry)
      : x_(x), y_(y), cfg_(cfg), mtry_(mtry), stamp_(x.dim, 0), cnt_(x.dim, 0),
        vmin_(x.dim, 0.0), vmax_(x.dim, 0.0), slot_(x.dim, -1) {}

  DecisionTree build(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = x_.rows.size();
    std::vector<std::uint32_t> count(n, 0);
    if (cfg_.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) ++count[bounded(rng, n)];
    } else {
      std::fill(count.begin(), count.end(), 1);
    }
    rows_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (count[i] > 0) rows_.push_back(std::uint32_t(i));
    }
    count_ = std::move(count);

    DecisionTree tree;
    struct Work {
      std::uint32_t node, lo, hi, depth;
    };
    tree.nodes.emplace_back();
    std::vector<Work> stack{{0, 0, std::uint32_t(rows_.size()), 0}};
    while (!stack.empty()) {
      const Work w = stack.back();
      stack.pop_back();
      double weight = 0.0, pos = 0.0;
      for (std::uint32_t k = w.lo; k < w.hi; ++k) {
        weight += count_[rows_[k]];
        pos += y_[rows_[k]] ? count_[rows_[k]] : 0.0;
      }
      TreeNode& nd = tree.nodes[w.node];
      nd.prob = weight > 0 ? pos / weight : 0.0;
      if (pos == 0.0 || pos == weight) continue;
      if (cfg_.max_depth > 0 && w.depth >= cfg_.max_depth) continue;
      if (weight < double(cfg_.min_samples_split)) continue;

      std::int32_t feature = -1;
      double threshold = 0.0;
      if (!best_split(w.lo, w.hi, weight, pos, rng, feature, threshold)) continue;

      auto mid = std::stable_partition(
          rows_.begin() + w.lo, rows_.begin() + w.hi, [&](std::uint32_t r) {
            return value_at(x_.rows[r], std::uint32_t(feature)) <= threshold;
          });
      const auto split = std::uint32_t(mid - rows_.begin());
      const auto left = std::uint32_t(tree.nodes.size());
      const auto right = left + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& parent = tree.nodes[w.node];
      parent.feature = feature;
      parent.threshold = threshold;
      parent.left = left;
      parent.right = right;
      stack.push_back({right, split, w.hi, w.depth + 1});
      stack.push_back({left, w.lo, split, w.depth + 1});
    }
    return tree;
  }

 private:
  bool best_split(std::uint32_t lo, std::uint32_t hi, double weight, double pos,
                  std::mt19937_64& rng, std::int32_t& best_f, double& best_t) {
    ++epoch_;
    const std::uint32_t n_rows = hi - lo;
    touched_.clear();
    for (std::uint32_t k = lo; k < hi; ++k) {
      const auto& row = x_.rows[rows_[k]];
      for (std::size_t j = 0; j < row.indices.size(); ++j) {
        const auto f = row.indices[j];
        const double v = row.values[j];
        if (stamp_[f] != epoch_) {
          stamp_[f] = epoch_;
          cnt_[f] = 0;
          vmin_[f] = vmax_[f] = v;
          touched_.push_back(f);
        }
        ++cnt_[f];
        vmin_[f] = std::min(vmin_[f], v);
        vmax_[f] = std::max(vmax_[f], v);
      }
    }
    // Features absent from every row are constant zero; stored values are
    // non-zero, so partial coverage already means two distinct values.
    nonconst_.clear();
    for (auto f : touched_) {
      if (cnt_[f] < n_rows || vmin_[f] != vmax_[f]) nonconst_.push_back(f);
    }
    if (nonconst_.empty()) return false;
    std::sort(nonconst_.begin(), nonconst_.end());

    const std::size_t k = std::min(mtry_, nonconst_.size());
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + std::size_t(bounded(rng, nonconst_.size() - i));
      std::swap(nonconst_[i], nonconst_[j]);
    }
    chosen_.assign(nonconst_.begin(), nonconst_.begin() + std::ptrdiff_t(k));
    std::sort(chosen_.begin(), chosen_.end());

    if (buckets_.size() < k) buckets_.resize(k);
    for (std::size_t s = 0; s < k; ++s) {
      buckets_[s].clear();
      slot_[chosen_[s]] = std::int32_t(s);
    }
    for (std::uint32_t r = lo; r < hi; ++r) {
      const auto row_id = rows_[r];
      const auto& row = x_.rows[row_id];
      const double c = count_[row_id];
      const double p = y_[row_id] ? c : 0.0;
      for (std::size_t j = 0; j < row.indices.size(); ++j) {
        const auto s = slot_[row.indices[j]];
        if (s >= 0) buckets_[std::size_t(s)].push_back({row.values[j], c, p});
      }
    }

    bool found = false;
    double best_score = -1.0;
    for (std::size_t s = 0; s < k; ++s) {
      const auto f = chosen_[s];
      slot_[f] = -1;
      auto& e = buckets_[s];
      double wz = weight, pz = pos;
      for (const auto& en : e) {
        wz -= en.weight;
        pz -= en.pos;
      }
      if (wz > 0.5) e.push_back({0.0, wz, pz});
      std::sort(e.begin(), e.end(),
                [](const Entry& a, const Entry& b) { return a.value < b.value; });
      double wl = 0.0, pl = 0.0;
      for (std::size_t i = 0; i + 1 < e.size(); ++i) {
        wl += e[i].weight;
        pl += e[i].pos;
        if (e[i].value == e[i + 1].value) continue;
        const double wr = weight - wl, pr = pos - pl;
        const double nl = wl - pl, nr = wr - pr;
        const double score = (pl * pl + nl * nl) / wl + (pr * pr + nr * nr) / wr;
        if (!found || score > best_score) {
          found = true;
          best_score = score;
          best_f = std::int32_t(f);
          double t = e[i].value / 2.0 + e[i + 1].value / 2.0;
          if (t >= e[i + 1].value || t < e[i].value) t = e[i].value;
          best_t = t;
        }
      }
    }
    return found;
  }

  const FeatureMatrix& x_;
  const std::vector<std::uint8_t>& y_;
  const ForestConfig& cfg_;
  std::size_t mtry_;

  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> count_;
  std::uint32_t epoch_ = 0;
  std::vector<std::uint32_t> stamp_;
  std::vector<std::uint32_t> cnt_;
  std::vector<double> vmin_, vmax_;
  std::vector<std::int32_t> slot_;
  std::vector<std::uint32_t> touched_, nonconst_, chosen_;
  std::vector<std::vector<Entry>> buckets_;
};

void validate_tree(const DecisionTree& t, std::size_t dim) {
  if (t.nodes.empty()) throw BundleError("forest payload: empty tree");
  for (const auto& nd : t.nodes) {
    if (!(nd.prob >= 0.0 && nd.prob <= 1.0)) {
      throw BundleError("forest payload: leaf probability outside [0,1]");
    }
    if (nd.leaf()) continue;
    if (std::size_t(nd.feature) >= dim) throw BundleError("forest payload: feature index >= dim");
    if (nd.left >= t.nodes.size() || nd.right >= t.nodes.size()) {
      throw BundleError("forest payload: child index out of range");
    }
  }
}

}  // namespace

double DecisionTree::predict(const std::vector<double>& x) const {
  std::uint32_t i = 0;
  while (!nodes[i].leaf()) {
    const auto& nd = nodes[i];
    i = x[std::size_t(nd.feature)] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[i].prob;
}

std::size_t DecisionTree::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes[i].leaf()) {
      stack.push_back({nodes[i].left, d + 1});
      stack.push_back({nodes[i].right, d + 1});
    }
  }
  return best;
}

std::size_t forest_mtry(MaxFeatures rule, std::size_t d) {
  if (d == 0) return 0;
  switch (rule) {
    case MaxFeatures::Sqrt:
      return std::max<std::size_t>(1, std::size_t(std::floor(std::sqrt(double(d)))));
    case MaxFeatures::Log2:
      return std::max<std::size_t>(1, std::size_t(std::floor(std::log2(double(d)))));
    case MaxFeatures::All: return d;
  }
  return d;
}

std::uint64_t forest_tree_seed(std::uint64_t master, std::size_t label, std::size_t tree) {
  return splitmix64(splitmix64(splitmix64(master) ^ std::uint64_t(label)) ^ std::uint64_t(tree));
}

ForestModel::ForestModel(std::vector<std::string> labels, std::size_t dim,
                         std::vector<std::vector<DecisionTree>> forests, ForestConfig cfg)
    : labels_(std::move(labels)), dim_(dim), forests_(std::move(forests)), cfg_(cfg) {
  if (forests_.size() != labels_.size()) throw InputError("forest: one forest per label required");
  for (const auto& f : forests_) {
    if (f.empty()) throw InputError("forest: empty forest");
    for (const auto& t : f) validate_tree(t, dim_);
  }
}

std::vector<double> ForestModel::predict_dense(const std::vector<double>& x) const {
  check_dim(x.size());
  std::vector<double> out(forests_.size());
  for (std::size_t l = 0; l < forests_.size(); ++l) {
    double s = 0.0;
    for (const auto& t : forests_[l]) s += t.predict(x);
    out[l] = s / double(forests_[l].size());
  }
  return out;
}

std::vector<double> ForestModel::predict_row(const SparseVector& row) const {
  check_dim(row.dim);
  std::vector<double> dense(dim_, 0.0);
  for (std::size_t k = 0; k < row.indices.size(); ++k) dense[row.indices[k]] = row.values[k];
  return predict_dense(dense);
}

std::string ForestModel::serialize() const {
  BinaryWriter w;
  w.magic("HCSBCRF1");
  w.u32(kFormatVersion);
  w.u64(cfg_.n_trees);
  w.u64(cfg_.max_depth);
  w.u8(std::uint8_t(cfg_.max_features));
  w.u8(cfg_.bootstrap ? 1 : 0);
  w.u64(cfg_.seed);
  w.u64(cfg_.min_samples_split);
  w.u64(dim_);
  w.u32(std::uint32_t(labels_.size()));
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    w.str(labels_[l]);
    w.u32(std::uint32_t(forests_[l].size()));
    for (const auto& t : forests_[l]) {
      w.u32(std::uint32_t(t.nodes.size()));
      for (const auto& nd : t.nodes) {
        w.i32(nd.feature);
        w.f64(nd.threshold);
        w.u32(nd.left);
        w.u32(nd.right);
        w.f64(nd.prob);
      }
    }
  }
  return w.take();
}

ForestModel ForestModel::deserialize(std::string_view bytes) {
  BinaryReader r(bytes);
  r.expect_magic("HCSBCRF1");
  if (r.u32() != kFormatVersion) throw BundleError("forest payload: unsupported version");
  ForestConfig cfg;
  cfg.n_trees = r.u64();
  cfg.max_depth = r.u64();
  const auto mf = r.u8();
  if (mf > std::uint8_t(MaxFeatures::All)) throw BundleError("forest payload: bad max_features");
  cfg.max_features = MaxFeatures(mf);
  cfg.bootstrap = r.u8() != 0;
  cfg.seed = r.u64();
  cfg.min_samples_split = r.u64();
  const std::size_t dim = r.u64();
  const std::uint32_t n = r.u32();
  std::vector<std::string> labels;
  std::vector<std::vector<DecisionTree>> forests(n);
  for (std::uint32_t l = 0; l < n; ++l) {
    labels.push_back(r.str());
    const std::uint32_t nt = r.u32();
    forests[l].resize(nt);
    for (auto& t : forests[l]) {
      const std::uint32_t nn = r.u32();
      t.nodes.resize(nn);
      for (auto& nd : t.nodes) {
        nd.feature = r.i32();
        nd.threshold = r.f64();
        nd.left = r.u32();
        nd.right = r.u32();
        nd.prob = r.f64();
      }
    }
  }
  if (!r.done()) throw BundleError("forest payload: trailing bytes");
  return ForestModel(std::move(labels), dim, std::move(forests), cfg);
}

ForestModel forest_fit(const FeatureMatrix& x, const LabelMatrix& y, const ForestConfig& cfg) {
  check_training_shapes(x, y);
  if (x.rows.size() < 2) throw InputError("forest_fit: need at least 2 samples");
  if (cfg.n_trees == 0) throw InputError("forest_fit: n_trees must be > 0");
  for (const auto& r : x.rows) r.check();

  const std::size_t n_labels = y.n_labels();
  const std::size_t mtry = forest_mtry(cfg.max_features, x.dim);
  std::vector<std::vector<std::uint8_t>> targets(n_labels, std::vector<std::uint8_t>(x.rows.size()));
  std::vector<std::string> warnings;
  for (std::size_t l = 0; l < n_labels; ++l) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < x.rows.size(); ++i) {
      targets[l][i] = y.at(i, l) ? 1 : 0;
      pos += targets[l][i];
    }
    if (pos == 0 || pos == x.rows.size()) {
      warnings.push_back("label '" + y.label_names()[l] + "' has " +
                         (pos == 0 ? "no positive" : "no negative") +
                         " training examples; using constant prior");
    }
  }

  std::vector<std::vector<DecisionTree>> forests(n_labels, std::vector<DecisionTree>(cfg.n_trees));
  const std::size_t jobs = n_labels * cfg.n_trees;
  std::size_t workers = cfg.n_threads ? cfg.n_threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, jobs);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto run = [&] {
    try {
      std::vector<std::unique_ptr<TreeBuilder>> builders(n_labels);
      for (;;) {
        const std::size_t job = next.fetch_add(1);
        if (job >= jobs) break;
        const std::size_t l = job / cfg.n_trees, t = job % cfg.n_trees;
        if (!builders[l]) builders[l] = std::make_unique<TreeBuilder>(x, targets[l], cfg, mtry);
        forests[l][t] = builders[l]->build(forest_tree_seed(cfg.seed, l, t));
        if (t + 1 == cfg.n_trees) builders[l].reset();
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next.store(jobs);
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ForestModel m(y.label_names(), x.dim, std::move(forests), cfg);
  m.warnings_ = std::move(warnings);
  return m;
}

}  // namespace hcsbc
