#include "hcsbc/logreg.hpp"

#include <cmath>

#include "hcsbc/binary_io.hpp"
#include "hcsbc/errors.hpp"

namespace hcsbc {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(const std::vector<double>& w, const SparseVector& x) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.indices.size(); ++k) s += w[x.indices[k]] * x.values[k];
  return s;
}

}  // namespace

double logreg_loss(const FeatureMatrix& x, const std::vector<std::uint8_t>& y,
                   const std::vector<double>& w, double b, double alpha, double lambda) {
  const double n = double(x.rows.size());
  double data = 0.0;
  for (std::size_t i = 0; i < x.rows.size(); ++i) {
    const double z = dot(w, x.rows[i]) + b;
    // -log(sigma(z)) = softplus(-z); -log(1 - sigma(z)) = softplus(z)
    data += y[i] ? alpha * softplus(-z) : softplus(z);
  }
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return data / n + lambda * reg;
}

void logreg_gradient(const FeatureMatrix& x, const std::vector<std::uint8_t>& y,
                     const std::vector<double>& w, double b, double alpha, double lambda,
                     std::vector<double>& gw, double& gb) {
  const double n = double(x.rows.size());
  gw.assign(x.dim, 0.0);
  gb = 0.0;
  for (std::size_t i = 0; i < x.rows.size(); ++i) {
    const auto& row = x.rows[i];
    const double p = sigmoid(dot(w, row) + b);
    const double dz = (y[i] ? -alpha * (1.0 - p) : p) / n;
    for (std::size_t k = 0; k < row.indices.size(); ++k) gw[row.indices[k]] += dz * row.values[k];
    gb += dz;
  }
  for (std::size_t j = 0; j < w.size(); ++j) gw[j] += 2.0 * lambda * w[j];
}

LogRegModel::LogRegModel(std::vector<std::string> labels, std::size_t dim,
                         std::vector<Head> heads, LogRegConfig cfg)
    : labels_(std::move(labels)), dim_(dim), heads_(std::move(heads)), cfg_(cfg) {
  if (heads_.size() != labels_.size()) throw InputError("logreg: one head per label required");
  for (const auto& h : heads_) {
    if (!h.constant && h.w.size() != dim_) throw DimensionError("logreg: weight length != dim");
    for (double v : h.w) {
      if (!std::isfinite(v)) throw TrainingError("logreg: non-finite weight");
    }
    if (!std::isfinite(h.b)) throw TrainingError("logreg: non-finite bias");
  }
}

std::vector<double> LogRegModel::predict_row(const SparseVector& row) const {
  check_dim(row.dim);
  std::vector<double> out(heads_.size());
  for (std::size_t l = 0; l < heads_.size(); ++l) {
    const auto& h = heads_[l];
    out[l] = h.constant ? h.prior : sigmoid(dot(h.w, row) + h.b);
  }
  return out;
}

std::string LogRegModel::serialize() const {
  BinaryWriter w;
  w.magic("HCSBCLR1");
  w.u32(kFormatVersion);
  w.f64(cfg_.learning_rate);
  w.f64(cfg_.l2_lambda);
  w.u64(cfg_.max_epochs);
  w.f64(cfg_.tol);
  w.u8(cfg_.class_weighting ? 1 : 0);
  w.u64(cfg_.max_halvings);
  w.u64(dim_);
  w.u32(std::uint32_t(labels_.size()));
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    const auto& h = heads_[l];
    w.str(labels_[l]);
    w.u8(h.constant ? 1 : 0);
    w.f64(h.prior);
    w.f64(h.b);
    w.u64(h.w.size());
    for (double v : h.w) w.f64(v);
  }
  return w.take();
}

LogRegModel LogRegModel::deserialize(std::string_view bytes) {
  BinaryReader r(bytes);
  r.expect_magic("HCSBCLR1");
  if (r.u32() != kFormatVersion) throw BundleError("logreg payload: unsupported version");
  LogRegConfig cfg;
  cfg.learning_rate = r.f64();
  cfg.l2_lambda = r.f64();
  cfg.max_epochs = r.u64();
  cfg.tol = r.f64();
  cfg.class_weighting = r.u8() != 0;
  cfg.max_halvings = r.u64();
  const std::size_t dim = r.u64();
  const std::uint32_t n = r.u32();
  std::vector<std::string> labels;
  std::vector<LogRegModel::Head> heads;
  for (std::uint32_t l = 0; l < n; ++l) {
    labels.push_back(r.str());
    LogRegModel::Head h;
    h.constant = r.u8() != 0;
    h.prior = r.f64();
    h.b = r.f64();
    const std::size_t len = r.u64();
    if (len != (h.constant ? 0 : dim)) throw BundleError("logreg payload: bad weight length");
    h.w.resize(len);
    for (auto& v : h.w) v = r.f64();
    heads.push_back(std::move(h));
  }
  if (!r.done()) throw BundleError("logreg payload: trailing bytes");
  return LogRegModel(std::move(labels), dim, std::move(heads), cfg);
}

LogRegModel logreg_fit(const FeatureMatrix& x, const LabelMatrix& y, const LogRegConfig& cfg) {
  check_training_shapes(x, y);
  if (x.rows.size() < 2) throw InputError("logreg_fit: need at least 2 samples");
  if (!(cfg.learning_rate > 0.0) || cfg.l2_lambda < 0.0) {
    throw InputError("logreg_fit: learning_rate must be > 0 and l2_lambda >= 0");
  }
  const std::size_t n = x.rows.size();
  std::vector<LogRegModel::Head> heads;
  std::vector<std::vector<double>> traces;
  std::vector<std::string> warnings;

  for (std::size_t l = 0; l < y.n_labels(); ++l) {
    std::vector<std::uint8_t> t(n);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = y.at(i, l) ? 1 : 0;
      pos += t[i];
    }
    LogRegModel::Head h;
    if (pos == 0 || pos == n) {
      h.constant = true;
      h.prior = double(pos) / double(n);
      warnings.push_back("label '" + y.label_names()[l] + "' has " +
                         (pos == 0 ? "no positive" : "no negative") +
                         " training examples; using constant prior");
      heads.push_back(std::move(h));
      traces.emplace_back();
      continue;
    }
    const double alpha = cfg.class_weighting ? double(n - pos) / double(pos) : 1.0;
    h.w.assign(x.dim, 0.0);
    double loss = logreg_loss(x, t, h.w, h.b, alpha, cfg.l2_lambda);
    if (!std::isfinite(loss)) throw TrainingError("logreg_fit: non-finite loss");
    std::vector<double> trace{loss};
    std::vector<double> gw, cand;
    double gb = 0.0;
    double lr = cfg.learning_rate;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
      logreg_gradient(x, t, h.w, h.b, alpha, cfg.l2_lambda, gw, gb);
      bool accepted = false;
      double next = loss;
      double cand_b = h.b;
      for (std::size_t k = 0; k <= cfg.max_halvings; ++k) {
        cand.resize(h.w.size());
        for (std::size_t j = 0; j < h.w.size(); ++j) cand[j] = h.w[j] - lr * gw[j];
        cand_b = h.b - lr * gb;
        next = logreg_loss(x, t, cand, cand_b, alpha, cfg.l2_lambda);
        if (std::isfinite(next) && next <= loss) {
          accepted = true;
          break;
        }
        lr *= 0.5;
      }
      if (!accepted) break;
      h.w.swap(cand);
      h.b = cand_b;
      const double delta = loss - next;
      loss = next;
      trace.push_back(loss);
      if (delta < cfg.tol) break;
    }
    heads.push_back(std::move(h));
    traces.push_back(std::move(trace));
  }
  LogRegModel m(y.label_names(), x.dim, std::move(heads), cfg);
  m.traces_ = std::move(traces);
  m.warnings_ = std::move(warnings);
  return m;
}

}  // namespace hcsbc
