#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hcsbc/forest.hpp"
#include "hcsbc/hierarchy.hpp"
#include "hcsbc/logreg.hpp"

namespace hcsbc {

namespace {

struct Active {
  const Component* component;
  std::vector<std::size_t> labels;  // predicted labels of this component
};

std::vector<Active> active_components(const PipelineModel& m, const Prediction& pred) {
  std::vector<Active> out;
  auto pick = [](const Component& c, auto&& is_predicted) {
    Active a{&c, {}};
    const auto& names = c.labels();
    for (std::size_t l = 0; l < names.size(); ++l) {
      if (is_predicted(names[l])) a.labels.push_back(l);
    }
    return a;
  };
  std::set<std::string> sev, diag;
  for (const auto& s : pred.severities) sev.insert(s.code);
  for (const auto& d : pred.diagnoses) diag.insert(d.label);
  if (const auto* h = dynamic_cast<const HierarchicalModel*>(&m)) {
    out.push_back(pick(h->stage1(), [&](const std::string& n) { return sev.count(n) > 0; }));
    for (const auto& code : h->ontology().branch_codes()) {
      if (!sev.count(code)) continue;
      out.push_back(pick(h->branch(code), [&](const std::string& n) { return diag.count(n) > 0; }));
    }
  } else if (const auto* f = dynamic_cast<const FlatModel*>(&m)) {
    const bool neg = sev.count(std::string(kNegativeCode)) > 0;
    out.push_back(pick(f->model(), [&](const std::string& n) {
      return diag.count(n) > 0 || (neg && n == kNegativeCode);
    }));
  }
  return out;
}

}  // namespace

std::vector<TokenImportance> word_importance(const PipelineModel& m, const SpecimenPart& part,
                                             const Prediction& pred) {
  const PrepConfig& prep = m.config().prep;
  const PreparedText row = prepare_text(part.text, prep);
  const auto surfaces = tokenize_with_surface(row.normalized, prep);

  std::map<std::string, double> score;
  for (const auto& a : active_components(m, pred)) {
    const Component& c = *a.component;
    if (a.labels.empty() || c.backend.kind() != BackendKind::Tfidf) continue;
    const SparseVector x = c.backend.transform(row);
    const auto& vocab = c.backend.tfidf().vocabulary();
    if (const auto* lr = dynamic_cast<const LogRegModel*>(c.classifier.get())) {
      for (std::size_t k = 0; k < x.indices.size(); ++k) {
        double s = 0.0;
        for (auto l : a.labels) {
          const auto& h = lr->head(l);
          if (!h.constant) s += h.w[x.indices[k]] * x.values[k];
        }
        score[vocab[x.indices[k]]] += s;
      }
    } else if (const auto* rf = dynamic_cast<const ForestModel*>(c.classifier.get())) {
      std::vector<double> dense(x.dim, 0.0);
      for (std::size_t k = 0; k < x.indices.size(); ++k) dense[x.indices[k]] = x.values[k];
      const auto base = rf->predict_dense(dense);
      for (std::size_t k = 0; k < x.indices.size(); ++k) {
        const auto j = x.indices[k];
        dense[j] = 0.0;
        const auto occluded = rf->predict_dense(dense);
        dense[j] = x.values[k];
        double s = 0.0;
        for (auto l : a.labels) s += base[l] - occluded[l];
        score[vocab[j]] += s;
      }
    }
  }

  std::vector<TokenImportance> out;
  std::set<std::string> done;
  for (const auto& st : surfaces) {
    if (st.token == prep.unknown_token || done.count(st.token)) continue;
    auto it = score.find(st.token);
    if (it == score.end() || it->second == 0.0) continue;
    done.insert(st.token);
    out.push_back({st.token, st.surface, it->second});
  }
  std::stable_sort(out.begin(), out.end(), [](const TokenImportance& a, const TokenImportance& b) {
    if (std::abs(a.score) != std::abs(b.score)) return std::abs(a.score) > std::abs(b.score);
    return a.token < b.token;
  });
  return out;
}

}  // namespace hcsbc
