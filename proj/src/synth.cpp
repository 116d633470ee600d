#include "hcsbc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "hcsbc/errors.hpp"
#include "hcsbc/rng.hpp"
#include "hcsbc/textprep.hpp"

namespace hcsbc {

using nlohmann::json;

std::vector<std::string> SynthConfig::default_filler_vocabulary() {
  return {"specimen",   "received", "formalin",  "tissue",    "fragments",  "core",
          "sections",   "examined", "slides",    "stroma",    "fibrous",    "fatty",
          "portion",    "submitted", "entirely", "cassette",  "tan",        "white",
          "firm",       "pink",     "labeled",   "clinical",  "history",    "ultrasound",
          "guided",     "needle",   "sampling",  "levels",    "reviewed",   "identified",
          "representative", "areas", "surrounding", "parenchyma", "measuring", "aggregate",
          "dimension",  "consult",  "additional", "material", "processed",  "routine",
          "stain",      "hematoxylin", "eosin",  "prior",     "imaging",    "correlation",
          "requested",  "patient",  "noted",     "seen",      "within",     "focal"};
}

void SynthConfig::validate(const Ontology& ont) const {
  if (priors.empty()) throw InputError("synth: empty label priors");
  for (const auto& [label, p] : priors) {
    if (!ont.has_diagnosis(label)) throw InputError("synth: prior for unknown label '" + label + "'");
    if (!(p > 0.0 && p <= 1.0)) throw InputError("synth: prior of '" + label + "' must be in (0,1]");
  }
  auto rate = [](double r, const char* what) {
    if (!(r >= 0.0 && r <= 1.0)) throw InputError(std::string("synth: ") + what + " must be in [0,1]");
  };
  rate(neg_rate, "neg_rate");
  rate(co_occurrence_rate, "co_occurrence_rate");
  rate(noise_rate, "noise_rate");
  if (n_parts == 0) throw InputError("synth: n_parts must be > 0");
  if (min_signal_terms == 0 || min_signal_terms > max_signal_terms) {
    throw InputError("synth: need 1 <= min_signal_terms <= max_signal_terms");
  }
  if (filler_min > filler_max) throw InputError("synth: filler_min > filler_max");
  if (filler_vocabulary.empty() && filler_max > 0) throw InputError("synth: empty filler vocabulary");
  if (max_parts_per_report == 0 || max_parts_per_report > 26) {
    throw InputError("synth: max_parts_per_report must be in 1..26");
  }
}

json SynthConfig::to_json() const {
  return {{"seed", seed},
          {"n_parts", n_parts},
          {"priors", priors},
          {"neg_rate", neg_rate},
          {"co_occurrence_rate", co_occurrence_rate},
          {"noise_rate", noise_rate},
          {"min_signal_terms", min_signal_terms},
          {"max_signal_terms", max_signal_terms},
          {"filler_vocabulary", filler_vocabulary},
          {"filler_min", filler_min},
          {"filler_max", filler_max},
          {"max_parts_per_report", max_parts_per_report}};
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  c.seed = j.value("seed", c.seed);
  c.n_parts = j.value("n_parts", c.n_parts);
  if (j.contains("priors")) c.priors = j.at("priors").get<std::map<std::string, double>>();
  c.neg_rate = j.value("neg_rate", c.neg_rate);
  c.co_occurrence_rate = j.value("co_occurrence_rate", c.co_occurrence_rate);
  c.noise_rate = j.value("noise_rate", c.noise_rate);
  c.min_signal_terms = j.value("min_signal_terms", c.min_signal_terms);
  c.max_signal_terms = j.value("max_signal_terms", c.max_signal_terms);
  if (j.contains("filler_vocabulary")) {
    c.filler_vocabulary = j.at("filler_vocabulary").get<std::vector<std::string>>();
  }
  c.filler_min = j.value("filler_min", c.filler_min);
  c.filler_max = j.value("filler_max", c.filler_max);
  c.max_parts_per_report = j.value("max_parts_per_report", c.max_parts_per_report);
  return c;
}

namespace {

struct Weighted {
  std::vector<std::string> labels;
  std::vector<double> p;  // normalized
};

Weighted normalized_priors(const SynthConfig& cfg) {
  Weighted w;
  double total = 0.0;
  for (const auto& [l, p] : cfg.priors) {
    w.labels.push_back(l);
    w.p.push_back(p);
    total += p;
  }
  for (double& p : w.p) p /= total;
  return w;
}

std::size_t draw(std::mt19937_64& rng, const std::vector<double>& p, std::size_t exclude) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += i == exclude ? 0.0 : p[i];
  double u = uniform01(rng) * total;
  std::size_t last = p.size();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == exclude) continue;
    last = i;
    if (u < p[i]) return i;
    u -= p[i];
  }
  return last;
}

std::string pseudo_word(std::mt19937_64& rng) {
  static constexpr std::string_view cons = "bdfgklmnprtvz";
  static constexpr std::string_view vow = "aeiou";
  std::string w;
  for (int s = 0; s < 3; ++s) {
    w.push_back(cons[bounded(rng, cons.size())]);
    w.push_back(vow[bounded(rng, vow.size())]);
  }
  w.push_back(cons[bounded(rng, cons.size())]);
  return w;
}

// Words of the label name usable as context tokens.
std::vector<std::string> name_words(const std::string& name) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : name + " ") {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else {
      if (cur.size() >= 3) out.push_back(cur);
      cur.clear();
    }
  }
  return out;
}

std::string header(std::mt19937_64& rng) {
  static const char* sides[] = {"Left", "Right"};
  static const char* procs[] = {"core biopsy", "excisional biopsy", "lumpectomy",
                                "needle localization", "mass excision"};
  std::string h = std::string(sides[bounded(rng, 2)]) + " breast";
  switch (bounded(rng, 3)) {
    case 0: {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%02u:00", unsigned(1 + bounded(rng, 12)));
      h += ", " + std::string(buf);
      break;
    }
    case 1: h += ", " + std::to_string(1 + bounded(rng, 12)) + " o'clock"; break;
    default: break;
  }
  h += ", " + std::string(procs[bounded(rng, 5)]) + ":";
  return h;
}

std::string measurement(std::mt19937_64& rng) {
  return std::to_string(1 + bounded(rng, 4)) + "." + std::to_string(bounded(rng, 10)) + " cm";
}

}  // namespace

SynthCorpus generate_synth(const SynthConfig& cfg, const Ontology& ont) {
  cfg.validate(ont);
  SynthCorpus out;
  const Weighted pri = normalized_priors(cfg);

  // Signal vocabulary: distinct pseudo-words whose stems are also distinct.
  std::mt19937_64 term_rng(splitmix64(cfg.seed ^ 0x5157u));
  std::set<std::string> used_stems;
  for (const auto& w : cfg.filler_vocabulary) used_stems.insert(porter_stem(w));
  for (const auto& w : PrepConfig::default_stopwords()) used_stems.insert(w);
  for (const auto& l : pri.labels) {
    const std::size_t k = cfg.min_signal_terms +
                          bounded(term_rng, cfg.max_signal_terms - cfg.min_signal_terms + 1);
    auto& terms = out.signal_terms[l];
    while (terms.size() < k) {
      auto w = pseudo_word(term_rng);
      if (used_stems.insert(porter_stem(w)).second) terms.push_back(w);
    }
  }
  // Label-name words are shared across labels ("carcinoma", "ductal"); warn
  // when two labels would share most of their context.
  for (std::size_t a = 0; a < pri.labels.size(); ++a) {
    const auto wa = name_words(pri.labels[a]);
    for (std::size_t b = a + 1; b < pri.labels.size(); ++b) {
      const auto wb = name_words(pri.labels[b]);
      std::size_t shared = 0;
      for (const auto& w : wa) shared += std::count(wb.begin(), wb.end(), w) ? 1 : 0;
      const std::size_t uni = wa.size() + wb.size() - shared;
      if (uni > 0 && shared * 2 > uni) {
        out.warnings.push_back("signal overlap: '" + pri.labels[a] + "' and '" + pri.labels[b] +
                               "' share most label-name words");
      }
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::size_t report = 0, part_in_report = 0, parts_this_report = 0;
  for (std::size_t i = 0; i < cfg.n_parts; ++i) {
    if (part_in_report == parts_this_report) {
      ++report;
      part_in_report = 0;
      parts_this_report = 1 + bounded(rng, cfg.max_parts_per_report);
    }
    LabeledPart p;
    char rid[24];
    std::snprintf(rid, sizeof rid, "S%06zu", report);
    p.report_id = rid;
    p.part_id = std::string(1, char('A' + part_in_report));
    ++part_in_report;

    std::vector<std::string> pieces;
    if (uniform01(rng) >= cfg.neg_rate) {
      const std::size_t first = draw(rng, pri.p, pri.p.size());
      p.gold_diagnoses.push_back(pri.labels[first]);
      if (pri.labels.size() > 1 && uniform01(rng) < cfg.co_occurrence_rate) {
        p.gold_diagnoses.push_back(pri.labels[draw(rng, pri.p, first)]);
      }
      for (const auto& l : p.gold_diagnoses) {
        if (uniform01(rng) >= cfg.noise_rate) {
          std::string phrase;
          for (const auto& w : name_words(l)) phrase += (phrase.empty() ? "" : " ") + w;
          if (!phrase.empty()) pieces.push_back(phrase);
        }
        for (const auto& t : out.signal_terms[l]) {
          if (uniform01(rng) >= cfg.noise_rate) pieces.push_back(t);
        }
      }
      if (bounded(rng, 2) == 0) pieces.push_back(measurement(rng));
    } else {
      pieces.push_back("negative for malignancy");
    }
    const std::size_t nf = cfg.filler_min + bounded(rng, cfg.filler_max - cfg.filler_min + 1);
    for (std::size_t f = 0; f < nf; ++f) {
      pieces.push_back(cfg.filler_vocabulary[bounded(rng, cfg.filler_vocabulary.size())]);
    }
    seeded_shuffle(pieces, rng);
    std::string text = header(rng);
    for (const auto& pc : pieces) text += " " + pc;
    text += ".";
    p.text = std::move(text);
    out.parts.push_back(std::move(p));
  }
  return out;
}

std::map<std::string, double> expected_marginals(const SynthConfig& cfg) {
  const Weighted w = normalized_priors(cfg);
  std::map<std::string, double> out;
  for (std::size_t l = 0; l < w.p.size(); ++l) {
    double second = 0.0;
    if (w.p.size() > 1) {
      for (std::size_t k = 0; k < w.p.size(); ++k) {
        if (k != l) second += w.p[k] * w.p[l] / (1.0 - w.p[k]);
      }
    }
    out[w.labels[l]] = (1.0 - cfg.neg_rate) * (w.p[l] + cfg.co_occurrence_rate * second);
  }
  return out;
}

std::map<std::string, double> clinical_severity_profile() {
  return {{"IBC", 1302}, {"ISC", 1192}, {"HRL", 1193}, {"BLL", 25}, {"NBC", 53}, {"B", 3684}};
}

std::map<std::string, double> priors_from_profile(const Ontology& ont,
                                                  const std::map<std::string, double>& profile) {
  std::map<std::string, double> raw;
  for (const auto& code : ont.branch_codes()) {
    auto it = profile.find(code);
    if (it == profile.end() || it->second <= 0.0) continue;
    const auto labels = ont.branch_labels(code);
    double norm = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) norm += 1.0 / double(k + 1);
    for (std::size_t k = 0; k < labels.size(); ++k) {
      raw[labels[k].name] = it->second * (1.0 / double(k + 1)) / norm;
    }
  }
  if (raw.empty()) throw InputError("priors_from_profile: no severity of the profile has labels");
  double mx = 0.0;
  for (const auto& [l, v] : raw) mx = std::max(mx, v);
  for (auto& [l, v] : raw) v /= mx;
  return raw;
}

std::string compose_report(const std::vector<LabeledPart>& parts) {
  std::string out = "FINAL DIAGNOSIS:\n";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out += std::string(1, char('A' + i)) + ". " + parts[i].text + "\n";
  }
  return out;
}

}  // namespace hcsbc
