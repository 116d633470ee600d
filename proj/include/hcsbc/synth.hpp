#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcsbc/corpus.hpp"
#include "hcsbc/ontology.hpp"

namespace hcsbc {

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_parts = 1000;
  // Relative weight of each diagnosis, each in (0, 1]. The primary label of
  // a non-NEG part is drawn proportionally to these.
  std::map<std::string, double> priors;
  double neg_rate = 0.2;
  // Probability that a non-NEG part carries a second, distinct label.
  double co_occurrence_rate = 0.15;
  // Probability that any one signal term is dropped from a part.
  double noise_rate = 0.0;
  std::size_t min_signal_terms = 3;
  std::size_t max_signal_terms = 8;
  std::vector<std::string> filler_vocabulary = default_filler_vocabulary();
  std::size_t filler_min = 4;
  std::size_t filler_max = 12;
  std::size_t max_parts_per_report = 3;

  static std::vector<std::string> default_filler_vocabulary();

  // Throws InputError on empty priors, out-of-range rates, or bad bounds.
  void validate(const Ontology& ont) const;

  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

struct SynthCorpus {
  std::vector<LabeledPart> parts;
  // Generated pseudo-words per label; each occurs for that label only.
  std::map<std::string, std::vector<std::string>> signal_terms;
  std::vector<std::string> warnings;  // e.g. overlapping signal sets
};

SynthCorpus generate_synth(const SynthConfig& cfg, const Ontology& ont);

// Probability that a generated part carries `label`, from the sampling
// scheme above: (1 - neg_rate) * (p_l + rate * sum_{k != l} p_k p_l / (1 - p_k))
// with p normalized.
std::map<std::string, double> expected_marginals(const SynthConfig& cfg);

// Relative label counts per severity of a clinical breast pathology corpus
// (IBC 1302, ISC 1192, HRL 1193, BLL 25, NBC 53, Benign 3684).
std::map<std::string, double> clinical_severity_profile();

// Spreads per-severity weights over the branch labels with a 1/(k+1) decay
// inside each severity, then scales so the largest prior is 1.
std::map<std::string, double> priors_from_profile(const Ontology& ont,
                                                  const std::map<std::string, double>& profile);

// Joins a report's parts into a final-diagnosis section using "A." markers.
std::string compose_report(const std::vector<LabeledPart>& parts);

}  // namespace hcsbc
