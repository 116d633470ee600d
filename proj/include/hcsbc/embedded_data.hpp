#pragma once

#include <string_view>

namespace hcsbc::embedded {

// Contents of data/default_ontology.json.
std::string_view default_ontology_json();
// Contents of data/stopwords_en.txt, one token per line.
std::string_view stopwords_en();

}  // namespace hcsbc::embedded
