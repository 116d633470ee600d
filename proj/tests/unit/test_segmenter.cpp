#include <doctest.h>

#include "hcsbc/errors.hpp"
#include "hcsbc/segmenter.hpp"
#include "support.hpp"

using namespace hcsbc;
using hcsbc::testing::segmenter_fixtures;

TEST_CASE("segmenter fixtures") {
  const auto fixtures = segmenter_fixtures();
  CHECK(fixtures.size() == 25);
  for (const auto& f : fixtures) {
    CAPTURE(f.name);
    const auto seg = segment({"r1", f.text, std::nullopt}, f.styles);
    REQUIRE(seg.parts.size() == f.parts.size());
    for (std::size_t k = 0; k < f.parts.size(); ++k) {
      CHECK(seg.parts[k].part_id == f.parts[k].first);
      CHECK(seg.parts[k].text == f.parts[k].second);
      CHECK(seg.parts[k].report_id == "r1");
    }
    CHECK(hcsbc::testing::segmentation_lossless(f.text, seg));
  }
}

TEST_CASE("all six styles are exercised by the fixtures") {
  std::set<MarkerStyle> used;
  for (const auto& f : segmenter_fixtures()) {
    const auto seg = segment({"r", f.text, std::nullopt}, f.styles);
    if (seg.style) used.insert(*seg.style);
  }
  CHECK(used.size() == 6);
}

TEST_CASE("preamble span covers the text before the first marker") {
  const std::string text = "Left breast biopsy:\nA. benign\nB. cyst";
  const auto seg = segment({"r", text, std::nullopt}, MarkerStyleSet::all());
  CHECK(text.substr(seg.preamble.begin, seg.preamble.size()) == "Left breast biopsy:\n");
  CHECK(seg.parts[0].marker_span == Span{20, 22});
}

TEST_CASE("splitting an emitted part again leaves it unchanged") {
  for (const auto& f : segmenter_fixtures()) {
    if (f.styles.styles().size() != 1) continue;
    const auto parts = split_parts({"r", f.text, std::nullopt}, f.styles);
    for (const auto& p : parts) {
      CAPTURE(f.name);
      const auto again = split_parts({"r", p.text, std::nullopt}, f.styles);
      REQUIRE(again.size() == 1);
      CHECK(again[0].text == p.text);
    }
  }
}

TEST_CASE("fuzzed inputs stay lossless with monotone letter ids") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 500; ++k) {
    std::string text = hcsbc::testing::random_report_text(rng);
    if (text.empty()) continue;
    const auto seg = segment({"r", text, std::nullopt}, MarkerStyleSet::all());
    CAPTURE(text);
    CHECK(hcsbc::testing::segmentation_lossless(text, seg));
    for (std::size_t i = 1; i < seg.parts.size(); ++i) {
      CHECK(seg.parts[i].span.begin >= seg.parts[i - 1].span.end);
    }
  }
}

TEST_CASE("segmenter errors") {
  CHECK_THROWS_AS(segment({"r", "", std::nullopt}, MarkerStyleSet::all()), SegmentError);
  CHECK_THROWS_AS(segment({"r", "A. x", std::nullopt}, MarkerStyleSet{}), SegmentError);
  std::string many;
  for (int k = 1; k <= 100; ++k) many += std::to_string(k) + ". x\n";
  CHECK_THROWS_AS(segment({"r", many, std::nullopt}, {MarkerStyle::NumDot}), SegmentError);
  CHECK_THROWS_AS(MarkerStyleSet::parse("LETTER_DOT,BOGUS"), InputError);
  CHECK(MarkerStyleSet::parse("LETTER_DOT, NUM_PAREN").styles().size() == 2);
}

TEST_CASE("final diagnosis extraction") {
  const std::string text =
      "CLINICAL HISTORY: mass\nFINAL DIAGNOSIS:\nA. benign\nB. cyst\nCOMMENT: see note";
  const auto r = extract_final_diagnosis({"r", text, std::nullopt});
  CHECK(r.heading_found);
  CHECK(r.report.text == "A. benign\nB. cyst");
  CHECK(text.substr(r.section.begin, r.section.size()) == r.report.text);

  const auto none = extract_final_diagnosis({"r", "A. benign", std::nullopt});
  CHECK_FALSE(none.heading_found);
  CHECK(none.report.text == "A. benign");

  const auto empty = extract_final_diagnosis({"r", "history\nFINAL DIAGNOSIS:", std::nullopt});
  CHECK(empty.heading_found);
  CHECK(empty.empty_section);
  CHECK(empty.report.text == "history\nFINAL DIAGNOSIS:");
}
