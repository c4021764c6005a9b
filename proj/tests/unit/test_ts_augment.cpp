#include <algorithm>
#include <random>

#include "doctest.h"
#include "lowreskit/ts_augment.hpp"
#include "test_util.hpp"

using namespace lowreskit;
using namespace lowreskit::ts;

namespace {

std::vector<TaggedExample> fixture_examples() {
  std::vector<TaggedExample> v;
  for (const auto& r : read_ndjson(lrk_test::fixture("ts_tagged.ndjson"))) v.push_back(tagged_from_json(r));
  return v;
}

TaggedExample tagged(const std::string& id, const std::string& text, std::vector<std::string> surfaces) {
  TaggedExample t;
  t.example_id = id;
  t.text = text;
  t.label = "per:title";
  for (auto& s : surfaces) t.critical_spans.push_back({Role::subject, s});
  return t;
}

TaggedExample simplification(const TaggedExample& o, const std::string& text) {
  TaggedExample s = o;
  s.example_id = o.example_id + "#simp";
  s.parent_id = o.example_id;
  s.text = text;
  s.provenance = Provenance::simplified;
  return s;
}

bool is_sub_multiset(std::vector<TaggedExample> sub, std::vector<TaggedExample> of) {
  for (const auto& x : sub) {
    auto it = std::find(of.begin(), of.end(), x);
    if (it == of.end()) return false;
    of.erase(it);
  }
  return true;
}

// 10 originals; the first 6 simplifications keep their surfaces, the rest drop them.
std::pair<std::vector<TaggedExample>, std::vector<TaggedExample>> six_of_ten() {
  std::vector<TaggedExample> o, s;
  for (int i = 0; i < 10; ++i) {
    o.push_back(tagged("t" + std::to_string(i), "Officer Smith" + std::to_string(i) + " leads the unit.",
                       {"Smith" + std::to_string(i)}));
    s.push_back(simplification(o.back(), i < 6 ? "smith" + std::to_string(i) + " leads." : "The officer leads."));
  }
  return {o, s};
}

}  // namespace

TEST_CASE("critical information check") {
  const auto x = tagged("flint", "HSBC said the CFO Douglas Flint will become chairman.", {"Douglas Flint", "chairman"});
  CHECK(preserves_critical_info(x, "the CFO Douglas Flint will become chairman"));
  CHECK(preserves_critical_info(x, "The CFO  douglas   FLINT will be CHAIRMAN."));
  CHECK_FALSE(preserves_critical_info(x, "the CFO Douglas Flint will be promoted"));
  CHECK(preserves_critical_info(x, x.text));
  for (const auto& e : fixture_examples()) CHECK(preserves_critical_info(e, e.text));
}

TEST_CASE("sampling and simplifying") {
  const auto ex = fixture_examples();
  IdentitySimplifier id;
  CHECK(sample_and_simplify(ex, id, 0.0, 1).empty());
  const auto all = sample_and_simplify(ex, id, 1.0, 1);
  REQUIRE(all.size() == ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i) {
    CHECK(all[i].text == ex[i].text);
    CHECK(all[i].provenance == Provenance::simplified);
    CHECK(all[i].parent_id == ex[i].example_id);
    CHECK(all[i].label == ex[i].label);
  }
  ReferenceSimplifier ref;
  CHECK(sample_and_simplify(ex, ref, 0.5, 9) == sample_and_simplify(ex, ref, 0.5, 9));
  CHECK_THROWS_AS(sample_and_simplify(ex, id, 1.2, 1), ValidationError);

  // A failing simplifier skips the example.
  LookupSimplifier partial({{ex[0].text, "short."}});
  const auto one = sample_and_simplify(ex, partial, 1.0, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].parent_id == ex[0].example_id);
}

TEST_CASE("reference simplifier substitutes and splits at commas") {
  ReferenceSimplifier r({{"commence", "begin"}, {"subsequently", "later"}});
  CHECK(r.simplify("Commence the review subsequently, then stop.") == "Begin the review later. then stop.");
  // Fixture filter rate: 7 of 10 keep every critical surface.
  ReferenceSimplifier def;
  int kept = 0;
  for (const auto& e : fixture_examples()) kept += preserves_critical_info(e, def.simplify(e.text));
  CHECK(kept == 7);
}

TEST_CASE("composition strategies") {
  const auto [o, s] = six_of_ten();
  CompositionStrategy st;
  st.kind = CompositionKind::simplified_plus_original;
  const auto spo = compose_training_set(o, s, st);
  CHECK(spo.size() == 16);
  st.kind = CompositionKind::simplified_plus_complement;
  const auto spc = compose_training_set(o, s, st);
  REQUIRE(spc.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK((spc[i].provenance == Provenance::simplified) == (i < 6));
  st.kind = CompositionKind::original;
  CHECK(compose_training_set(o, s, st) == o);
  st.kind = CompositionKind::simplified;
  CHECK(compose_training_set(o, s, st) == s);
  st.kind = CompositionKind::swapped;
  st.sample_fraction_p = 0.0;
  CHECK(compose_training_set(o, s, st) == o);
  st.sample_fraction_p = 1.0;
  CHECK(compose_training_set(o, s, st) == spc);

  auto orphan = s;
  orphan[0].parent_id = "missing";
  CHECK_THROWS_AS(compose_training_set(o, orphan, st), ValidationError);
  auto twice = s;
  twice.push_back(s[0]);
  CHECK_THROWS_AS(compose_training_set(o, twice, st), ValidationError);
}

TEST_CASE("composition properties over random preservation patterns") {
  std::mt19937 gen(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TaggedExample> o, s;
    std::size_t preserving = 0;
    const int n = 1 + static_cast<int>(gen() % 30);
    for (int i = 0; i < n; ++i) {
      o.push_back(tagged("r" + std::to_string(i), "Entity" + std::to_string(i) + " did things.",
                         {"Entity" + std::to_string(i)}));
      if (gen() % 4 == 0) continue;  // not sampled
      const bool keep = gen() % 2;
      preserving += keep;
      s.push_back(simplification(o.back(), keep ? o.back().text : "It did things."));
    }
    for (auto kind : {CompositionKind::original, CompositionKind::simplified_plus_complement,
                      CompositionKind::simplified_plus_original, CompositionKind::swapped}) {
      const CompositionStrategy st{kind, static_cast<double>(gen() % 11) / 10.0, gen()};
      const auto out = compose_training_set(o, s, st);
      std::vector<TaggedExample> orig_part;
      for (const auto& r : out)
        if (r.provenance == Provenance::original) orig_part.push_back(r);
      CHECK(is_sub_multiset(orig_part, o));
      if (kind == CompositionKind::simplified_plus_original) CHECK(out.size() == o.size() + preserving);
      if (kind == CompositionKind::simplified_plus_complement || kind == CompositionKind::swapped)
        CHECK(out.size() == o.size());
    }
  }
}

TEST_CASE("composition kind names") {
  for (auto k : {CompositionKind::original, CompositionKind::simplified, CompositionKind::simplified_plus_complement,
                 CompositionKind::simplified_plus_original, CompositionKind::swapped})
    CHECK(composition_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(composition_kind_from_string("bogus"), ValidationError);
}

TEST_CASE("sentence BLEU against the python oracle") {
  // Values frozen from tests/oracles/bleu_oracle.py.
  CHECK(sentence_bleu("the cat sat on the mat", "the cat sat on the mat") == doctest::Approx(1.0));
  CHECK(sentence_bleu("the cat sat on the mat", "the cat is on the mat") ==
        doctest::Approx(0.48549177170732344).epsilon(1e-12));
  CHECK(sentence_bleu("the cat sat", "the cat sat on the mat") ==
        doctest::Approx(0.36787944117144233).epsilon(1e-12));
  CHECK(sentence_bleu("a b c d", "w x y z") == 0.0);
  CHECK(sentence_bleu("He will begin the review later.", "He will commence the review subsequently.") ==
        doctest::Approx(0.35930411196308426).epsilon(1e-12));
  CHECK(sentence_bleu("", "x") == 0.0);

  const auto md = bleu_divergence({{"the cat sat on the mat", "the cat sat on the mat"},
                                   {"the cat is on the mat", "the cat sat on the mat"},
                                   {"the cat sat on the mat", "the cat sat"},
                                   {"w x y z", "a b c d"},
                                   {"He will commence the review subsequently.", "He will begin the review later."}});
  CHECK(md.mean == doctest::Approx(0.44253506496837003).epsilon(1e-12));
  CHECK(md.stddev == doctest::Approx(0.32278493455330654).epsilon(1e-12));
  CHECK_THROWS_AS(bleu_divergence({}), ValidationError);
}

TEST_CASE("BLEU divergence is 1 exactly for token-identical pairs") {
  const auto same = bleu_divergence({{"a b c", "a  b c"}, {"x", "x"}});
  CHECK(same.mean == doctest::Approx(1.0));
  CHECK(same.stddev == doctest::Approx(0.0));
  std::mt19937 gen(8);
  for (int trial = 0; trial < 500; ++trial) {
    std::string a, b;
    const int la = 1 + static_cast<int>(gen() % 6), lb = 1 + static_cast<int>(gen() % 6);
    for (int i = 0; i < la; ++i) a += std::string(1, static_cast<char>('a' + gen() % 3)) + " ";
    for (int i = 0; i < lb; ++i) b += std::string(1, static_cast<char>('a' + gen() % 3)) + " ";
    const double v = bleu_divergence({{a, b}}).mean;
    CHECK((v > 1.0 - 1e-12) == (split_ws(a) == split_ws(b)));
  }
}

TEST_CASE("tagged record round trip and validation") {
  for (const auto& e : fixture_examples()) CHECK(tagged_from_json(tagged_to_json(e)) == e);
  CHECK_THROWS_AS(tagged_from_json(json{{"example_id", "x"},
                                        {"text", "abc"},
                                        {"critical_spans", {{{"role", "subject"}, {"surface", "zzz"}}}}}),
                  ValidationError);
}
