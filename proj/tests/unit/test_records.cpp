#include "doctest.h"
#include "lowreskit/records.hpp"
#include "lowreskit/training_plan.hpp"
#include "test_util.hpp"

using namespace lowreskit;

TEST_CASE("ndjson round trip skips blank lines") {
  const auto recs = parse_ndjson("{\"a\":1}\n\n  \n{\"b\":\"x\"}\n");
  REQUIRE(recs.size() == 2);
  CHECK(recs[0]["a"] == 1);
  CHECK(parse_ndjson(dump_ndjson(recs)) == recs);
}

TEST_CASE("ndjson parse errors name the line") {
  try {
    parse_ndjson("{\"a\":1}\n{oops}\n");
    FAIL("expected a parse error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("ndjson files") {
  lrk_test::TempDir dir;
  const auto path = dir.file("nested/out.ndjson");
  write_ndjson(path, {json{{"k", "v"}}, json{{"k", "w"}}});
  const auto back = read_ndjson(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1]["k"] == "w");
  CHECK_THROWS_AS(read_ndjson(dir.file("missing.ndjson")), IoError);
}

TEST_CASE("field accessors report the field") {
  const json r{{"n", 3}, {"s", "x"}, {"z", nullptr}};
  CHECK(require<int>(r, "n") == 3);
  CHECK(optional_field<int>(r, "m", 7) == 7);
  CHECK(optional_field<int>(r, "z", 7) == 7);
  try {
    require<int>(r, "s");
    FAIL("expected a type error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("'s'") != std::string::npos);
  }
  CHECK_THROWS_AS(require<int>(r, "missing"), ValidationError);
}

TEST_CASE("training plan serializes canonically and round trips byte-identically") {
  TrainingPlan plan;
  plan.stages.push_back({"pretrain", {{"augmented", "aug.ndjson", 16}}, ""});
  plan.stages.push_back({"finetune", {{"original", "orig.ndjson", 6}}, "pretrain"});
  plan.validate();
  const auto text = plan.serialize();
  CHECK(text.back() == '\n');
  const auto back = TrainingPlan::parse(text);
  CHECK(back == plan);
  CHECK(back.serialize() == text);
}

TEST_CASE("training plan validation") {
  TrainingPlan forward;
  forward.stages.push_back({"finetune", {}, "pretrain"});
  forward.stages.push_back({"pretrain", {}, ""});
  CHECK_THROWS_AS(forward.validate(), ValidationError);

  TrainingPlan dup;
  dup.stages.push_back({"a", {}, ""});
  dup.stages.push_back({"a", {}, ""});
  CHECK_THROWS_AS(dup.validate(), ValidationError);

  CHECK_THROWS_AS(TrainingPlan::parse("{not json"), ValidationError);
}
