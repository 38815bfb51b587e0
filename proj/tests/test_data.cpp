#include <doctest.h>

#include <algorithm>

#include "trialfit/data.hpp"
#include "trialfit/errors.hpp"
#include "trialfit/rng.hpp"

using namespace trialfit;

namespace {

OutcomeRegistry demo_registry() {
  OutcomeRegistry r;
  r["likeability"] = {0, 100, "session", OutcomeType::Continuous};
  r["engagingness"] = {0, 100, "session", OutcomeType::Continuous};
  r["goodbye"] = {0, 1, "end", OutcomeType::Binary};
  return r;
}

const char* kAssignments =
    "participant_id,lambda,domain,personalised\n"
    "p1,0.5,Emotional,true\n"
    "p2,-1,Political,false\n"
    "p3,0,Emotional,false\n";

}  // namespace

TEST_CASE("ingest: three valid rows pass through") {
  const char* obs =
      "participant_id,time,outcome,value\n"
      "p1,1,likeability,55\n"
      "p2,1,likeability,40\n"
      "p3,2,likeability,61.5\n";
  auto table = ingest_strings(obs, kAssignments, demo_registry());
  CHECK(table.observations().size() == 3);
  CHECK(table.assignment("p1").lambda == 0.5);
  CHECK(table.assignment("p1").domain == Domain::Emotional);
}

TEST_CASE("ingest: off-design lambda is rejected") {
  const char* bad =
      "participant_id,lambda,domain,personalised\n"
      "p1,0.3,Emotional,true\n";
  const char* obs = "participant_id,time,outcome,value\n";
  CHECK_THROWS_WITH_AS(ingest_strings(obs, bad, demo_registry()),
                       doctest::Contains("UnknownTreatmentLevel"), TrialError);
}

TEST_CASE("ingest: duplicate key is rejected") {
  const char* obs =
      "participant_id,time,outcome,value\n"
      "p1,1,likeability,55\n"
      "p1,1,likeability,60\n";
  CHECK_THROWS_WITH_AS(ingest_strings(obs, kAssignments, demo_registry()),
                       doctest::Contains("DuplicateKey"), TrialError);
}

TEST_CASE("ingest: missing column and out-of-range value") {
  CHECK_THROWS_WITH_AS(ingest_strings("participant_id,time,value\n", kAssignments,
                                      demo_registry()),
                       doctest::Contains("MissingColumn"), TrialError);
  const char* obs =
      "participant_id,time,outcome,value\n"
      "p1,1,likeability,140\n";
  CHECK_THROWS_AS(ingest_strings(obs, kAssignments, demo_registry()), TrialError);
  const char* binary_bad =
      "participant_id,time,outcome,value\n"
      "p1,0,goodbye,0.4\n";
  CHECK_THROWS_AS(ingest_strings(binary_bad, kAssignments, demo_registry()), TrialError);
}

TEST_CASE("ingest: observation without assignment is an orphan") {
  const char* obs =
      "participant_id,time,outcome,value\n"
      "p9,1,likeability,50\n";
  CHECK_THROWS_AS(ingest_strings(obs, kAssignments, demo_registry()), TrialError);
}

TEST_CASE("round trip: export then ingest is bitwise identical") {
  const char* obs =
      "participant_id,time,outcome,value,item,baseline\n"
      "p1,1,likeability,55.125,,41.5\n"
      "p1,2,likeability,0.30000000000000004,,41.5\n"
      "p2,1,engagingness,99.99999999999999,,\n";
  auto table = ingest_strings(obs, kAssignments, demo_registry());
  auto exported = export_csv(table);
  auto again = ingest_strings(exported.observations_csv, exported.assignments_csv,
                              demo_registry());
  CHECK(table == again);
}

TEST_CASE("ingest is order independent") {
  const char* fwd =
      "participant_id,time,outcome,value\n"
      "p1,1,likeability,10\n"
      "p2,3,likeability,20\n"
      "p3,2,engagingness,30\n";
  const char* rev =
      "participant_id,time,outcome,value\n"
      "p3,2,engagingness,30\n"
      "p1,1,likeability,10\n"
      "p2,3,likeability,20\n";
  CHECK(ingest_strings(fwd, kAssignments, demo_registry()) ==
        ingest_strings(rev, kAssignments, demo_registry()));
}

TEST_CASE("pool_items relabels without touching values") {
  const char* obs =
      "participant_id,time,outcome,value\n"
      "p1,1,likeability,10\n"
      "p1,1,engagingness,20\n"
      "p2,1,likeability,30\n";
  auto table = ingest_strings(obs, kAssignments, demo_registry());
  auto pooled = pool_items(table, "liking", {"likeability", "engagingness"});

  CHECK(pooled.observations().size() == table.observations().size());
  int liking_rows = 0;
  double value_sum = 0.0;
  for (const auto& o : pooled.observations()) {
    if (o.outcome == "liking") {
      ++liking_rows;
      CHECK((o.item == "likeability" || o.item == "engagingness"));
    }
    value_sum += o.value;
  }
  CHECK(liking_rows == 3);
  CHECK(value_sum == doctest::Approx(60.0));
}

TEST_CASE("pool_items: singleton pool renames only") {
  const char* obs =
      "participant_id,time,outcome,value\n"
      "p1,1,likeability,10\n"
      "p2,4,likeability,20\n";
  auto table = ingest_strings(obs, kAssignments, demo_registry());
  auto pooled = pool_items(table, "liking", {"likeability"});
  REQUIRE(pooled.observations().size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& a = table.observations()[i];
    const auto& b = pooled.observations()[i];
    CHECK(b.outcome == "liking");
    CHECK(b.item == "likeability");
    CHECK(b.participant == a.participant);
    CHECK(b.time == a.time);
    CHECK(b.value == a.value);
  }
}

TEST_CASE("pool_items: mixed scales rejected") {
  const char* obs =
      "participant_id,time,outcome,value\n"
      "p1,1,likeability,10\n"
      "p1,0,goodbye,1\n";
  auto table = ingest_strings(obs, kAssignments, demo_registry());
  CHECK_THROWS_WITH_AS(pool_items(table, "broken", {"likeability", "goodbye"}),
                       doctest::Contains("MixedScales"), TrialError);
}

TEST_CASE("attrition_table counts completers per arm") {
  const char* pre =
      "participant_id,time,outcome,value\n"
      "p1,1,likeability,10\n"
      "p2,1,likeability,20\n"
      "p3,1,likeability,30\n";
  auto pre_table = ingest_strings(pre, kAssignments, demo_registry());

  SUBCASE("identical tables: no attrition") {
    auto t = attrition_table(pre_table, pre_table, ArmFactor::Domain);
    for (long c : t.non_completers) CHECK(c == 0);
    long total = 0;
    for (long c : t.completers) total += c;
    CHECK(total == 3);
  }
  SUBCASE("one participant missing post") {
    const char* post =
        "participant_id,time,outcome,value\n"
        "p1,9,likeability,10\n"
        "p3,9,likeability,30\n";
    auto post_table = ingest_strings(post, kAssignments, demo_registry());
    auto t = attrition_table(pre_table, post_table, ArmFactor::Personalised);
    // p2 (personalised=false) dropped
    REQUIRE(t.level_names == std::vector<std::string>{"false", "true"});
    CHECK(t.non_completers[0] == 1);
    CHECK(t.non_completers[1] == 0);
    CHECK(t.completers[0] == 1);  // p3
    CHECK(t.completers[1] == 1);  // p1
    auto cell = t.as_2x2(0);
    CHECK(cell[0][0] == 1);
    CHECK(cell[1][0] == 1);
  }
  SUBCASE("lambda arm gives a 2x5 shape") {
    auto t = attrition_table(pre_table, pre_table, ArmFactor::Lambda);
    CHECK(t.level_names.size() == 5);
    CHECK(t.completers.size() == 5);
    CHECK(t.non_completers.size() == 5);
  }
}
