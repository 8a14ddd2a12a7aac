#include <doctest.h>

#include "fixtures.hpp"
#include "surgbench/datamodel.hpp"
#include "surgbench/lexicon.hpp"

using namespace surgbench;

TEST_CASE("task kind tier mapping is total and fixed") {
  // Exhaustive: five perception, four temporal, one reasoning, in order.
  const Tier expected[] = {Tier::Perception, Tier::Perception, Tier::Perception,
                           Tier::Perception, Tier::Perception, Tier::Temporal,
                           Tier::Temporal,   Tier::Temporal,   Tier::Temporal,
                           Tier::Reasoning};
  const auto all = all_task_kinds();
  REQUIRE(all.size() == 10);
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(tier_of(all[i]) == expected[i]);
    // Name round trip.
    CHECK(task_kind_from_string(to_string(all[i])) == all[i]);
  }
  CHECK(!task_kind_from_string("no_such_task").has_value());
}

TEST_CASE("cvs overall flag is the three-way conjunction") {
  for (int mask = 0; mask < 8; ++mask) {
    CvsVector v;
    v.cystic_plate = mask & 1;
    v.lower_third = mask & 2;
    v.two_structures = mask & 4;
    CHECK(v.overall() == (mask == 7));
  }
}

TEST_CASE("validate_record flags inverted boxes") {
  SampleRecord r = testsupport::make_box_records(1).front();
  auto& boxes = std::get<BoxSet>(r.labels.at(TaskKind::InstrumentLocalizationBox).label);
  std::swap(boxes.boxes[0].x1, boxes.boxes[0].x2);
  const auto result = validate_record(r);
  REQUIRE(!result.ok());
  bool found = false;
  for (const auto& v : result.violations) {
    if (v.message.find("box ordering") != std::string::npos) found = true;
  }
  CHECK(found);
}

TEST_CASE("validate_record passes a well-formed record") {
  const auto records = testsupport::make_multitask_records(3);
  for (const auto& r : records) {
    const auto result = validate_record(r);
    CAPTURE(r.sample_id);
    CHECK(result.ok());
  }
}

TEST_CASE("validate_record accepts lexicon-canonicalizable triplet verbs as normalized") {
  const auto lexicon = Lexicon::load((testsupport::data_dir() / "lexicon.tsv").string());
  SampleRecord r = testsupport::make_triplet_records(1).front();
  auto& t = std::get<Triplet>(r.labels.at(TaskKind::TripletRecognition).label);
  t.verb = "retracting";  // lexicon maps retracting -> retract
  r.labels.at(TaskKind::TripletRecognition).answer_text = render_label(Label{t});
  r.labels.at(TaskKind::TripletRecognition).keyword =
      r.labels.at(TaskKind::TripletRecognition).answer_text;

  ValidationContext ctx;
  ctx.lexicon = &lexicon;
  ctx.triplet_vocab = testsupport::load_default_vocab().triplet;
  t.instrument = ctx.triplet_vocab->instruments.front();
  t.target = ctx.triplet_vocab->targets.front();
  r.labels.at(TaskKind::TripletRecognition).answer_text = render_label(Label{t});
  r.labels.at(TaskKind::TripletRecognition).keyword =
      r.labels.at(TaskKind::TripletRecognition).answer_text;

  const auto result = validate_record(r, ctx);
  CHECK(result.ok());
  REQUIRE(result.normalized.size() == 1);
  CHECK(result.normalized.front().find("retracting") != std::string::npos);
  CHECK(result.normalized.front().find("retract") != std::string::npos);
}

TEST_CASE("validate_record requires at least one label and non-empty ids") {
  SampleRecord r;
  const auto result = validate_record(r);
  CHECK(result.violations.size() >= 3);  // sample_id, surgery_type, labels
}

TEST_CASE("invalid vocabulary members are violations, not exceptions") {
  SampleRecord r = testsupport::make_phase_records(1).front();
  std::get<ClassLabel>(r.labels.at(TaskKind::PhaseRecognition).label).value = "not a phase";
  r.labels.at(TaskKind::PhaseRecognition).answer_text = "not a phase";
  r.labels.at(TaskKind::PhaseRecognition).keyword = "not a phase";
  ValidationContext ctx;
  ctx.vocabularies[TaskKind::PhaseRecognition] = {"preparation", "gallbladder dissection"};
  const auto result = validate_record(r, ctx);
  CHECK(!result.ok());
}
