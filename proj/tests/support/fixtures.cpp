#include "fixtures.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>

#include <unistd.h>

namespace surgbench::testsupport {

namespace fs = std::filesystem;

fs::path data_dir() { return fs::path(SURGBENCH_DATA_DIR); }

VocabTables load_default_vocab() {
  return VocabTables::load_dir((data_dir() / "vocab").string());
}

namespace {

SampleRecord base_record(const std::string& dataset, std::size_t i, const std::string& surgery) {
  SampleRecord r;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu", i);
  r.sample_id = dataset + "-" + buf;
  r.image_ref = "frames/" + dataset + "/" + buf + ".png";
  r.surgery_type = surgery;
  r.dataset_id = dataset;
  return r;
}

void set_class(SampleRecord& r, TaskKind task, const std::string& value) {
  TaskAnnotation ann;
  ann.label = ClassLabel{value};
  ann.answer_text = value;
  ann.keyword = value;
  r.labels[task] = std::move(ann);
}

const std::vector<std::string>& vocab_for(TaskKind task) {
  static const VocabTables kVocab = load_default_vocab();
  return kVocab.classes.at(task);
}

const TripletVocab& triplet_vocab() {
  static const VocabTables kVocab = load_default_vocab();
  return *kVocab.triplet;
}

}  // namespace

std::vector<SampleRecord> make_phase_records(std::size_t n) {
  const auto& phases = vocab_for(TaskKind::PhaseRecognition);
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = base_record("cholec80", i, "cholecystectomy");
    set_class(r, TaskKind::PhaseRecognition, phases[i % phases.size()]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SampleRecord> make_action_records(std::size_t n) {
  const auto& actions = vocab_for(TaskKind::ActionRecognition);
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = base_record("sar_rarp", i, "prostatectomy");
    set_class(r, TaskKind::ActionRecognition, actions[i % actions.size()]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SampleRecord> make_triplet_records(std::size_t n) {
  const auto& vocab = triplet_vocab();
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = base_record("cholect50", i, "cholecystectomy");
    Triplet t;
    t.instrument = vocab.instruments[i % vocab.instruments.size()];
    t.verb = vocab.verbs[(i * 3) % vocab.verbs.size()];
    t.target = vocab.targets[(i * 5) % vocab.targets.size()];
    TaskAnnotation ann;
    ann.answer_text = render_label(Label{t});
    ann.keyword = ann.answer_text;
    ann.label = std::move(t);
    r.labels[TaskKind::TripletRecognition] = std::move(ann);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SampleRecord> make_box_records(std::size_t n) {
  static const std::vector<std::string> kInstruments = {
      "bipolar forceps", "prograsp forceps", "large needle driver", "vessel sealer",
      "grasping retractor", "monopolar curved scissors", "ultrasound probe"};
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = base_record("endovis2017", i, "nephrectomy");
    r.image_extent = std::array<int, 2>{1280, 1024};
    BoundingBox b;
    b.x1 = 40.0 + 70.0 * static_cast<double>(i % 5);
    b.y1 = 60.0 + 50.0 * static_cast<double>(i % 4);
    b.x2 = b.x1 + 160.0 + 10.0 * static_cast<double>(i % 3);
    b.y2 = b.y1 + 120.0 + 14.0 * static_cast<double>(i % 4);
    b.label = kInstruments[i % kInstruments.size()];
    TaskAnnotation ann;
    ann.label = BoxSet{{b}};
    ann.answer_text = render_label(ann.label);
    ann.keyword = ann.answer_text;
    r.labels[TaskKind::InstrumentLocalizationBox] = std::move(ann);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SampleRecord> make_vqa_records(std::size_t n) {
  const auto& instruments = vocab_for(TaskKind::InstrumentRecognition);
  const auto& tissues = vocab_for(TaskKind::TissueRecognition);
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = base_record("endovis2018_vqa", i, "nephrectomy");
    const bool instrument = i % 2 == 0;
    const auto& vocab = instrument ? instruments : tissues;
    const std::string& cls = vocab[(i / 2) % vocab.size()];
    TaskAnnotation ann;
    ann.label = ClassLabel{cls};
    ann.keyword = cls;
    ann.answer_text = "the " + cls + " is visible in this frame";
    r.labels[instrument ? TaskKind::InstrumentRecognition : TaskKind::TissueRecognition] =
        std::move(ann);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SampleRecord> make_cvs_records(std::size_t n) {
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = base_record("endoscape2023_cvs", i, "cholecystectomy");
    CvsVector v;
    v.cystic_plate = i & 1;
    v.lower_third = i & 2;
    v.two_structures = i & 4;
    TaskAnnotation ann;
    ann.answer_text = render_label(Label{v});
    ann.keyword = ann.answer_text;
    ann.label = v;
    r.labels[TaskKind::CvsAssessment] = std::move(ann);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SampleRecord> make_multitask_records(std::size_t n) {
  const auto& phases = vocab_for(TaskKind::PhaseRecognition);
  const auto& steps = vocab_for(TaskKind::StepRecognition);
  const auto& instruments = vocab_for(TaskKind::InstrumentRecognition);
  const auto& actions = vocab_for(TaskKind::ActionRecognition);
  const auto& grid = vocab_for(TaskKind::InstrumentLocalizationGrid);
  const auto& vocab = triplet_vocab();
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = base_record("multitask", i, i % 2 ? "cholecystectomy" : "prostatectomy");
    set_class(r, TaskKind::PhaseRecognition, phases[i % phases.size()]);
    set_class(r, TaskKind::StepRecognition, steps[i % steps.size()]);
    set_class(r, TaskKind::InstrumentRecognition, instruments[i % instruments.size()]);
    set_class(r, TaskKind::ActionRecognition, actions[i % actions.size()]);
    {
      const auto cell = grid_cell_from_string(grid[i % grid.size()]);
      TaskAnnotation ann;
      ann.label = *cell;
      ann.answer_text = render_label(ann.label);
      ann.keyword = ann.answer_text;
      r.labels[TaskKind::InstrumentLocalizationGrid] = std::move(ann);
    }
    {
      Triplet t;
      t.instrument = vocab.instruments[i % vocab.instruments.size()];
      t.verb = vocab.verbs[(i * 7) % vocab.verbs.size()];
      t.target = vocab.targets[(i * 11) % vocab.targets.size()];
      TaskAnnotation ann;
      ann.answer_text = render_label(Label{t});
      ann.keyword = ann.answer_text;
      ann.label = std::move(t);
      r.labels[TaskKind::TripletRecognition] = std::move(ann);
    }
    if (i % 3 == 0) {
      CvsVector v;
      v.cystic_plate = i & 1;
      v.lower_third = i & 2;
      v.two_structures = i & 4;
      TaskAnnotation ann;
      ann.answer_text = render_label(Label{v});
      ann.keyword = ann.answer_text;
      ann.label = v;
      r.labels[TaskKind::CvsAssessment] = std::move(ann);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string write_benchmark_fixture(const fs::path& dir, std::size_t per_dataset,
                                    std::uint64_t suite_seed, std::size_t budget) {
  fs::create_directories(dir);
  const auto write = [&](const std::string& name, const std::vector<SampleRecord>& records) {
    CorpusMetadata meta;
    meta.dataset_id = name;
    write_corpus(records, (dir / (name + ".jsonl")).string(), meta);
  };
  write("cholec80", make_phase_records(per_dataset));
  write("sar_rarp", make_action_records(per_dataset));
  write("cholect50", make_triplet_records(per_dataset));
  write("endovis2017", make_box_records(per_dataset));
  write("endovis2018_vqa", make_vqa_records(per_dataset));
  write("endoscape2023_cvs", make_cvs_records(per_dataset));

  const fs::path suite_path = dir / "suite.toml";
  std::ofstream out(suite_path);
  out << "[suite]\n"
      << "budget = " << budget << "\n"
      << "seed = " << suite_seed << "\n"
      << "vocab_dir = \"" << (data_dir() / "vocab").string() << "\"\n"
      << "refusal_patterns = \"" << (data_dir() / "refusal_patterns.txt").string() << "\"\n\n";
  const struct {
    const char* id;
    const char* task;
    const char* metric;
  } rows[] = {
      {"cholec80", "phase_recognition", "accuracy"},
      {"sar_rarp", "action_recognition", "accuracy"},
      {"cholect50", "triplet_recognition", "triplet_accuracy"},
      {"endovis2017", "instrument_localization_box", "miou"},
      {"endovis2018_vqa", "instrument_recognition,tissue_recognition", "accuracy"},
      {"endoscape2023_cvs", "cvs_assessment", "average_accuracy"},
  };
  for (const auto& row : rows) {
    out << "[dataset." << row.id << "]\n"
        << "corpus = \"" << (dir / (std::string(row.id) + ".jsonl")).string() << "\"\n"
        << "task = \"" << row.task << "\"\n"
        << "primary_metric = \"" << row.metric << "\"\n"
        << "protocols = \"ov,mcq\"\n\n";
  }
  out.flush();
  return suite_path.string();
}

fs::path unique_temp_dir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const auto dir = fs::temp_directory_path() /
                   ("surgbench_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  return dir;
}

}  // namespace surgbench::testsupport
