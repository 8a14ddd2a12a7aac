// parse: offline response-parsing debugger. Reads prediction records
// (conversation_id, turn_index, response), parses them for one task kind,
// and writes the records back with status and structured answers.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "surgbench/datamodel.hpp"
#include "surgbench/lexicon.hpp"
#include "surgbench/pipeline.hpp"
#include "surgbench/response_parser.hpp"

using namespace surgbench;

int main(int argc, char** argv) {
  CLI::App app{"parse raw model responses into structured answers"};
  std::string task_name, in_path, out_path, vocab_dir, refusals_path, lexicon_path;
  app.add_option("--task", task_name, "task kind (e.g. phase_recognition)")->required();
  app.add_option("--in", in_path, "predictions.jsonl input")->required();
  app.add_option("--out", out_path, "parsed.jsonl output")->required();
  app.add_option("--vocab-dir", vocab_dir, "vocabulary directory for class/triplet tasks");
  app.add_option("--refusals", refusals_path, "refusal pattern file");
  app.add_option("--lexicon", lexicon_path, "lexicon TSV for canonicalization");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto task = task_kind_from_string(task_name);
    if (!task) {
      std::fprintf(stderr, "error: unknown task kind \"%s\"\n", task_name.c_str());
      return 1;
    }
    ParseConfig cfg = ParseConfig::defaults();
    if (!refusals_path.empty()) cfg.refusal_patterns = ParseConfig::load_patterns(refusals_path);
    Lexicon lexicon;
    if (!lexicon_path.empty()) {
      lexicon = Lexicon::load(lexicon_path);
      cfg.lexicon = &lexicon;
    }
    VocabTables vocab;
    if (!vocab_dir.empty()) vocab = VocabTables::load_dir(vocab_dir);

    auto records = read_predictions(in_path);
    std::size_t parsed_n = 0, failed_n = 0, refused_n = 0;
    for (auto& rec : records) {
      if (is_refusal(rec.response, cfg)) {
        rec.status = ParseStatus::Refused;
        rec.parsed.reset();
        ++refused_n;
        continue;
      }
      rec.parsed.reset();
      switch (*task) {
        case TaskKind::InstrumentLocalizationBox: {
          const auto r = parse_bboxes(rec.response, cfg);
          if (!r.boxes.empty()) rec.parsed = BoxSet{r.boxes};
          break;
        }
        case TaskKind::TripletRecognition: {
          if (!vocab.triplet) {
            std::fprintf(stderr, "error: --vocab-dir with triplet vocabularies required\n");
            return 1;
          }
          const auto r = parse_triplet(rec.response, *vocab.triplet, cfg);
          if (r.triplet) rec.parsed = *r.triplet;
          break;
        }
        case TaskKind::CvsAssessment: {
          const auto r = parse_cvs(rec.response, cfg);
          if (r.cvs) rec.parsed = *r.cvs;
          break;
        }
        case TaskKind::InstrumentLocalizationGrid:
        case TaskKind::TissueLocalization: {
          const auto cell = parse_grid_cell(rec.response, cfg);
          if (cell) rec.parsed = *cell;
          break;
        }
        default: {
          const auto it = vocab.classes.find(*task);
          if (it == vocab.classes.end()) {
            std::fprintf(stderr, "error: --vocab-dir with a %s vocabulary required\n",
                         std::string(to_string(*task)).c_str());
            return 1;
          }
          const auto member = match_vocab(rec.response, it->second, cfg);
          if (member) rec.parsed = ClassLabel{*member};
          break;
        }
      }
      rec.status = rec.parsed ? ParseStatus::Parsed : ParseStatus::ParseFailed;
      rec.parsed ? ++parsed_n : ++failed_n;
    }
    write_predictions(records, out_path);
    std::fprintf(stderr, "%zu records: %zu parsed, %zu failed, %zu refused\n", records.size(),
                 parsed_n, failed_n, refused_n);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
