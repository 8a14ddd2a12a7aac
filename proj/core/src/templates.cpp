#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "surgbench/pipeline.hpp"
#include "surgbench/strings.hpp"

namespace surgbench {

namespace {

std::vector<std::vector<std::string>> read_tsv(const std::string& path, std::size_t min_cols) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() < min_cols) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected at least " +
                               std::to_string(min_cols) + " tab-separated columns");
    }
    for (auto& c : cols) c = trim(c);
    rows.push_back(std::move(cols));
  }
  return rows;
}

TaskKind parse_task(const std::string& s, const std::string& where) {
  const auto k = task_kind_from_string(s);
  if (!k) throw std::runtime_error(where + ": unknown task kind \"" + s + "\"");
  return *k;
}

std::size_t count_occurrences(std::string_view text, std::string_view slot) {
  std::size_t n = 0, pos = 0;
  while ((pos = text.find(slot, pos)) != std::string_view::npos) {
    ++n;
    pos += slot.size();
  }
  return n;
}

}  // namespace

std::vector<CorrelationRule> CorrelationRule::load(const std::string& path) {
  std::vector<CorrelationRule> rules;
  for (const auto& cols : read_tsv(path, 3)) {
    CorrelationRule r;
    r.a = parse_task(cols[0], path);
    r.b = parse_task(cols[1], path);
    r.statement_template = cols[2];
    if (r.a == r.b) {
      throw std::runtime_error(path + ": correlation rule needs two distinct task kinds");
    }
    if (count_occurrences(r.statement_template, "{a}") != 1 ||
        count_occurrences(r.statement_template, "{b}") != 1) {
      throw std::runtime_error(path + ": template must reference {a} and {b} exactly once each: " +
                               r.statement_template);
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

std::vector<ExplanationTemplate> ExplanationTemplate::load(const std::string& path) {
  std::vector<ExplanationTemplate> out;
  for (const auto& cols : read_tsv(path, 3)) {
    ExplanationTemplate t;
    t.task = parse_task(cols[0], path);
    t.label_value = cols[1];
    t.clause = cols[2];
    if (t.clause.empty()) throw std::runtime_error(path + ": empty explanation clause");
    out.push_back(std::move(t));
  }
  return out;
}

PromptTemplateSet PromptTemplateSet::load(const std::string& path) {
  PromptTemplateSet set;
  for (const auto& cols : read_tsv(path, 3)) {
    const TaskKind task = parse_task(cols[0], path);
    if (cols[1] == "q") {
      set.questions[task].push_back(cols[2]);
    } else if (cols[1] == "a") {
      set.answers[task].push_back(cols[2]);
    } else {
      throw std::runtime_error(path + ": template kind must be q or a, got \"" + cols[1] + "\"");
    }
  }
  set.validate(false);
  return set;
}

void PromptTemplateSet::validate(bool enforce_count_bounds) const {
  for (const auto& [task, qs] : questions) {
    if (qs.empty()) {
      throw std::runtime_error(std::string("template set: no question templates for ") +
                               std::string(to_string(task)));
    }
    if (enforce_count_bounds && (qs.size() < 100 || qs.size() > 200)) {
      throw std::runtime_error(std::string("template set: ") + std::string(to_string(task)) +
                               " has " + std::to_string(qs.size()) +
                               " question templates, expected 100-200");
    }
    const auto it = answers.find(task);
    if (it == answers.end() || it->second.empty()) {
      throw std::runtime_error(std::string("template set: no answer templates for ") +
                               std::string(to_string(task)));
    }
    for (const auto& a : it->second) {
      if (!contains(a, "{answer}")) {
        throw std::runtime_error("template set: answer template must embed {answer}: " + a);
      }
    }
  }
}

VocabTables VocabTables::load_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  VocabTables tables;
  auto read_lines = [](const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      if (!t.empty() && t[0] != '#') out.push_back(t);
    }
    return out;
  };
  for (const TaskKind task : all_task_kinds()) {
    const fs::path p = fs::path(dir) / (std::string(to_string(task)) + ".txt");
    if (fs::exists(p)) tables.classes[task] = read_lines(p);
  }
  const fs::path ti = fs::path(dir) / "triplet_instruments.txt";
  const fs::path tv = fs::path(dir) / "triplet_verbs.txt";
  const fs::path tt = fs::path(dir) / "triplet_targets.txt";
  if (fs::exists(ti) && fs::exists(tv) && fs::exists(tt)) {
    TripletVocab vocab;
    vocab.instruments = read_lines(ti);
    vocab.verbs = read_lines(tv);
    vocab.targets = read_lines(tt);
    tables.triplet = std::move(vocab);
  }
  return tables;
}

}  // namespace surgbench
