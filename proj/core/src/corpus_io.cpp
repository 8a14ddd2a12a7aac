#include <fstream>
#include <set>
#include <sstream>

#include "json_codec.hpp"
#include "surgbench/datamodel.hpp"
#include "surgbench/strings.hpp"

namespace surgbench {

namespace {

using codec::json;

CorpusMetadata read_metadata_line(const std::string& line, const std::string& path) {
  json j;
  try {
    j = json::parse(line);
  } catch (const std::exception& e) {
    throw CorpusError(path + ": metadata line is not valid JSON: " + e.what());
  }
  CorpusMetadata meta;
  try {
    meta = codec::metadata_from_json(j);
  } catch (const std::exception& e) {
    throw CorpusError(path + ": bad metadata record: " + e.what());
  }
  const auto parts = split(meta.schema_version, '.');
  int major = -1;
  try {
    major = std::stoi(parts.at(0));
  } catch (...) {
    throw CorpusError(path + ": unparseable schema_version \"" + meta.schema_version + "\"");
  }
  if (major != kSchemaMajor) {
    throw CorpusError(path + ": unsupported schema major version " + std::to_string(major) +
                      " (reader supports " + std::to_string(kSchemaMajor) + ")");
  }
  return meta;
}

template <typename T, typename FromJson>
void read_jsonl_body(std::istream& in, const std::string& path, FromJson&& from_json,
                     std::vector<T>& out, std::vector<std::string>& diagnostics) {
  std::string line;
  std::size_t line_no = 1;  // metadata was line 1
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(from_json(json::parse(line)));
    } catch (const std::exception& e) {
      diagnostics.push_back(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

template <typename T, typename ToJson>
std::size_t write_jsonl(std::span<const T> items, const std::string& path,
                        const CorpusMetadata& meta, ToJson&& to_json_fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError(path + ": cannot open for writing");
  out << codec::to_json(meta).dump() << "\n";
  for (const auto& item : items) {
    out << to_json_fn(item).dump() << "\n";
  }
  out.flush();
  if (!out) throw CorpusError(path + ": write failure");
  return items.size();
}

}  // namespace

CorpusReadResult read_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(path + ": cannot open");
  CorpusReadResult result;
  std::string first;
  if (!std::getline(in, first) || trim(first).empty()) {
    // Empty file: empty corpus with default metadata.
    return result;
  }
  result.meta = read_metadata_line(first, path);
  read_jsonl_body<SampleRecord>(in, path, [](const json& j) { return codec::record_from_json(j); },
                                result.records, result.diagnostics);
  // Sample ids must be unique within a corpus; duplicates are diagnostics,
  // not failures.
  std::set<std::string> seen;
  for (const auto& r : result.records) {
    if (!seen.insert(r.sample_id).second) {
      result.diagnostics.push_back(path + ": duplicate sample_id \"" + r.sample_id + "\"");
    }
  }
  return result;
}

std::size_t write_corpus(std::span<const SampleRecord> records, const std::string& path,
                         const CorpusMetadata& meta) {
  return write_jsonl(records, path, meta,
                     [](const SampleRecord& r) { return codec::to_json(r); });
}

ConversationReadResult read_conversations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(path + ": cannot open");
  ConversationReadResult result;
  std::string first;
  if (!std::getline(in, first) || trim(first).empty()) {
    return result;
  }
  result.meta = read_metadata_line(first, path);
  read_jsonl_body<Conversation>(in, path,
                                [](const json& j) { return codec::conversation_from_json(j); },
                                result.conversations, result.diagnostics);
  return result;
}

std::size_t write_conversations(std::span<const Conversation> conversations,
                                const std::string& path, const CorpusMetadata& meta) {
  return write_jsonl(conversations, path, meta,
                     [](const Conversation& c) { return codec::to_json(c); });
}

std::vector<PredictionRecord> read_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(path + ": cannot open");
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(codec::prediction_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw CorpusError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::size_t write_predictions(std::span<const PredictionRecord> predictions,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError(path + ": cannot open for writing");
  for (const auto& p : predictions) {
    out << codec::to_json(p).dump() << "\n";
  }
  out.flush();
  if (!out) throw CorpusError(path + ": write failure");
  return predictions.size();
}

}  // namespace surgbench
