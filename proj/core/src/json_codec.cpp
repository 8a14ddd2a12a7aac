#include "json_codec.hpp"

#include <stdexcept>

namespace surgbench::codec {

namespace {

json box_to_json(const BoundingBox& b) {
  json j;
  j["x1"] = b.x1;
  j["y1"] = b.y1;
  j["x2"] = b.x2;
  j["y2"] = b.y2;
  if (b.label) j["label"] = *b.label;
  return j;
}

BoundingBox box_from_json(const json& j) {
  BoundingBox b;
  b.x1 = j.at("x1").get<double>();
  b.y1 = j.at("y1").get<double>();
  b.x2 = j.at("x2").get<double>();
  b.y2 = j.at("y2").get<double>();
  if (j.contains("label")) b.label = j.at("label").get<std::string>();
  return b;
}

}  // namespace

json to_json(const Label& label) {
  json j;
  struct Visitor {
    json& j;
    void operator()(const ClassLabel& c) {
      j["type"] = "class";
      j["value"] = c.value;
    }
    void operator()(const BoxSet& s) {
      j["type"] = "boxes";
      json arr = json::array();
      for (const auto& b : s.boxes) arr.push_back(box_to_json(b));
      j["boxes"] = std::move(arr);
    }
    void operator()(GridCell c) {
      j["type"] = "grid";
      j["cell"] = std::string(to_string(c));
    }
    void operator()(const Triplet& t) {
      j["type"] = "triplet";
      j["instrument"] = t.instrument;
      j["verb"] = t.verb;
      j["target"] = t.target;
    }
    void operator()(const CvsVector& v) {
      j["type"] = "cvs";
      j["c1"] = v.cystic_plate;
      j["c2"] = v.lower_third;
      j["c3"] = v.two_structures;
    }
  };
  std::visit(Visitor{j}, label);
  return j;
}

Label label_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "class") {
    return ClassLabel{j.at("value").get<std::string>()};
  }
  if (type == "boxes") {
    BoxSet s;
    for (const auto& bj : j.at("boxes")) s.boxes.push_back(box_from_json(bj));
    return s;
  }
  if (type == "grid") {
    const auto cell = grid_cell_from_string(j.at("cell").get<std::string>());
    if (!cell) throw std::runtime_error("unknown grid cell");
    return *cell;
  }
  if (type == "triplet") {
    return Triplet{j.at("instrument").get<std::string>(), j.at("verb").get<std::string>(),
                   j.at("target").get<std::string>()};
  }
  if (type == "cvs") {
    CvsVector v;
    v.cystic_plate = j.at("c1").get<bool>();
    v.lower_third = j.at("c2").get<bool>();
    v.two_structures = j.at("c3").get<bool>();
    return v;
  }
  throw std::runtime_error("unknown label type: " + type);
}

json to_json(const SampleRecord& r) {
  json j;
  j["sample_id"] = r.sample_id;
  j["image_ref"] = r.image_ref;
  j["surgery_type"] = r.surgery_type;
  j["dataset_id"] = r.dataset_id;
  if (r.image_extent) {
    j["image_extent"] = json::array({(*r.image_extent)[0], (*r.image_extent)[1]});
  }
  json labels = json::object();
  for (const auto& [kind, ann] : r.labels) {
    json a;
    a["label"] = to_json(ann.label);
    a["answer_text"] = ann.answer_text;
    a["keyword"] = ann.keyword;
    labels[std::string(to_string(kind))] = std::move(a);
  }
  j["labels"] = std::move(labels);
  if (!r.statements.empty()) {
    json arr = json::array();
    for (const auto& s : r.statements) {
      json sj;
      sj["a"] = std::string(to_string(s.a));
      sj["b"] = std::string(to_string(s.b));
      sj["text"] = s.text;
      arr.push_back(std::move(sj));
    }
    j["statements"] = std::move(arr);
  }
  return j;
}

SampleRecord record_from_json(const json& j) {
  SampleRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.image_ref = j.value("image_ref", std::string{});
  r.surgery_type = j.value("surgery_type", std::string{});
  r.dataset_id = j.value("dataset_id", std::string{});
  if (j.contains("image_extent")) {
    const auto& e = j.at("image_extent");
    r.image_extent = std::array<int, 2>{e.at(0).get<int>(), e.at(1).get<int>()};
  }
  for (const auto& [key, value] : j.at("labels").items()) {
    const auto kind = task_kind_from_string(key);
    if (!kind) throw std::runtime_error("unknown task kind: " + key);
    TaskAnnotation ann;
    ann.label = label_from_json(value.at("label"));
    ann.answer_text = value.value("answer_text", std::string{});
    ann.keyword = value.value("keyword", std::string{});
    r.labels.emplace(*kind, std::move(ann));
  }
  if (j.contains("statements")) {
    for (const auto& sj : j.at("statements")) {
      CombinedStatement s;
      const auto a = task_kind_from_string(sj.at("a").get<std::string>());
      const auto b = task_kind_from_string(sj.at("b").get<std::string>());
      if (!a || !b) throw std::runtime_error("unknown task kind in statement");
      s.a = *a;
      s.b = *b;
      s.text = sj.at("text").get<std::string>();
      r.statements.push_back(std::move(s));
    }
  }
  return r;
}

json to_json(const Conversation& c) {
  json j;
  j["conversation_id"] = c.conversation_id;
  j["sample_id"] = c.sample_id;
  j["protocol"] = std::string(to_string(c.protocol));
  json turns = json::array();
  for (const auto& t : c.turns) {
    json tj;
    tj["prompt"] = t.prompt;
    tj["answer"] = t.answer;
    tj["keywords"] = t.keywords;
    tj["task"] = std::string(to_string(t.task));
    if (!t.options.empty()) {
      tj["options"] = t.options;
      tj["correct_option"] = t.correct_option;
    }
    turns.push_back(std::move(tj));
  }
  j["turns"] = std::move(turns);
  return j;
}

Conversation conversation_from_json(const json& j) {
  Conversation c;
  c.conversation_id = j.at("conversation_id").get<std::string>();
  c.sample_id = j.value("sample_id", std::string{});
  const auto proto = protocol_from_string(j.at("protocol").get<std::string>());
  if (!proto) throw std::runtime_error("unknown protocol");
  c.protocol = *proto;
  for (const auto& tj : j.at("turns")) {
    Turn t;
    t.prompt = tj.at("prompt").get<std::string>();
    t.answer = tj.at("answer").get<std::string>();
    t.keywords = tj.value("keywords", std::vector<std::string>{});
    const auto kind = task_kind_from_string(tj.at("task").get<std::string>());
    if (!kind) throw std::runtime_error("unknown task kind in turn");
    t.task = *kind;
    if (tj.contains("options")) {
      t.options = tj.at("options").get<std::vector<std::string>>();
      t.correct_option = tj.value("correct_option", -1);
    }
    c.turns.push_back(std::move(t));
  }
  return c;
}

json to_json(const PredictionRecord& p) {
  json j;
  j["conversation_id"] = p.conversation_id;
  j["turn_index"] = p.turn_index;
  j["response"] = p.response;
  j["status"] = std::string(to_string(p.status));
  if (p.parsed) j["parsed"] = to_json(*p.parsed);
  if (p.retries > 0) j["retries"] = p.retries;
  return j;
}

PredictionRecord prediction_from_json(const json& j) {
  PredictionRecord p;
  p.conversation_id = j.at("conversation_id").get<std::string>();
  p.turn_index = j.value("turn_index", 0);
  p.response = j.value("response", std::string{});
  if (j.contains("status")) {
    const auto s = parse_status_from_string(j.at("status").get<std::string>());
    if (!s) throw std::runtime_error("unknown parse status");
    p.status = *s;
  }
  if (j.contains("parsed")) p.parsed = label_from_json(j.at("parsed"));
  p.retries = j.value("retries", 0);
  return p;
}

json to_json(const CorpusMetadata& m) {
  json j;
  j["schema_version"] = m.schema_version;
  j["dataset_id"] = m.dataset_id;
  j["created_at"] = m.created_at;
  return j;
}

CorpusMetadata metadata_from_json(const json& j) {
  CorpusMetadata m;
  m.schema_version = j.at("schema_version").get<std::string>();
  m.dataset_id = j.value("dataset_id", std::string{});
  m.created_at = j.value("created_at", std::string{});
  return m;
}

}  // namespace surgbench::codec
