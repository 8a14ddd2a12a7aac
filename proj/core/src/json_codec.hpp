#pragma once
// Internal JSON (de)serialization for the record schemas. Kept out of the
// public headers so the vendored json library stays a private dependency.

#include <json.hpp>

#include "surgbench/datamodel.hpp"

namespace surgbench::codec {

using json = nlohmann::json;  // std::map-backed: object keys serialize sorted

json to_json(const Label& label);
Label label_from_json(const json& j);

json to_json(const SampleRecord& r);
SampleRecord record_from_json(const json& j);

json to_json(const Conversation& c);
Conversation conversation_from_json(const json& j);

json to_json(const PredictionRecord& p);
PredictionRecord prediction_from_json(const json& j);

json to_json(const CorpusMetadata& m);
CorpusMetadata metadata_from_json(const json& j);

}  // namespace surgbench::codec
