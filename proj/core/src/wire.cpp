#include <chrono>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "surgbench/harness.hpp"
#include "surgbench/strings.hpp"

namespace surgbench {

void ModelEndpoint::validate() const {
  if (timeout_s <= 0) throw std::invalid_argument("endpoint: timeout must be positive");
  if (max_retries < 0) throw std::invalid_argument("endpoint: retries must be >= 0");
  if (max_inflight < 1) throw std::invalid_argument("endpoint: max_inflight must be >= 1");
}

namespace {

class HttplibTransport : public Transport {
 public:
  explicit HttplibTransport(std::string base_uri) : base_uri_(std::move(base_uri)) {}

  TransportReply post(const std::string& path, const std::string& body,
                      const std::vector<std::pair<std::string, std::string>>& headers,
                      double timeout_s) override {
    std::lock_guard<std::mutex> lock(mutex_);
    httplib::Client client(base_uri_);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<int>(timeout_s * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(static_cast<int>(timeout_s * 1000)));
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    const auto res = client.Post(path, h, body, "application/json");
    TransportReply reply;
    if (!res) {
      reply.status = 0;
      reply.error = httplib::to_string(res.error());
      return reply;
    }
    reply.status = res->status;
    reply.body = res->body;
    return reply;
  }

 private:
  std::string base_uri_;
  std::mutex mutex_;
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(const std::string& base_uri) {
  return std::make_unique<HttplibTransport>(base_uri);
}

TransportReply ScriptedTransport::post(const std::string& path, const std::string& body,
                                       const std::vector<std::pair<std::string, std::string>>& headers,
                                       double timeout_s) {
  (void)path;
  (void)timeout_s;
  bodies_.push_back(body);
  headers_.push_back(headers);
  if (replies_.empty()) return {0, "", "scripted transport has no replies"};
  const std::size_t i = std::min(next_, replies_.size() - 1);
  ++next_;
  return replies_[i];
}

void MockWireTransport::register_conversation(const Conversation& conversation) {
  conversations_[conversation.conversation_id] = conversation;
}

TransportReply MockWireTransport::post(const std::string& path, const std::string& body,
                                       const std::vector<std::pair<std::string, std::string>>& headers,
                                       double timeout_s) {
  (void)path;
  (void)headers;
  (void)timeout_s;
  TransportReply reply;
  try {
    const auto request = nlohmann::json::parse(body);
    const std::string id = request.at("conversation_id").get<std::string>();
    const int turn = request.value("turn_index", 0);
    const auto it = conversations_.find(id);
    if (it == conversations_.end()) {
      reply.status = 404;
      reply.body = "unknown conversation " + id;
      return reply;
    }
    nlohmann::json out;
    out["text"] = model_.generate(it->second, turn);
    reply.status = 200;
    reply.body = out.dump();
  } catch (const std::exception& e) {
    reply.status = 400;
    reply.body = e.what();
  }
  return reply;
}

std::string build_wire_request(const ModelEndpoint& endpoint, const Conversation& conversation,
                               int turn_index, std::span<const std::string> prior_responses,
                               const ImageProvider& images) {
  nlohmann::json j;
  j["model"] = endpoint.model_id;
  j["conversation_id"] = conversation.conversation_id;
  j["turn_index"] = turn_index;
  j["sample_id"] = conversation.sample_id;

  nlohmann::json messages = nlohmann::json::array();
  for (int i = 0; i <= turn_index; ++i) {
    const auto& turn = conversation.turns.at(static_cast<std::size_t>(i));
    nlohmann::json content = nlohmann::json::array();
    if (i == 0 && images) {
      // The frame rides on the first user message.
      if (const auto bytes = images(conversation.sample_id)) {
        content.push_back({{"type", "image"}, {"b64", *bytes}});
      }
    }
    content.push_back({{"type", "text"}, {"text", turn.prompt}});
    messages.push_back({{"role", "user"}, {"content", std::move(content)}});
    if (i < turn_index) {
      // Prior turns go out as context, in order.
      const std::string& prior = static_cast<std::size_t>(i) < prior_responses.size()
                                     ? prior_responses[static_cast<std::size_t>(i)]
                                     : turn.answer;
      messages.push_back({{"role", "assistant"},
                          {"content", nlohmann::json::array({{{"type", "text"}, {"text", prior}}})}});
    }
  }
  j["messages"] = std::move(messages);
  j["params"] = {{"temperature", endpoint.temperature},
                 {"top_p", endpoint.top_p},
                 {"top_k", endpoint.top_k},
                 {"max_tokens", endpoint.max_tokens}};
  return j.dump();
}

PredictionRecord query_model(const ModelEndpoint& endpoint, Transport& transport,
                             const Conversation& conversation, int turn_index,
                             std::span<const std::string> prior_responses,
                             const ImageProvider& images, const ParseConfig& parse_config) {
  endpoint.validate();
  PredictionRecord record;
  record.conversation_id = conversation.conversation_id;
  record.turn_index = turn_index;

  const std::string body =
      build_wire_request(endpoint, conversation, turn_index, prior_responses, images);
  std::vector<std::pair<std::string, std::string>> headers;
  if (!endpoint.token_env.empty()) {
    if (const char* token = std::getenv(endpoint.token_env.c_str())) {
      headers.emplace_back("Authorization", std::string("Bearer ") + token);
    }
  }

  for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    const auto reply = transport.post("/v1/generate", body, headers, endpoint.timeout_s);
    if (reply.ok()) {
      record.retries = attempt;
      try {
        const auto parsed = nlohmann::json::parse(reply.body);
        record.response = parsed.at("text").get<std::string>();
      } catch (const std::exception&) {
        record.response = reply.body;  // non-JSON body: keep verbatim
      }
      record.status = is_refusal(record.response, parse_config) ? ParseStatus::Refused
                                                                : ParseStatus::ParseFailed;
      return record;
    }
    if (!reply.transient()) {
      record.retries = attempt;
      record.status = ParseStatus::TransportError;
      record.response = "HTTP " + std::to_string(reply.status) + ": " + reply.body;
      return record;
    }
    if (attempt < endpoint.max_retries && endpoint.retry_base_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(endpoint.retry_base_ms * (1 << attempt)));
    }
  }
  record.retries = endpoint.max_retries;
  record.status = ParseStatus::TransportError;
  record.response = "exhausted retries";
  return record;
}

}  // namespace surgbench
