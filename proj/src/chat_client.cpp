#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "scenebench/chat_client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

namespace scenebench::genpipe {

ChatMode chat_mode_from_string(const std::string& s) {
  if (s == "live") return ChatMode::live;
  if (s == "replay") return ChatMode::replay;
  if (s == "record") return ChatMode::record;
  throw std::invalid_argument("unknown llm mode \"" + s +
                              "\" (expected live, replay, or record)");
}

std::string to_string(ChatMode mode) {
  switch (mode) {
    case ChatMode::live: return "live";
    case ChatMode::replay: return "replay";
    case ChatMode::record: return "record";
  }
  return "replay";
}

ChatConfig config_from_env(ChatConfig base) {
  if (const char* v = std::getenv("LLM_ENDPOINT")) base.endpoint = v;
  if (const char* v = std::getenv("LLM_MODEL")) base.model = v;
  if (const char* v = std::getenv("LLM_API_KEY")) base.api_key = v;
  return base;
}

ChatClient::ChatClient(ChatConfig config, Transport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {}

void ChatClient::set_case(const std::string& pipeline,
                          const std::string& case_name) {
  config_.pipeline = pipeline;
  config_.case_name = case_name;
}

std::string ChatClient::canonical_request(
    const std::string& model, double temperature,
    const std::vector<ChatMessage>& messages) {
  nlohmann::json body;
  body["model"] = model;
  body["temperature"] = temperature;
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  }
  body["messages"] = std::move(msgs);
  return body.dump();
}

std::string ChatClient::sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw ChatError("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string ChatClient::extract_content(const std::string& response_body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(response_body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ChatError(std::string("malformed chat response: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() ||
      doc["choices"].empty()) {
    throw ChatError("chat response has no choices");
  }
  const auto& first = doc["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw ChatError("chat response has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

std::filesystem::path ChatClient::fixture_path(const std::string& key) const {
  return config_.fixture_dir / config_.pipeline / config_.case_name /
         (key + ".json");
}

namespace {

std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ChatError("endpoint must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string ChatClient::perform(const std::string& request_body) {
  if (transport_) return transport_(request_body);

  const auto [origin, path] = split_endpoint(config_.endpoint);
  httplib::Client client(origin);
  client.set_connection_timeout(30);
  client.set_read_timeout(120);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  int attempt = 0;
  for (;;) {
    auto res = client.Post(path, headers, request_body, "application/json");
    if (res && res->status == 200) return res->body;
    const bool retryable =
        res && (res->status == 429 || res->status >= 500);
    ++attempt;
    if (attempt > config_.max_retries || !(retryable || !res)) {
      if (!res) {
        throw ChatError("chat request failed: no response from " + origin);
      }
      throw ChatError("chat request failed with status " +
                      std::to_string(res->status) + ": " + res->body);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(250 * attempt));
  }
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) {
  return complete(messages, config_.temperature);
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages,
                                 double temperature) {
  const std::string request_body =
      canonical_request(config_.model, temperature, messages);
  const std::string key = sha256_hex(request_body);

  std::string response_body;
  if (config_.mode == ChatMode::replay) {
    const auto path = fixture_path(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw ChatError("missing replay fixture: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ChatError("corrupt replay fixture " + path.string() + ": " +
                      e.what());
    }
    if (!doc.contains("response")) {
      throw ChatError("replay fixture " + path.string() +
                      " has no response field");
    }
    response_body = doc["response"].dump();
  } else {
    in_flight_.acquire();
    try {
      response_body = perform(request_body);
    } catch (...) {
      in_flight_.release();
      throw;
    }
    in_flight_.release();

    if (config_.mode == ChatMode::record) {
      nlohmann::json doc;
      doc["request"] = nlohmann::json::parse(request_body);
      try {
        doc["response"] = nlohmann::json::parse(response_body);
      } catch (const nlohmann::json::parse_error& e) {
        throw ChatError(std::string("cannot record non-JSON response: ") +
                        e.what());
      }
      const auto path = fixture_path(key);
      std::filesystem::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary);
      if (!out) {
        throw ChatError("cannot write fixture: " + path.string());
      }
      out << doc.dump(2) << "\n";
    }
  }

  const std::string content = extract_content(response_body);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    transcript_.emplace_back(request_body, response_body);
  }
  return content;
}

std::vector<std::pair<std::string, std::string>> ChatClient::transcript()
    const {
  std::lock_guard<std::mutex> lock(mutex_);
  return transcript_;
}

}  // namespace scenebench::genpipe
