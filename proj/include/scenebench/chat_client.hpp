#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scenebench::genpipe {

enum class ChatMode { live, replay, record };

ChatMode chat_mode_from_string(const std::string& s);
std::string to_string(ChatMode mode);

struct ChatConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key;
  ChatMode mode = ChatMode::replay;
  std::filesystem::path fixture_dir = "fixtures/llm";
  std::string pipeline = "scene";
  std::string case_name = "default";
  double temperature = 0.7;
  int max_retries = 3;  // transport-level retries on 429/5xx
};

// Fills endpoint/model/api_key from LLM_ENDPOINT, LLM_MODEL, LLM_API_KEY
// when those variables are set.
ChatConfig config_from_env(ChatConfig base = {});

struct ChatMessage {
  std::string role;
  std::string content;
};

class ChatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Maps a serialized request body to a serialized response body. Injectable
// for tests and fixture recording; defaults to HTTPS POST.
using Transport = std::function<std::string(const std::string&)>;

class ChatClient {
 public:
  explicit ChatClient(ChatConfig config, Transport transport = {});

  // Returns the assistant message content. Honors the configured mode:
  // replay reads <fixture_dir>/<pipeline>/<case>/<sha256-of-request>.json
  // and never touches the network; record performs the call and writes that
  // file; live performs the call only.
  std::string complete(const std::vector<ChatMessage>& messages);
  std::string complete(const std::vector<ChatMessage>& messages,
                       double temperature);

  // (request body, response body) pairs in call order.
  std::vector<std::pair<std::string, std::string>> transcript() const;

  const ChatConfig& config() const { return config_; }
  void set_case(const std::string& pipeline, const std::string& case_name);

  static std::string canonical_request(
      const std::string& model, double temperature,
      const std::vector<ChatMessage>& messages);
  static std::string sha256_hex(const std::string& data);
  static std::string extract_content(const std::string& response_body);

 private:
  std::string perform(const std::string& request_body);
  std::filesystem::path fixture_path(const std::string& key) const;

  ChatConfig config_;
  Transport transport_;
  mutable std::mutex mutex_;
  std::vector<std::pair<std::string, std::string>> transcript_;
  std::counting_semaphore<16> in_flight_{4};
};

}  // namespace scenebench::genpipe
