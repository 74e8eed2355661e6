// Chat-completion HTTP boundary: lets a real LLM occupy an agent slot or act
// as the judge. Nothing in the test or acceptance paths needs a live endpoint.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "crsim/agents.hpp"

namespace crsim {

struct EndpointDescriptor {
  std::string url;            // http://host[:port]/path
  std::string model;
  std::string api_key;        // sent as a bearer token when nonempty
  // Placeholders: {prompt} {options} for respond; additionally {answer} and
  // {neighbors} for revise.
  std::string prompt_template = "{prompt}\nOptions: {options}\nReply with the answer only.";
  std::string revise_template =
      "{prompt}\nOptions: {options}\nYour answer: {answer}\nNeighbors answered: {neighbors}\n"
      "Reply with your (possibly unchanged) answer only.";
  int timeout_ms = 30000;
  int retries = 1;            // extra attempts after the first failure
};

struct ChatMessage {
  std::string role;
  std::string content;
};

class ChatClient {
 public:
  /// Throws Error(invalid_field) when the url is not a plain http url.
  explicit ChatClient(EndpointDescriptor endpoint);

  /// POSTs {model, messages} and returns the single completion text.
  /// Throws Error(endpoint_unreachable) or Error(malformed_response).
  std::string complete(const std::vector<ChatMessage>& messages) const;

  const EndpointDescriptor& endpoint() const noexcept { return endpoint_; }

 private:
  EndpointDescriptor endpoint_;
  std::string host_;
  int port_ = 80;
  std::string path_;
};

/// Replace every `{key}` occurrence in `templ`.
std::string fill_template(std::string templ, const std::vector<std::pair<std::string, std::string>>& values);

/// An agent whose respond/revise delegate to a chat-completion endpoint.
std::unique_ptr<Agent> make_remote_agent(AgentId id, EndpointDescriptor endpoint);

}  // namespace crsim
