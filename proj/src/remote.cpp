#include "crsim/remote.hpp"

#include <httplib.h>

#include <json.hpp>
#include <utility>

namespace crsim {

using nlohmann::json;

namespace {

std::string join_options(const Query& query) {
  std::string out;
  for (const auto& o : query.options) out += (out.empty() ? "" : ", ") + o;
  return out.empty() ? "(open answer)" : out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string fill_template(std::string templ, const std::vector<std::pair<std::string, std::string>>& values) {
  for (const auto& [key, value] : values) {
    const std::string token = "{" + key + "}";
    for (auto pos = templ.find(token); pos != std::string::npos; pos = templ.find(token, pos + value.size()))
      templ.replace(pos, token.size(), value);
  }
  return templ;
}

ChatClient::ChatClient(EndpointDescriptor endpoint) : endpoint_(std::move(endpoint)) {
  const std::string prefix = "http://";
  const auto& url = endpoint_.url;
  if (url.rfind(prefix, 0) != 0) throw Error(Errc::invalid_field, "endpoint.url", "only http:// urls are supported");
  auto rest = url.substr(prefix.size());
  const auto slash = rest.find('/');
  const std::string authority = rest.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
  const auto colon = authority.rfind(':');
  host_ = authority.substr(0, colon);
  if (colon != std::string::npos) {
    try {
      port_ = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(Errc::invalid_field, "endpoint.url", "bad port in '" + url + "'");
    }
  }
  if (host_.empty()) throw Error(Errc::invalid_field, "endpoint.url", "missing host in '" + url + "'");
  if (endpoint_.timeout_ms <= 0) throw Error(Errc::invalid_field, "endpoint.timeout_ms", "must be positive");
  if (endpoint_.retries < 0) throw Error(Errc::invalid_field, "endpoint.retries", "must be nonnegative");
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) const {
  json body{{"model", endpoint_.model}, {"messages", json::array()}};
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Client client(host_, port_);
  const auto timeout = std::chrono::milliseconds(endpoint_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw Error(Errc::endpoint_unreachable, endpoint_.url, "http status " + std::to_string(res->status));

    const auto reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw Error(Errc::malformed_response, endpoint_.url, "response is not JSON");
    // OpenAI-style {choices:[{message:{content}}]} or a bare {content}.
    if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
      const auto& choice = reply["choices"][0];
      if (choice.contains("message") && choice["message"].contains("content") &&
          choice["message"]["content"].is_string())
        return choice["message"]["content"].get<std::string>();
    }
    if (reply.contains("content") && reply["content"].is_string()) return reply["content"].get<std::string>();
    throw Error(Errc::malformed_response, endpoint_.url, "no completion text in response");
  }
  throw Error(Errc::endpoint_unreachable, endpoint_.url, last_error);
}

namespace {

class RemoteAgent final : public Agent {
 public:
  RemoteAgent(AgentId id, EndpointDescriptor endpoint) : Agent(std::move(id)), client_(std::move(endpoint)) {}

  AgentOutput respond(const Query& query, Rng&) override {
    current_ = query;
    const auto& ep = client_.endpoint();
    const auto prompt = fill_template(ep.prompt_template, {{"prompt", query.prompt}, {"options", join_options(query)}});
    return AgentOutput(id(), trim(client_.complete({{"user", prompt}})));
  }

  AgentOutput revise(const AgentOutput& own, std::span<const NeighborMessage> inbox, Rng&) override {
    check_owner(own);
    const std::size_t phase = own.revisions().back().phase + 1;
    if (!current_) return own.revised(phase, own.answer());
    std::string neighbors;
    for (const auto& m : inbox) neighbors += (neighbors.empty() ? "" : "; ") + m.sender.label + ": " + m.content;
    if (neighbors.empty()) neighbors = "(none)";
    const auto& ep = client_.endpoint();
    const auto prompt = fill_template(ep.revise_template, {{"prompt", current_->prompt},
                                                           {"options", join_options(*current_)},
                                                           {"answer", own.answer()},
                                                           {"neighbors", neighbors}});
    return own.revised(phase, trim(client_.complete({{"user", prompt}})));
  }

  std::string describe() const override { return "remote"; }

 private:
  ChatClient client_;
  std::optional<Query> current_;
};

}  // namespace

std::unique_ptr<Agent> make_remote_agent(AgentId id, EndpointDescriptor endpoint) {
  return std::make_unique<RemoteAgent>(std::move(id), std::move(endpoint));
}

}  // namespace crsim
