#include "crsim/judge.hpp"

#include <map>
#include <tuple>

namespace crsim {

using nlohmann::json;

json outputs_to_json(std::span<const AgentOutput> outputs) {
  json arr = json::array();
  for (const auto& o : outputs) {
    json revisions = json::array();
    for (const auto& r : o.revisions()) revisions.push_back({{"phase", r.phase}, {"text", r.text}});
    arr.push_back({{"agent", o.agent().index}, {"label", o.agent().label}, {"answer", o.answer()},
                   {"revisions", std::move(revisions)}});
  }
  return arr;
}

json messages_to_json(std::span<const NeighborMessage> messages) {
  json arr = json::array();
  for (const auto& m : messages)
    arr.push_back({{"sender", m.sender.index}, {"receiver", m.receiver.index}, {"content", m.content},
                   {"phase", m.phase}});
  return arr;
}

json make_coordinator_request(std::span<const AgentOutput> outputs, const CredibilityLedger& ledger,
                              const Query& query) {
  json candidates = json::array();
  for (const auto& o : outputs)
    candidates.push_back({{"agent", o.agent().index}, {"answer", o.answer()}, {"crs", ledger.crs(o.agent().index)}});
  return {{"candidates", std::move(candidates)}, {"query", query.prompt}};
}

json make_contribution_request(const Query& query, const std::string& final_answer,
                               std::span<const AgentOutput> outputs, std::span<const NeighborMessage> messages) {
  return {{"query", query.prompt},
          {"final", final_answer},
          {"outputs", outputs_to_json(outputs)},
          {"messages", messages_to_json(messages)}};
}

// ---------------------------------------------------------------------------
// Synthetic judge
// ---------------------------------------------------------------------------

json SyntheticJudge::coordinate(const json& request) {
  const auto& candidates = request.at("candidates");
  if (!candidates.is_array() || candidates.empty())
    throw Error(Errc::malformed_judge_reply, "candidates", "coordinator request has no candidates");

  // normalized answer -> (total crs, lowest agent, raw answer)
  std::map<std::string, std::tuple<double, std::size_t, std::string>> groups;
  std::size_t best_agent = 0;
  double best_crs = -1.0;
  std::string best_answer;
  for (const auto& c : candidates) {
    const auto agent = c.at("agent").get<std::size_t>();
    const auto answer = c.at("answer").get<std::string>();
    const auto crs = c.at("crs").get<double>();
    auto [it, fresh] = groups.try_emplace(normalize_answer(answer), 0.0, agent, answer);
    auto& [total, first, text] = it->second;
    total += crs;
    if (!fresh && agent < first) {
      first = agent;
      text = answer;
    }
    if (crs > best_crs || (crs == best_crs && agent < best_agent)) {
      best_crs = crs;
      best_agent = agent;
      best_answer = answer;
    }
  }

  if (groups.size() == candidates.size())
    return {{"final", best_answer}, {"rationale", "all answers distinct; highest-credibility agent"}};

  const auto* winner = &*groups.begin();
  for (const auto& g : groups) {
    const auto& [w, first, text] = g.second;
    const auto& [bw, bfirst, btext] = winner->second;
    if (w > bw || (w == bw && first < bfirst)) winner = &g;
  }
  return {{"final", std::get<2>(winner->second)}, {"rationale", "credibility-weighted vote"}};
}

json SyntheticJudge::score_contributions(const json& request) {
  const auto final_norm = normalize_answer(request.at("final").get<std::string>());
  const auto& outputs = request.at("outputs");
  const std::size_t n = outputs.size();
  std::vector<bool> matches(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    matches[i] = normalize_answer(outputs[i].at("answer").get<std::string>()) == final_norm;
    if (matches[i]) ++k;
  }
  std::vector<double> csc(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (matches[i]) csc[i] = 0.8 / static_cast<double>(k);
    else csc[i] = 0.2 / static_cast<double>(n - k);
  }
  double total = 0.0;
  for (double c : csc) total += c;
  for (std::size_t i = 0; i < n; ++i) {
    csc[i] /= total;
    if (signed_ && !matches[i]) csc[i] = -csc[i];
  }
  return {{"csc", csc}};
}

// ---------------------------------------------------------------------------
// Remote judge
// ---------------------------------------------------------------------------

json RemoteJudge::ask(const std::string& instruction, const json& request) {
  std::string text;
  try {
    text = client_.complete({{"system", instruction}, {"user", request.dump()}});
  } catch (const Error& e) {
    if (e.code() == Errc::malformed_response) throw Error(Errc::malformed_judge_reply, "judge", e.what());
    throw Error(Errc::judge_unavailable, "judge", e.what());
  }
  // Tolerate prose around a single JSON object.
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw Error(Errc::malformed_judge_reply, "judge", "completion contains no JSON object");
  auto reply = json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (reply.is_discarded()) throw Error(Errc::malformed_judge_reply, "judge", "completion is not valid JSON");
  return reply;
}

json RemoteJudge::coordinate(const json& request) {
  return ask(
      "You coordinate a team of agents. Each candidate carries a credibility score in [0,1]. "
      "Return JSON {\"final\": <answer>, \"rationale\": <text>}.",
      request);
}

json RemoteJudge::score_contributions(const json& request) {
  return ask(
      "Quantify how much each agent contributed to the team's final answer, using the message log to see "
      "who changed their response. Return JSON {\"csc\": [one number per agent, in agent order, summing to 1]}.",
      request);
}

}  // namespace crsim
