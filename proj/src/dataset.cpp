#include "crsim/dataset.hpp"

#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "crsim/rng.hpp"

namespace crsim {

using nlohmann::json;

json query_to_json(const Query& q) {
  json gold{{"canonical", q.gold.canonical}, {"alternates", q.gold.accepted_alternates}};
  if (q.gold.numeric_value) gold["value"] = *q.gold.numeric_value;
  if (q.gold.numeric_tolerance) gold["tolerance"] = *q.gold.numeric_tolerance;

  json bands = json::array();
  for (const auto& b : q.rubric.partial_bands) bands.push_back({{"predicate", b.predicate}, {"reward", b.reward}});
  json rubric{{"kind", std::string(to_string(q.rubric.kind))},
              {"correct_reward", q.rubric.correct_reward},
              {"wrong_reward", q.rubric.wrong_reward},
              {"partial_bands", std::move(bands)}};

  json j{{"id", q.id}, {"prompt", q.prompt}, {"kind", std::string(to_string(q.kind))}};
  if (!q.options.empty()) j["options"] = q.options;
  j["gold"] = std::move(gold);
  if (q.decoy) j["decoy"] = *q.decoy;
  j["rubric"] = std::move(rubric);
  return j;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& why) { throw Error(Errc::dataset_error, where, why); }

void only_keys(const json& doc, std::initializer_list<const char*> keys, const std::string& where) {
  if (!doc.is_object()) fail(where, "expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) fail(where + "." + key, "unknown field");
  }
}

std::string text_field(const json& doc, const char* key, const std::string& where, bool required) {
  if (!doc.contains(key)) {
    if (required) fail(where + "." + key, "required");
    return {};
  }
  if (!doc[key].is_string()) fail(where + "." + key, "expected a string");
  return doc[key].get<std::string>();
}

double number_field(const json& doc, const char* key, const std::string& where) {
  if (!doc[key].is_number()) fail(where + "." + key, "expected a number");
  return doc[key].get<double>();
}

std::vector<std::string> text_list(const json& doc, const char* key, const std::string& where) {
  std::vector<std::string> out;
  if (!doc.contains(key)) return out;
  if (!doc[key].is_array()) fail(where + "." + key, "expected an array of strings");
  for (const auto& v : doc[key]) {
    if (!v.is_string()) fail(where + "." + key, "expected an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

Query query_from_json(const json& doc, const std::string& where) {
  only_keys(doc, {"id", "prompt", "kind", "options", "gold", "decoy", "rubric"}, where);
  Query q;
  try {
    q.id = text_field(doc, "id", where, true);
    q.prompt = text_field(doc, "prompt", where, true);
    q.kind = parse_task_kind(text_field(doc, "kind", where, true), where + ".kind");
    q.options = text_list(doc, "options", where);
    if (doc.contains("decoy")) q.decoy = text_field(doc, "decoy", where, true);

    if (!doc.contains("gold")) fail(where + ".gold", "required");
    const auto& gold = doc["gold"];
    only_keys(gold, {"canonical", "alternates", "value", "tolerance"}, where + ".gold");
    q.gold.canonical = text_field(gold, "canonical", where + ".gold", true);
    q.gold.accepted_alternates = text_list(gold, "alternates", where + ".gold");
    if (gold.contains("value")) q.gold.numeric_value = number_field(gold, "value", where + ".gold");
    if (gold.contains("tolerance")) q.gold.numeric_tolerance = number_field(gold, "tolerance", where + ".gold");

    // Numeric queries default to numeric grading; everything else to exact.
    q.rubric.kind = q.kind == TaskKind::numeric ? RubricKind::numeric : RubricKind::exact;
    if (doc.contains("rubric")) {
      const auto& r = doc["rubric"];
      const auto rw = where + ".rubric";
      only_keys(r, {"kind", "correct_reward", "wrong_reward", "partial_bands"}, rw);
      if (r.contains("kind")) q.rubric.kind = parse_rubric_kind(text_field(r, "kind", rw, true), rw + ".kind");
      if (r.contains("correct_reward")) q.rubric.correct_reward = number_field(r, "correct_reward", rw);
      if (r.contains("wrong_reward")) q.rubric.wrong_reward = number_field(r, "wrong_reward", rw);
      if (r.contains("partial_bands")) {
        if (!r["partial_bands"].is_array()) fail(rw + ".partial_bands", "expected an array");
        for (const auto& b : r["partial_bands"]) {
          only_keys(b, {"predicate", "reward"}, rw + ".partial_bands");
          PartialBand band;
          band.predicate = text_field(b, "predicate", rw + ".partial_bands", true);
          if (b.contains("reward")) band.reward = number_field(b, "reward", rw + ".partial_bands");
          q.rubric.partial_bands.push_back(std::move(band));
        }
      }
    }
    validate_query(q);
  } catch (const Error& e) {
    if (e.code() == Errc::dataset_error) throw;
    fail(where, e.what());
  }
  return q;
}

std::vector<Query> parse_dataset(std::string_view text, const std::string& source) {
  std::vector<Query> queries;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    const auto where = source + ":" + std::to_string(line_no);
    const json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) fail(where, "line is not valid JSON");
    auto q = query_from_json(doc, where);
    if (!ids.insert(q.id).second) fail(where + ".id", "duplicate query id '" + q.id + "'");
    queries.push_back(std::move(q));
  }
  if (queries.empty()) fail(source, "dataset holds no queries");
  return queries;
}

std::vector<Query> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path.string(), "cannot open dataset file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), path.filename().string());
}

std::string dataset_to_jsonl(const std::vector<Query>& queries) {
  std::string out;
  for (const auto& q : queries) out += query_to_json(q).dump() + "\n";
  return out;
}

std::vector<Query> make_synthetic_dataset(std::size_t count, std::uint64_t seed) {
  static constexpr std::array<const char*, 4> letters{"A", "B", "C", "D"};
  static constexpr std::array<std::pair<const char*, const char*>, 8> facts{{
      {"paris", "the city of paris"},
      {"oxygen", "o2"},
      {"jupiter", "planet jupiter"},
      {"photosynthesis", "carbon fixation"},
      {"mitochondria", "mitochondrion"},
      {"newton", "isaac newton"},
      {"pacific", "pacific ocean"},
      {"everest", "mount everest"},
  }};

  std::vector<Query> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, {i}));
    Query q;
    q.id = "syn-" + std::to_string(i);
    switch (i % 3) {
      case 0: {
        q.kind = TaskKind::multiple_choice;
        q.options.assign(letters.begin(), letters.end());
        q.gold.canonical = letters[rng.below(letters.size())];
        q.prompt = "Question " + std::to_string(i) + ": choose the correct option (A-D).";
        q.rubric.kind = RubricKind::exact;
        break;
      }
      case 1: {
        const auto a = static_cast<long long>(rng.below(90) + 10);
        const auto b = static_cast<long long>(rng.below(90) + 10);
        q.kind = TaskKind::numeric;
        q.gold.numeric_value = static_cast<double>(a * b);
        q.gold.numeric_tolerance = 0.5;
        q.gold.canonical = std::to_string(a * b);
        q.prompt = "What is " + std::to_string(a) + " times " + std::to_string(b) + "?";
        q.rubric.kind = RubricKind::numeric;
        break;
      }
      default: {
        const auto& [canonical, alternate] = facts[rng.below(facts.size())];
        q.kind = TaskKind::free_text;
        q.gold.canonical = canonical;
        q.gold.accepted_alternates = {alternate};
        q.prompt = "Short answer " + std::to_string(i) + ": name the entity described.";
        q.rubric.kind = RubricKind::tiered;
        q.rubric.partial_bands = {{"alternate", 0.7}};
        break;
      }
    }
    validate_query(q);
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace crsim
