// Query datasets: JSONL files, one query per line, and a seeded generator.
//
// Line shape:
//   {"id": "q1", "prompt": "...", "kind": "multiple-choice",
//    "options": ["A", "B", "C", "D"],
//    "gold": {"canonical": "C", "alternates": [], "value": 3.5, "tolerance": 0.01},
//    "decoy": "B",
//    "rubric": {"kind": "exact", "correct_reward": 1, "wrong_reward": -1,
//               "partial_bands": [{"predicate": "alternate", "reward": 0.7}]}}
// Only id, prompt, kind and gold.canonical are required.

#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "crsim/core.hpp"

namespace crsim {

nlohmann::json query_to_json(const Query& query);
/// Throws Error(dataset_error) naming `where` for malformed or invalid queries.
Query query_from_json(const nlohmann::json& doc, const std::string& where = "query");

/// Parse a whole JSONL document. Blank lines are skipped; ids must be unique
/// and at least one query must be present.
std::vector<Query> parse_dataset(std::string_view text, const std::string& source = "dataset");
std::vector<Query> load_dataset(const std::filesystem::path& path);

std::string dataset_to_jsonl(const std::vector<Query>& queries);

/// A reproducible mix of multiple-choice (options A-D, exact grading),
/// numeric (tolerance 0.5) and free-text (tiered, one alternate at 0.7)
/// queries, cycling through the three kinds.
std::vector<Query> make_synthetic_dataset(std::size_t count, std::uint64_t seed);

}  // namespace crsim
