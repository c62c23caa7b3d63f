#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "infosuff/scenario.hpp"

namespace infosuff {

// TF-IDF cosine similarity. Lowercase, split on non-alphanumerics, raw
// term frequency, idf = ln(N/df) over the given corpus, no smoothing.
// Identical token multisets score 1.0; an empty document scores 0.0
// against any nonempty one.
double tfidf_cosine(const std::string& doc_a, const std::string& doc_b,
                    const std::vector<std::string>& corpus);

// The text a scenario is deduplicated on.
std::string dedup_document(const Scenario& s);

// Removes near-duplicates: iterates until no surviving pair has
// similarity >= threshold when measured over the survivors' own corpus
// (this makes dedup idempotent). Within a duplicate cluster the
// lexicographically smallest id survives.
ScenarioSet dedup(const ScenarioSet& set, double threshold = 0.85);

// Keeps scenarios whose naturalness score is >= threshold. A missing
// score is an error naming the id.
ScenarioSet filter_naturalness(const ScenarioSet& set,
                               const std::map<std::string, int>& scores,
                               int threshold = 3);

// Downsamples each power-relation x sensitivity-type cell to at most
// cap_per_cell scenarios via a seeded shuffle. Same seed, same output.
ScenarioSet balance_cells(const ScenarioSet& set, int cap_per_cell, std::uint64_t seed);

}  // namespace infosuff
