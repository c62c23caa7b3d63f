#include "infosuff/corpus_filter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_map>

#include "infosuff/util.hpp"

namespace infosuff {

namespace {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char raw : text) {
        auto c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            cur.push_back(char(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

using TermCounts = std::unordered_map<std::string, double>;

TermCounts term_counts(const std::vector<std::string>& tokens) {
    TermCounts tf;
    for (const auto& t : tokens) tf[t] += 1.0;
    return tf;
}

// idf = ln(N / df), df counted over the corpus documents.
std::unordered_map<std::string, double> idf_table(const std::vector<std::string>& corpus) {
    std::unordered_map<std::string, double> df;
    for (const auto& doc : corpus) {
        std::set<std::string> seen;
        for (const auto& t : tokenize(doc)) seen.insert(t);
        for (const auto& t : seen) df[t] += 1.0;
    }
    std::unordered_map<std::string, double> idf;
    double n = double(corpus.size());
    for (const auto& [term, d] : df) idf[term] = std::log(n / d);
    return idf;
}

double cosine(const TermCounts& a, const TermCounts& b,
              const std::unordered_map<std::string, double>& idf) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [term, tf] : a) {
        auto it = idf.find(term);
        double w = it == idf.end() ? 0.0 : it->second;
        double wa = tf * w;
        na += wa * wa;
        auto bt = b.find(term);
        if (bt != b.end()) dot += wa * (bt->second * w);
    }
    for (const auto& [term, tf] : b) {
        auto it = idf.find(term);
        double w = it == idf.end() ? 0.0 : it->second;
        nb += (tf * w) * (tf * w);
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

bool same_multiset(const TermCounts& a, const TermCounts& b) {
    if (a.size() != b.size()) return false;
    for (const auto& [term, tf] : a) {
        auto it = b.find(term);
        if (it == b.end() || it->second != tf) return false;
    }
    return true;
}

}  // namespace

double tfidf_cosine(const std::string& doc_a, const std::string& doc_b,
                    const std::vector<std::string>& corpus) {
    auto ta = term_counts(tokenize(doc_a));
    auto tb = term_counts(tokenize(doc_b));
    if (same_multiset(ta, tb)) return 1.0;
    if (ta.empty() || tb.empty()) return 0.0;
    return cosine(ta, tb, idf_table(corpus));
}

std::string dedup_document(const Scenario& s) {
    return s.incoming_message + " " + s.user_context;
}

namespace {

// One elimination round: union near-duplicate pairs, keep smallest id per
// cluster. Returns true if anything was removed.
bool dedup_round(std::vector<Scenario>& scenarios, double threshold) {
    const std::size_t n = scenarios.size();
    if (n < 2) return false;

    std::vector<std::string> docs;
    docs.reserve(n);
    for (const auto& s : scenarios) docs.push_back(dedup_document(s));

    std::vector<TermCounts> counts;
    counts.reserve(n);
    for (const auto& d : docs) counts.push_back(term_counts(tokenize(d)));
    auto idf = idf_table(docs);

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sim;
            if (same_multiset(counts[i], counts[j]))
                sim = 1.0;
            else if (counts[i].empty() || counts[j].empty())
                sim = 0.0;
            else
                sim = cosine(counts[i], counts[j], idf);
            if (sim >= threshold) parent[find(i)] = find(j);
        }
    }

    // scenarios are sorted by id, so the first member of a cluster has the
    // lexicographically smallest id
    std::vector<bool> cluster_seen(n, false);
    std::vector<Scenario> kept;
    kept.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t root = find(i);
        if (!cluster_seen[root]) {
            cluster_seen[root] = true;
            kept.push_back(scenarios[i]);
        }
    }
    bool removed = kept.size() < scenarios.size();
    scenarios = std::move(kept);
    return removed;
}

}  // namespace

ScenarioSet dedup(const ScenarioSet& set, double threshold) {
    if (threshold <= 0.0 || threshold > 1.0)
        throw std::invalid_argument("dedup threshold must be in (0, 1]");
    ScenarioSet out = set;
    std::sort(out.scenarios.begin(), out.scenarios.end(),
              [](const Scenario& a, const Scenario& b) { return a.id < b.id; });
    while (dedup_round(out.scenarios, threshold)) {
    }
    return out;
}

ScenarioSet filter_naturalness(const ScenarioSet& set,
                               const std::map<std::string, int>& scores, int threshold) {
    ScenarioSet out;
    out.provenance = set.provenance;
    for (const auto& s : set.scenarios) {
        auto it = scores.find(s.id);
        if (it == scores.end())
            throw CorpusError("missing naturalness score for id \"" + s.id + "\"");
        if (it->second < 1 || it->second > 5)
            throw CorpusError("naturalness score out of range 1..5 for id \"" + s.id + "\"");
        if (it->second >= threshold) out.scenarios.push_back(s);
    }
    return out;
}

ScenarioSet balance_cells(const ScenarioSet& set, int cap_per_cell, std::uint64_t seed) {
    if (cap_per_cell < 1) throw std::invalid_argument("cap_per_cell must be >= 1");

    std::map<std::pair<int, int>, std::vector<Scenario>> cells;
    for (const auto& s : set.scenarios)
        cells[{int(s.power_relation), int(s.sensitivity_type)}].push_back(s);

    ScenarioSet out;
    out.provenance = set.provenance;
    for (auto& [cell, members] : cells) {
        // members arrive sorted by id (set invariant); shuffle with a
        // per-cell stream so cells are independent of one another
        std::string label = "cell/" + std::to_string(cell.first) + "/" +
                            std::to_string(cell.second);
        SplitMix64 rng(derive_seed(seed, label));
        seeded_shuffle(members, rng);
        std::size_t keep = std::min<std::size_t>(members.size(), std::size_t(cap_per_cell));
        for (std::size_t i = 0; i < keep; ++i) out.scenarios.push_back(members[i]);
    }
    std::sort(out.scenarios.begin(), out.scenarios.end(),
              [](const Scenario& a, const Scenario& b) { return a.id < b.id; });
    return out;
}

}  // namespace infosuff
