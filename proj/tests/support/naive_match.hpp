#pragma once

// Test-only oracle: O(lines x positions x terms) scan, independent of the
// automaton implementation.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "sublang/matcher.hpp"
#include "sublang/terminology.hpp"

namespace sublang::testing {

inline std::vector<MatchInstance> naive_match_line(const Terminology& terminology,
                                                   std::span<const std::string> tokens,
                                                   std::size_t line_index) {
    std::vector<MatchInstance> matches;
    for (std::size_t start = 0; start < tokens.size(); ++start) {
        for (const Term& term : terminology.terms()) {
            const std::size_t len = term.tokens.size();
            if (start + len > tokens.size()) continue;
            bool equal = true;
            for (std::size_t i = 0; i < len; ++i) {
                if (tokens[start + i] != term.tokens[i]) {
                    equal = false;
                    break;
                }
            }
            if (!equal) continue;
            MatchInstance m;
            m.line_index = line_index;
            m.start = start;
            m.end = start + len;
            m.term_id = term.id;
            m.concept_ids = term.concept_ids;
            m.weight_per_concept = 1.0 / static_cast<double>(term.concept_ids.size());
            matches.push_back(std::move(m));
        }
    }
    std::sort(matches.begin(), matches.end(), [](const MatchInstance& a, const MatchInstance& b) {
        return a.start != b.start ? a.start < b.start : a.end < b.end;
    });
    return matches;
}

inline bool same_matches(const std::vector<MatchInstance>& a, const std::vector<MatchInstance>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].line_index != b[i].line_index || a[i].start != b[i].start ||
            a[i].end != b[i].end || a[i].term_id != b[i].term_id ||
            a[i].concept_ids != b[i].concept_ids) {
            return false;
        }
    }
    return true;
}

}  // namespace sublang::testing
