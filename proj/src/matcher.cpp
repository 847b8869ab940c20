#include "sublang/matcher.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>

#include <omp.h>

#include "json.hpp"
#include "sublang/errors.hpp"

namespace sublang {

Matcher::Matcher(const Terminology& terminology) : terms_(terminology.terms()) {
    nodes_.emplace_back();  // root

    for (std::size_t t = 0; t < terms_.size(); ++t) {
        std::int32_t node = 0;
        for (const auto& token : terms_[t].tokens) {
            auto [it, inserted] = symbols_.try_emplace(token, static_cast<std::int32_t>(symbols_.size()));
            const std::int32_t sym = it->second;
            auto next_it = nodes_[static_cast<std::size_t>(node)].next.find(sym);
            if (next_it == nodes_[static_cast<std::size_t>(node)].next.end()) {
                const auto fresh = static_cast<std::int32_t>(nodes_.size());
                nodes_[static_cast<std::size_t>(node)].next.emplace(sym, fresh);
                nodes_.emplace_back();
                node = fresh;
            } else {
                node = next_it->second;
            }
        }
        nodes_[static_cast<std::size_t>(node)].term = static_cast<std::int32_t>(t);
    }

    // BFS to wire failure and output links
    std::deque<std::int32_t> queue;
    for (auto& [sym, child] : nodes_[0].next) {
        nodes_[static_cast<std::size_t>(child)].fail = 0;
        queue.push_back(child);
    }
    while (!queue.empty()) {
        const std::int32_t node = queue.front();
        queue.pop_front();
        const std::int32_t fail = nodes_[static_cast<std::size_t>(node)].fail;
        nodes_[static_cast<std::size_t>(node)].output_link =
            nodes_[static_cast<std::size_t>(fail)].term >= 0
                ? fail
                : nodes_[static_cast<std::size_t>(fail)].output_link;
        for (auto& [sym, child] : nodes_[static_cast<std::size_t>(node)].next) {
            std::int32_t f = fail;
            while (f != 0 && !nodes_[static_cast<std::size_t>(f)].next.count(sym)) {
                f = nodes_[static_cast<std::size_t>(f)].fail;
            }
            const auto it = nodes_[static_cast<std::size_t>(f)].next.find(sym);
            nodes_[static_cast<std::size_t>(child)].fail =
                it != nodes_[static_cast<std::size_t>(f)].next.end() ? it->second : 0;
            queue.push_back(child);
        }
    }
}

std::int32_t Matcher::symbol_of(const std::string& token) const {
    const auto it = symbols_.find(token);
    return it == symbols_.end() ? -1 : it->second;
}

std::vector<MatchInstance> Matcher::match_line(std::span<const std::string> tokens,
                                               std::size_t line_index) const {
    std::vector<MatchInstance> matches;
    if (terms_.empty()) return matches;

    std::int32_t state = 0;
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
        const std::int32_t sym = symbol_of(tokens[pos]);
        if (sym < 0) {
            state = 0;  // token absent from every pattern
            continue;
        }
        while (state != 0 && !nodes_[static_cast<std::size_t>(state)].next.count(sym)) {
            state = nodes_[static_cast<std::size_t>(state)].fail;
        }
        const auto it = nodes_[static_cast<std::size_t>(state)].next.find(sym);
        state = (it != nodes_[static_cast<std::size_t>(state)].next.end()) ? it->second : 0;

        // enumerate every term ending at this position
        for (std::int32_t n = state; n >= 0; n = nodes_[static_cast<std::size_t>(n)].output_link) {
            const std::int32_t t = nodes_[static_cast<std::size_t>(n)].term;
            if (t >= 0) {
                const Term& term = terms_[static_cast<std::size_t>(t)];
                MatchInstance m;
                m.line_index = line_index;
                m.end = pos + 1;
                m.start = m.end - term.tokens.size();
                m.term_id = term.id;
                m.concept_ids = term.concept_ids;
                m.weight_per_concept = 1.0 / static_cast<double>(term.concept_ids.size());
                matches.push_back(std::move(m));
            }
        }
    }

    std::sort(matches.begin(), matches.end(), [](const MatchInstance& a, const MatchInstance& b) {
        return a.start != b.start ? a.start < b.start : a.end < b.end;
    });
    return matches;
}

AnnotatedCorpus annotate_corpus(const TokenizedCorpus& corpus, const Matcher& matcher, int jobs) {
    AnnotatedCorpus out;
    out.corpus = corpus;

    const int n_lines = static_cast<int>(corpus.lines.size());
    std::vector<std::vector<MatchInstance>> per_line(corpus.lines.size());

    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 64) num_threads(threads)
    for (int l = 0; l < n_lines; ++l) {
        const auto idx = static_cast<std::size_t>(l);
        per_line[idx] = matcher.match_line(corpus.lines[idx], idx);
    }

    std::set<std::string> distinct;
    for (auto& line_matches : per_line) {
        for (auto& m : line_matches) {
            distinct.insert(m.concept_ids.begin(), m.concept_ids.end());
            out.matches.push_back(std::move(m));
        }
    }
    out.stats.match_count = out.matches.size();
    out.stats.distinct_concepts_matched = distinct.size();
    return out;
}

void save_annotated(const AnnotatedCorpus& annotated, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["doc_type"] = annotated.corpus.doc_type;
    doc["stats"] = {{"docs", annotated.corpus.stats.doc_count},
                    {"lines", annotated.corpus.stats.line_count},
                    {"tokens", annotated.corpus.stats.token_count},
                    {"matches", annotated.stats.match_count},
                    {"distinct_concepts", annotated.stats.distinct_concepts_matched}};
    doc["lines"] = annotated.corpus.lines;
    auto& matches = doc["matches"] = nlohmann::json::array();
    for (const auto& m : annotated.matches) {
        matches.push_back({{"line", m.line_index},
                           {"start", m.start},
                           {"end", m.end},
                           {"term", m.term_id},
                           {"concepts", m.concept_ids}});
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << doc.dump() << '\n';
}

AnnotatedCorpus load_annotated(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read annotated corpus: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed annotated corpus " + path.string() + ": " + e.what());
    }

    AnnotatedCorpus out;
    try {
        out.corpus.doc_type = doc.at("doc_type").get<std::string>();
        out.corpus.lines = doc.at("lines").get<std::vector<std::vector<std::string>>>();
        const auto& stats = doc.at("stats");
        out.corpus.stats.doc_count = stats.at("docs").get<std::size_t>();
        out.corpus.stats.line_count = stats.at("lines").get<std::size_t>();
        out.corpus.stats.token_count = stats.at("tokens").get<std::size_t>();
        out.stats.match_count = stats.at("matches").get<std::size_t>();
        out.stats.distinct_concepts_matched = stats.at("distinct_concepts").get<std::size_t>();
        for (const auto& m : doc.at("matches")) {
            MatchInstance inst;
            inst.line_index = m.at("line").get<std::size_t>();
            inst.start = m.at("start").get<std::size_t>();
            inst.end = m.at("end").get<std::size_t>();
            inst.term_id = m.at("term").get<std::string>();
            inst.concept_ids = m.at("concepts").get<std::vector<std::string>>();
            if (inst.concept_ids.empty() || inst.start >= inst.end) {
                throw DataError("malformed match instance in " + path.string());
            }
            inst.weight_per_concept = 1.0 / static_cast<double>(inst.concept_ids.size());
            out.matches.push_back(std::move(inst));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed annotated corpus " + path.string() + ": " + e.what());
    }
    return out;
}

}  // namespace sublang
