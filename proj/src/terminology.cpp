#include "sublang/terminology.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "sublang/corpus.hpp"
#include "sublang/errors.hpp"

namespace sublang {

namespace {

// Token sequences become readable ids: tokens joined by '_', any whitespace
// inside a token (possible in deid tokens) also mapped to '_'. Collisions are
// disambiguated with a ~N suffix in token-sequence order.
std::string base_term_id(const std::vector<std::string>& tokens) {
    std::string id;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) id.push_back('_');
        for (char c : tokens[i]) {
            id.push_back((c == ' ' || c == '\t') ? '_' : c);
        }
    }
    return id;
}

}  // namespace

Terminology Terminology::from_rows(std::span<const std::pair<std::string, std::string>> rows) {
    // merge rows by tokenized surface form
    std::map<std::vector<std::string>, std::set<std::string>> merged;
    std::size_t row_no = 0;
    for (const auto& [concept_id, surface] : rows) {
        ++row_no;
        if (concept_id.empty()) {
            throw DataError("terminology row " + std::to_string(row_no) + ": empty concept id");
        }
        auto tokens = tokenize(surface);
        if (tokens.empty()) {
            throw DataError("terminology row " + std::to_string(row_no) +
                            ": surface string empty after tokenization");
        }
        merged[std::move(tokens)].insert(concept_id);
    }

    Terminology out;
    out.terms_.reserve(merged.size());
    std::set<std::string> used_ids;
    for (auto& [tokens, concepts] : merged) {
        Term term;
        term.tokens = tokens;
        term.concept_ids.assign(concepts.begin(), concepts.end());
        term.id = base_term_id(term.tokens);
        if (!used_ids.insert(term.id).second) {
            std::size_t n = 2;
            std::string candidate;
            do {
                candidate = term.id + "~" + std::to_string(n++);
            } while (!used_ids.insert(candidate).second);
            term.id = candidate;
        }
        out.index_.emplace(term.tokens, out.terms_.size());
        out.terms_.push_back(std::move(term));
    }
    return out;
}

Terminology Terminology::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read terminology file: " + path.string());

    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.find_first_not_of(" \t") == std::string::npos) continue;
        if (line.front() == '#') continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw DataError("malformed terminology row " + std::to_string(line_no) + " in " +
                            path.string() + ": expected concept_id<TAB>surface string");
        }
        std::string concept_id = line.substr(0, tab);
        std::string surface = line.substr(tab + 1);
        if (concept_id.empty()) {
            throw DataError("malformed terminology row " + std::to_string(line_no) + " in " +
                            path.string() + ": empty concept id");
        }
        if (tokenize(surface).empty()) {
            throw DataError("malformed terminology row " + std::to_string(line_no) + " in " +
                            path.string() + ": surface string empty after tokenization");
        }
        rows.emplace_back(std::move(concept_id), std::move(surface));
    }

    return from_rows(rows);
}

const Term* Terminology::find(std::span<const std::string> tokens) const {
    // transparent lookup would avoid this copy; fine at lexicon scale
    const std::vector<std::string> key(tokens.begin(), tokens.end());
    const auto it = index_.find(key);
    return it == index_.end() ? nullptr : &terms_[it->second];
}

}  // namespace sublang
