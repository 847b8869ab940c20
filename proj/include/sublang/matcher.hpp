#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sublang/corpus.hpp"
#include "sublang/terminology.hpp"

namespace sublang {

// One occurrence of a terminology string in a tokenized line. Every concept
// the string can denote receives weight 1/|concept_ids|.
struct MatchInstance {
    std::size_t line_index = 0;
    std::size_t start = 0;  // token offset
    std::size_t end = 0;    // exclusive
    std::string term_id;
    std::vector<std::string> concept_ids;  // sorted, unique
    double weight_per_concept = 1.0;
};

struct AnnotationStats {
    std::size_t match_count = 0;
    std::size_t distinct_concepts_matched = 0;
};

struct AnnotatedCorpus {
    TokenizedCorpus corpus;
    std::vector<MatchInstance> matches;  // sorted by (line_index, start, end)
    AnnotationStats stats;
};

// Token-level Aho-Corasick automaton over all terminology strings.
// Immutable after construction; match_line is reentrant.
class Matcher {
  public:
    explicit Matcher(const Terminology& terminology);

    // Every occurrence of every term in the line, overlapping and nested
    // matches included, sorted by (start, end).
    std::vector<MatchInstance> match_line(std::span<const std::string> tokens,
                                          std::size_t line_index) const;

    std::size_t term_count() const { return terms_.size(); }

  private:
    struct Node {
        std::unordered_map<std::int32_t, std::int32_t> next;
        std::int32_t fail = 0;
        std::int32_t output_link = -1;  // nearest suffix node that ends a term
        std::int32_t term = -1;         // term index ending here, -1 if none
    };

    std::int32_t symbol_of(const std::string& token) const;

    std::vector<Term> terms_;  // snapshot of the terminology entries
    std::unordered_map<std::string, std::int32_t> symbols_;
    std::vector<Node> nodes_;
};

// Runs the matcher over every line (lines may be processed in parallel; the
// result is merged in line order and is identical for any jobs value).
AnnotatedCorpus annotate_corpus(const TokenizedCorpus& corpus, const Matcher& matcher,
                                int jobs = 0);

// JSON persistence of an annotated corpus (the `annotate` output consumed by
// `train`).
void save_annotated(const AnnotatedCorpus& annotated, const std::filesystem::path& path);
AnnotatedCorpus load_annotated(const std::filesystem::path& path);

}  // namespace sublang
