#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sublang {

// One lexicon entry: a tokenized surface form and the concepts it can denote.
struct Term {
    std::string id;                        // derived from the token sequence, unique
    std::vector<std::string> tokens;       // lowercase, non-empty
    std::vector<std::string> concept_ids;  // sorted, unique, non-empty
};

// Many-to-many map between surface-form token sequences and concepts.
// Rows with the same token sequence merge; term ids are assigned in
// lexicographic token-sequence order so they do not depend on row order.
class Terminology {
  public:
    Terminology() = default;

    // TSV rows `concept_id<TAB>surface string`; '#' lines are comments.
    static Terminology load(const std::filesystem::path& path);

    // rows of (concept_id, surface string); used by load() and by tests
    static Terminology from_rows(std::span<const std::pair<std::string, std::string>> rows);

    const std::vector<Term>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }

    // nullptr when no term has exactly this token sequence
    const Term* find(std::span<const std::string> tokens) const;

  private:
    std::vector<Term> terms_;
    std::map<std::vector<std::string>, std::size_t> index_;
};

}  // namespace sublang
