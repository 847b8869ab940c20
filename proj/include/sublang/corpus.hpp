#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sublang {

enum class CorpusFormat { DirPerType, Jsonl };

CorpusFormat corpus_format_from_string(std::string_view name);
std::string to_string(CorpusFormat format);

// One document type's raw documents, in stable load order.
struct RawCorpus {
    std::string doc_type;
    std::vector<std::string> documents;
};

struct CorpusStats {
    std::size_t doc_count = 0;
    std::size_t line_count = 0;
    std::size_t token_count = 0;
};

// Line-segmented, tokenized documents of one type. Lines with no tokens are
// dropped (they contribute no training contexts).
struct TokenizedCorpus {
    std::string doc_type;
    std::vector<std::vector<std::string>> lines;
    CorpusStats stats;
};

// Loads every document labelled doc_type from either layout:
//   DirPerType: <path>/<doc_type>/*.txt, files in byte-order of their names
//   Jsonl:      one {"doc_type": ..., "text": ...} object per line
// An empty result (no matching documents) is valid, not an error.
RawCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                      const std::string& doc_type);

// Document-type labels present in the input, sorted and deduplicated.
std::vector<std::string> list_doc_types(const std::filesystem::path& path, CorpusFormat format);

// Splits on '\n' and drops empty lines.
std::vector<std::string> segment_lines(std::string_view document);

// Deterministic rule-based tokenization of a single line:
//   1. a maximal span "[**"..."**]" is one deidentifier token, lowercased verbatim
//   2. remaining text splits on whitespace
//   3. leading/trailing punctuation of each chunk splits off as 1-char tokens;
//      internal punctuation stays attached
//   4. everything is lowercased (simple Unicode case mapping)
std::vector<std::string> tokenize(std::string_view line);

// Segments and tokenizes every document; documents may be processed in
// parallel (jobs threads, 0 = library default) because results are merged in
// document order. Output is identical for any jobs value.
TokenizedCorpus tokenize_corpus(const RawCorpus& raw, int jobs = 0);

}  // namespace sublang
