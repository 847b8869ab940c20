#include "sublang/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <omp.h>

#include "json.hpp"
#include "sublang/errors.hpp"
#include "sublang/utf8.hpp"

namespace sublang {

namespace fs = std::filesystem;

CorpusFormat corpus_format_from_string(std::string_view name) {
    if (name == "dir-per-type") return CorpusFormat::DirPerType;
    if (name == "jsonl") return CorpusFormat::Jsonl;
    throw UsageError("unknown corpus format: " + std::string(name) +
                     " (expected dir-per-type or jsonl)");
}

std::string to_string(CorpusFormat format) {
    return format == CorpusFormat::DirPerType ? "dir-per-type" : "jsonl";
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot read file: " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

std::vector<fs::path> sorted_txt_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    return files;
}

void for_each_jsonl_record(const fs::path& path,
                           const std::function<void(std::size_t, const nlohmann::json&)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read file: " + path.string());
    std::string line;
    std::size_t record = 0;
    while (std::getline(in, line)) {
        ++record;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed record " + std::to_string(record) + " in " + path.string() +
                            ": " + e.what());
        }
        if (!obj.is_object() || !obj.contains("doc_type") || !obj.contains("text") ||
            !obj["doc_type"].is_string() || !obj["text"].is_string()) {
            throw DataError("malformed record " + std::to_string(record) + " in " + path.string() +
                            ": expected string fields doc_type and text");
        }
        fn(record, obj);
    }
}

}  // namespace

RawCorpus load_corpus(const fs::path& path, CorpusFormat format, const std::string& doc_type) {
    if (doc_type.empty()) throw UsageError("doc_type must be non-empty");
    if (!fs::exists(path)) throw DataError("corpus path does not exist: " + path.string());

    RawCorpus corpus;
    corpus.doc_type = doc_type;

    if (format == CorpusFormat::DirPerType) {
        const fs::path dir = path / doc_type;
        if (!fs::exists(dir)) return corpus;  // no documents of this type
        for (const auto& file : sorted_txt_files(dir)) {
            corpus.documents.push_back(read_file(file));
        }
    } else {
        for_each_jsonl_record(path, [&](std::size_t, const nlohmann::json& obj) {
            if (obj["doc_type"].get<std::string>() == doc_type) {
                corpus.documents.push_back(obj["text"].get<std::string>());
            }
        });
    }
    return corpus;
}

std::vector<std::string> list_doc_types(const fs::path& path, CorpusFormat format) {
    if (!fs::exists(path)) throw DataError("corpus path does not exist: " + path.string());
    std::set<std::string> types;
    if (format == CorpusFormat::DirPerType) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_directory()) types.insert(entry.path().filename().string());
        }
    } else {
        for_each_jsonl_record(path, [&](std::size_t, const nlohmann::json& obj) {
            types.insert(obj["doc_type"].get<std::string>());
        });
    }
    return {types.begin(), types.end()};
}

std::vector<std::string> segment_lines(std::string_view document) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= document.size()) {
        const std::size_t nl = document.find('\n', start);
        const std::size_t end = (nl == std::string_view::npos) ? document.size() : nl;
        if (end > start) lines.emplace_back(document.substr(start, end - start));
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return lines;
}

namespace {

constexpr std::string_view kDeidOpen = "[**";
constexpr std::string_view kDeidClose = "**]";

// Punctuation split off at chunk edges. Deliberately excludes characters that
// carry meaning inside clinical shorthand ("w/", "s/p", "x-ray", "10%").
bool is_edge_punct(char c) {
    switch (c) {
        case '.':
        case ',':
        case ';':
        case ':':
        case '!':
        case '?':
        case '"':
        case '\'':
        case '`':
        case '(':
        case ')':
        case '[':
        case ']':
        case '{':
        case '}':
            return true;
        default:
            return false;
    }
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v' || c == '\n';
}

void tokenize_chunk(std::string_view chunk, std::vector<std::string>& out) {
    // leading punctuation, one token per character
    while (!chunk.empty() && is_edge_punct(chunk.front())) {
        out.emplace_back(1, chunk.front());
        chunk.remove_prefix(1);
    }
    if (chunk.empty()) return;
    // trailing punctuation, emitted after the core in original order
    std::size_t core_end = chunk.size();
    while (core_end > 0 && is_edge_punct(chunk[core_end - 1])) --core_end;
    out.emplace_back(utf8::lowercase(chunk.substr(0, core_end)));
    for (std::size_t i = core_end; i < chunk.size(); ++i) {
        out.emplace_back(1, chunk[i]);
    }
}

void tokenize_gap(std::string_view text, std::vector<std::string>& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) tokenize_chunk(text.substr(i, j - i), out);
        i = j;
    }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view line) {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
        const std::size_t open = line.find(kDeidOpen, pos);
        if (open == std::string_view::npos) break;
        const std::size_t close = line.find(kDeidClose, open + kDeidOpen.size());
        if (close == std::string_view::npos) break;
        tokenize_gap(line.substr(pos, open - pos), tokens);
        const std::size_t span_end = close + kDeidClose.size();
        tokens.push_back(utf8::lowercase(line.substr(open, span_end - open)));
        pos = span_end;
    }
    tokenize_gap(line.substr(pos), tokens);
    return tokens;
}

TokenizedCorpus tokenize_corpus(const RawCorpus& raw, int jobs) {
    TokenizedCorpus out;
    out.doc_type = raw.doc_type;
    out.stats.doc_count = raw.documents.size();

    const int n_docs = static_cast<int>(raw.documents.size());
    std::vector<std::vector<std::vector<std::string>>> per_doc(raw.documents.size());

    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int d = 0; d < n_docs; ++d) {
        auto& doc_lines = per_doc[static_cast<std::size_t>(d)];
        for (const auto& line : segment_lines(raw.documents[static_cast<std::size_t>(d)])) {
            auto tokens = tokenize(line);
            if (!tokens.empty()) doc_lines.push_back(std::move(tokens));
        }
    }

    for (auto& doc_lines : per_doc) {
        for (auto& line : doc_lines) {
            out.stats.token_count += line.size();
            out.lines.push_back(std::move(line));
        }
    }
    out.stats.line_count = out.lines.size();
    return out;
}

}  // namespace sublang
