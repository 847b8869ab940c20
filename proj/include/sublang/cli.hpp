#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "sublang/consistency.hpp"
#include "sublang/corpus.hpp"
#include "sublang/explorer.hpp"
#include "sublang/trainer.hpp"

namespace sublang {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitEmpty = 3;  // valid run, empty result

// Project-level configuration, one JSON document. Relative paths resolve
// against the directory containing the config file; flag overrides are
// applied by the CLI front end after loading.
struct ProjectConfig {
    std::filesystem::path corpus_path;
    CorpusFormat corpus_format = CorpusFormat::DirPerType;
    std::filesystem::path terminology_path;
    std::filesystem::path out_dir = "out";
    std::vector<std::string> doc_types;
    TrainConfig train;
    AnalysisConfig analysis;
    int replicates = 10;
    bool deterministic = false;
    int jobs = 0;  // 0 = all cores

    static ProjectConfig from_json(const nlohmann::json& doc,
                                   const std::filesystem::path& base_dir);
    static ProjectConfig from_file(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    void validate() const;
};

// filesystem-safe stand-in for a doc-type label
std::string sanitize_label(const std::string& label);

// write-temp-then-rename so reruns replace outputs atomically
void atomic_write(const std::filesystem::path& path, const std::string& content);

// Subcommand implementations. They throw UsageError/DataError (mapped to
// exit codes by the front end) and return kExitOk or kExitEmpty.
int cmd_annotate(const ProjectConfig& config, const std::string& doc_type);
int cmd_train(const ProjectConfig& config, const std::string& doc_type);
int cmd_self_consistency(const ProjectConfig& config, const std::string& doc_type);
int cmd_compare(const ProjectConfig& config, const std::string& ref_type,
                const std::string& cmp_type, ShareMode mode);
int cmd_neighbors(const ProjectConfig& config, const std::string& concept_id,
                  const std::vector<std::string>& doc_types, TargetSpace space, int k,
                  bool emit_distances);
int cmd_report(const ProjectConfig& config);

// Loads the R trained replicate files of one doc type from the out dir.
ReplicateSet load_replicates(const ProjectConfig& config, const std::string& doc_type);

}  // namespace sublang
