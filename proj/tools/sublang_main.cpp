#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sublang/cli.hpp"

namespace {

using sublang::ProjectConfig;

struct SharedFlags {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> replicates;
    std::optional<int> k;
    std::optional<double> threshold;
    std::optional<int> jobs;
    bool deterministic = false;
};

void add_shared(CLI::App* cmd, SharedFlags& flags) {
    cmd->add_option("--config", flags.config_path, "project config JSON")
        ->envname("SUBLANG_CONFIG");
    cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", flags.seed, "base random seed (overrides config)");
    cmd->add_option("--replicates", flags.replicates, "replicate count (overrides config)");
    cmd->add_option("--k", flags.k, "neighbors per query (overrides config)");
    cmd->add_option("--threshold", flags.threshold, "high-confidence cutoff (overrides config)");
    cmd->add_option("--jobs", flags.jobs, "worker thread cap (overrides config)");
    cmd->add_flag("--deterministic", flags.deterministic,
                  "bit-exact single-stream training per replicate");
}

// precedence: flags > config file > defaults
ProjectConfig resolve_config(const SharedFlags& flags) {
    if (flags.config_path.empty()) {
        throw sublang::UsageError("no config given; use --config or set SUBLANG_CONFIG");
    }
    ProjectConfig cfg = ProjectConfig::from_file(flags.config_path);
    if (flags.out_dir) cfg.out_dir = *flags.out_dir;
    if (flags.seed) cfg.train.seed = *flags.seed;
    if (flags.replicates) {
        cfg.replicates = *flags.replicates;
        cfg.analysis.replicates = *flags.replicates;
    }
    if (flags.k) cfg.analysis.k = *flags.k;
    if (flags.threshold) cfg.analysis.threshold = *flags.threshold;
    if (flags.jobs) cfg.jobs = *flags.jobs;
    if (flags.deterministic) cfg.deterministic = true;
    return cfg;
}

std::vector<std::string> doc_types_or_all(const ProjectConfig& cfg, const std::string& doc_type) {
    if (!doc_type.empty()) return {doc_type};
    return cfg.doc_types;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sublang: per-document-type concept embeddings and neighborhood-consistency analysis"};
    app.require_subcommand(1);

    SharedFlags flags;
    std::string doc_type;
    std::string ref_type, cmp_type;
    std::string mode_name = "ref-high-conf";
    std::string concept_id;
    std::string space_name = "concept";
    std::vector<std::string> neighbor_types;
    bool emit_distances = false;

    CLI::App* annotate = app.add_subcommand("annotate", "tokenize a corpus and tag terminology matches");
    add_shared(annotate, flags);
    annotate->add_option("--doc-type", doc_type, "document type (default: all in config)");

    CLI::App* train = app.add_subcommand("train", "train replicated embeddings from an annotated corpus");
    add_shared(train, flags);
    train->add_option("--doc-type", doc_type, "document type (default: all in config)");

    CLI::App* selfc = app.add_subcommand("self-consistency",
                                         "per-concept neighborhood consistency across replicates");
    add_shared(selfc, flags);
    selfc->add_option("--doc-type", doc_type, "document type (default: all in config)");

    CLI::App* compare = app.add_subcommand("compare", "the four consistency distributions for a type pair");
    add_shared(compare, flags);
    compare->add_option("ref", ref_type, "reference document type")->required();
    compare->add_option("cmp", cmp_type, "comparison document type")->required();
    compare->add_option("--mode", mode_name, "ref-high-conf (default) or both-high-conf");

    CLI::App* neighbors = app.add_subcommand("neighbors", "replicate-averaged nearest neighbors of a concept");
    add_shared(neighbors, flags);
    neighbors->add_option("concept", concept_id, "concept id")->required();
    neighbors->add_option("--doc-types", neighbor_types, "document types (default: all in config)")
        ->delimiter(',');
    neighbors->add_option("--space", space_name, "target space: concept (default) or term");
    neighbors->add_flag("--distances", emit_distances, "also write the rank/distance CSV");

    CLI::App* report = app.add_subcommand("report", "assemble summary table and pairwise matrices");
    add_shared(report, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : sublang::kExitUsage;
    }

    try {
        const ProjectConfig cfg = resolve_config(flags);
        int rc = sublang::kExitOk;
        if (*annotate) {
            for (const auto& type : doc_types_or_all(cfg, doc_type)) {
                rc = std::max(rc, sublang::cmd_annotate(cfg, type));
            }
        } else if (*train) {
            for (const auto& type : doc_types_or_all(cfg, doc_type)) {
                rc = std::max(rc, sublang::cmd_train(cfg, type));
            }
        } else if (*selfc) {
            for (const auto& type : doc_types_or_all(cfg, doc_type)) {
                rc = std::max(rc, sublang::cmd_self_consistency(cfg, type));
            }
        } else if (*compare) {
            rc = sublang::cmd_compare(cfg, ref_type, cmp_type,
                                      sublang::share_mode_from_string(mode_name));
        } else if (*neighbors) {
            rc = sublang::cmd_neighbors(cfg, concept_id, neighbor_types,
                                        sublang::target_space_from_string(space_name),
                                        flags.k.value_or(cfg.analysis.k), emit_distances);
        } else if (*report) {
            rc = sublang::cmd_report(cfg);
        }
        return rc;
    } catch (const sublang::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sublang::kExitUsage;
    } catch (const sublang::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sublang::kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sublang::kExitData;
    }
}
