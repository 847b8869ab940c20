#include "sublang/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "sublang/embstore.hpp"
#include "sublang/matcher.hpp"
#include "sublang/terminology.hpp"

namespace sublang {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty() || p.is_absolute()) return p.lexically_normal();
    return (base / p).lexically_normal();
}

std::string format_g9(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

}  // namespace

ProjectConfig ProjectConfig::from_json(const nlohmann::json& doc, const fs::path& base_dir) {
    ProjectConfig cfg;
    try {
        const auto& corpus = doc.at("corpus");
        cfg.corpus_path = resolve(corpus.at("path").get<std::string>(), base_dir);
        cfg.corpus_format = corpus_format_from_string(corpus.value("format", "dir-per-type"));
        cfg.terminology_path = resolve(doc.at("terminology").get<std::string>(), base_dir);
        cfg.out_dir = resolve(doc.value("out_dir", "out"), base_dir);
        cfg.doc_types = doc.at("doc_types").get<std::vector<std::string>>();
        cfg.replicates = doc.value("replicates", 10);
        cfg.deterministic = doc.value("deterministic", false);
        cfg.jobs = doc.value("jobs", 0);

        if (doc.contains("train")) {
            const auto& t = doc["train"];
            cfg.train.window = t.value("window", cfg.train.window);
            cfg.train.min_freq = t.value("min_freq", cfg.train.min_freq);
            cfg.train.dim = t.value("dim", cfg.train.dim);
            cfg.train.lr0 = t.value("lr0", cfg.train.lr0);
            cfg.train.lr_min = t.value("lr_min", cfg.train.lr_min);
            cfg.train.epochs = t.value("epochs", cfg.train.epochs);
            cfg.train.negatives = t.value("negatives", cfg.train.negatives);
            cfg.train.unigram_power = t.value("unigram_power", cfg.train.unigram_power);
            cfg.train.seed = t.value("seed", cfg.train.seed);
        }
        if (doc.contains("analysis")) {
            const auto& a = doc["analysis"];
            cfg.analysis.k = a.value("k", cfg.analysis.k);
            cfg.analysis.threshold = a.value("threshold", cfg.analysis.threshold);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed config: ") + e.what());
    }
    cfg.analysis.replicates = cfg.replicates;
    return cfg;
}

ProjectConfig ProjectConfig::from_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read config file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed config " + path.string() + ": " + e.what());
    }
    return from_json(doc, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

nlohmann::json ProjectConfig::to_json() const {
    return {
        {"corpus", {{"path", corpus_path.string()}, {"format", to_string(corpus_format)}}},
        {"terminology", terminology_path.string()},
        {"out_dir", out_dir.string()},
        {"doc_types", doc_types},
        {"replicates", replicates},
        {"deterministic", deterministic},
        {"jobs", jobs},
        {"train",
         {{"window", train.window},
          {"min_freq", train.min_freq},
          {"dim", train.dim},
          {"lr0", train.lr0},
          {"lr_min", train.lr_min},
          {"epochs", train.epochs},
          {"negatives", train.negatives},
          {"unigram_power", train.unigram_power},
          {"seed", train.seed}}},
        {"analysis", {{"k", analysis.k}, {"threshold", analysis.threshold}}},
    };
}

void ProjectConfig::validate() const {
    if (doc_types.empty()) throw UsageError("config: doc_types must be non-empty");
    train.validate();
    if (analysis.k < 1) throw UsageError("k must be >= 1");
    if (!(analysis.threshold > 0.0) || analysis.threshold > 1.0) {
        throw UsageError("threshold must be in (0, 1]");
    }
}

std::string sanitize_label(const std::string& label) {
    std::string out;
    out.reserve(label.size());
    for (const char c : label) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? "_" : out;
}

void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp.string());
        out << content;
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

namespace {

fs::path annotated_path(const ProjectConfig& cfg, const std::string& doc_type) {
    return cfg.out_dir / (sanitize_label(doc_type) + ".annotated.json");
}

fs::path replicate_path(const ProjectConfig& cfg, const std::string& doc_type, int i) {
    return cfg.out_dir / (sanitize_label(doc_type) + ".rep" + std::to_string(i) + ".emb");
}

void ensure_out_dir(const ProjectConfig& cfg) { fs::create_directories(cfg.out_dir); }

std::string stats_tsv(const std::string& doc_type, const AnnotatedCorpus& annotated) {
    std::ostringstream out;
    out << "doc_type\tdocs\tlines\ttokens\tmatches\tconcepts\n";
    out << doc_type << '\t' << annotated.corpus.stats.doc_count << '\t'
        << annotated.corpus.stats.line_count << '\t' << annotated.corpus.stats.token_count << '\t'
        << annotated.stats.match_count << '\t' << annotated.stats.distinct_concepts_matched
        << '\n';
    return out.str();
}

}  // namespace

ReplicateSet load_replicates(const ProjectConfig& config, const std::string& doc_type) {
    ReplicateSet reps;
    reps.doc_type = doc_type;
    for (int i = 0; i < config.replicates; ++i) {
        const fs::path path = replicate_path(config, doc_type, i);
        if (!fs::exists(path)) {
            throw DataError("missing replicate file " + path.string() + " for " + doc_type +
                            "; run train first");
        }
        reps.replicates.push_back(load_embeddings(path));
        reps.replicates.back().doc_type = doc_type;
    }
    return reps;
}

int cmd_annotate(const ProjectConfig& config, const std::string& doc_type) {
    config.validate();
    ensure_out_dir(config);

    RawCorpus raw;
    try {
        raw = load_corpus(config.corpus_path, config.corpus_format, doc_type);
    } catch (const DataError& e) {
        throw DataError("annotate " + doc_type + ": " + e.what());
    }
    const TokenizedCorpus corpus = tokenize_corpus(raw, config.jobs);
    const Terminology terminology = Terminology::load(config.terminology_path);
    const Matcher matcher(terminology);
    const AnnotatedCorpus annotated = annotate_corpus(corpus, matcher, config.jobs);

    {
        const fs::path target = annotated_path(config, doc_type);
        const fs::path tmp = target.string() + ".tmp";
        save_annotated(annotated, tmp);
        fs::rename(tmp, target);
    }
    const std::string stats = stats_tsv(doc_type, annotated);
    atomic_write(config.out_dir / (sanitize_label(doc_type) + ".stats.tsv"), stats);
    std::cout << stats;
    return kExitOk;
}

int cmd_train(const ProjectConfig& config, const std::string& doc_type) {
    config.validate();
    if (config.replicates < 1) throw UsageError("replicates must be >= 1");
    ensure_out_dir(config);

    const fs::path ann_path = annotated_path(config, doc_type);
    if (!fs::exists(ann_path)) {
        throw DataError("annotated corpus not found: " + ann_path.string() + "; run annotate first");
    }
    const AnnotatedCorpus annotated = load_annotated(ann_path);

    const auto t0 = std::chrono::steady_clock::now();
    const TrainMode mode = config.deterministic ? TrainMode::Deterministic : TrainMode::Parallel;
    ReplicateSet reps = train_replicates(annotated, config.train, config.replicates, mode,
                                         config.jobs);
    const double wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<std::string> outputs;
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < config.replicates; ++i) {
        const fs::path target = replicate_path(config, doc_type, i);
        const fs::path tmp = target.string() + ".tmp";
        save_embeddings(reps.replicates[static_cast<std::size_t>(i)], tmp);
        fs::rename(tmp, target);
        outputs.push_back(target.filename().string());
        seeds.push_back(config.train.seed + static_cast<std::uint64_t>(i));
    }

    nlohmann::json manifest = {
        {"command", "train"},
        {"doc_type", doc_type},
        {"config", config.to_json()},
        {"mode", config.deterministic ? "deterministic" : "parallel"},
        {"seeds", seeds},
        {"vocabulary",
         {{"words", reps.vocab.words.size()},
          {"terms", reps.vocab.terms.size()},
          {"concepts", reps.vocab.concepts.size()}}},
        {"wall_time_seconds", wall_seconds},
        {"outputs", outputs},
    };
    atomic_write(config.out_dir / (sanitize_label(doc_type) + ".train_manifest.json"),
                 manifest.dump(2) + "\n");

    std::cout << "trained " << config.replicates << " replicates for " << doc_type << " ("
              << reps.vocab.words.size() << " words, " << reps.vocab.terms.size() << " terms, "
              << reps.vocab.concepts.size() << " concepts)\n";
    return kExitOk;
}

int cmd_self_consistency(const ProjectConfig& config, const std::string& doc_type) {
    config.validate();
    if (config.replicates < 2) throw UsageError("need >= 2 replicates");
    ensure_out_dir(config);

    const ReplicateSet reps = load_replicates(config, doc_type);
    const HighConfidenceResult result = high_confidence(reps, config.analysis, config.jobs);

    std::ostringstream all;
    all << "concept_id\tconsistency\tpair_count\n";
    for (const auto& rec : result.all) {
        all << rec.concept_id << '\t' << format_g9(rec.value) << '\t' << rec.pair_count << '\n';
    }
    atomic_write(config.out_dir / (sanitize_label(doc_type) + ".self_consistency.tsv"), all.str());

    std::ostringstream hc;
    hc << "concept_id\tconsistency\tpair_count\n";
    for (const auto& rec : result.retained) {
        hc << rec.concept_id << '\t' << format_g9(rec.value) << '\t' << rec.pair_count << '\n';
    }
    atomic_write(config.out_dir / (sanitize_label(doc_type) + ".high_confidence.tsv"), hc.str());

    const nlohmann::json summary = {
        {"doc_type", doc_type},
        {"concepts", result.all.size()},
        {"high_confidence", result.retained.size()},
        {"mean_consistency", result.retained_mean},
        {"k", config.analysis.k},
        {"threshold", config.analysis.threshold},
        {"replicates", config.replicates},
    };
    atomic_write(config.out_dir / (sanitize_label(doc_type) + ".high_confidence.json"),
                 summary.dump(2) + "\n");

    std::cout << doc_type << ": " << result.all.size() << " concepts, "
              << result.retained.size() << " high-confidence, mean consistency "
              << format_g9(result.retained_mean) << "\n";
    return kExitOk;
}

int cmd_compare(const ProjectConfig& config, const std::string& ref_type,
                const std::string& cmp_type, ShareMode mode) {
    config.validate();
    if (config.replicates < 2) throw UsageError("need >= 2 replicates");
    ensure_out_dir(config);

    const ReplicateSet ref = load_replicates(config, ref_type);
    const ReplicateSet cmp = load_replicates(config, cmp_type);
    const ComparisonReport report = compare_types(ref, cmp, config.analysis, mode, config.jobs);

    const std::string stem =
        sanitize_label(ref_type) + "__" + sanitize_label(cmp_type) + "." + to_string(mode);

    std::ostringstream tsv;
    tsv << "concept_id\tref_consistency\tcmp_consistency\tcross_consistency\tdelta\n";
    for (std::size_t i = 0; i < report.shared_concepts.size(); ++i) {
        tsv << report.shared_concepts[i] << '\t'
            << format_g9(report.reference_consistency[i].value) << '\t'
            << format_g9(report.comparison_consistency[i].value) << '\t'
            << format_g9(report.cross_consistency[i].value) << '\t'
            << format_g9(report.deltas[i].value) << '\n';
    }
    atomic_write(config.out_dir / (stem + ".compare.tsv"), tsv.str());

    const nlohmann::json cell = {
        {"reference_type", ref_type},
        {"comparison_type", cmp_type},
        {"mode", to_string(mode)},
        {"shared_concepts", report.shared_concepts.size()},
        {"means",
         {{"reference", report.means.reference},
          {"comparison", report.means.comparison},
          {"cross", report.means.cross},
          {"delta", report.means.delta}}},
        {"k", config.analysis.k},
        {"threshold", config.analysis.threshold},
        {"replicates", config.replicates},
    };
    atomic_write(config.out_dir / (stem + ".compare.json"), cell.dump(2) + "\n");

    if (report.empty()) {
        std::cout << ref_type << " vs " << cmp_type << ": empty shared concept set\n";
        return kExitEmpty;
    }
    std::cout << ref_type << " vs " << cmp_type << " (" << to_string(mode) << "): "
              << report.shared_concepts.size() << " shared concepts, mean delta "
              << format_g9(report.means.delta) << "\n";
    return kExitOk;
}

int cmd_neighbors(const ProjectConfig& config, const std::string& concept_id,
                  const std::vector<std::string>& doc_types, TargetSpace space, int k,
                  bool emit_distances) {
    config.validate();
    if (k < 1) throw UsageError("k must be >= 1");
    ensure_out_dir(config);

    const std::vector<std::string>& types = doc_types.empty() ? config.doc_types : doc_types;
    std::vector<ReplicateSet> reps;
    reps.reserve(types.size());
    for (const auto& type : types) reps.push_back(load_replicates(config, type));

    // unknown everywhere: suggest the lexicographically nearest known ids
    std::set<std::string> known;
    for (const auto& r : reps) {
        for (const auto& set : r.replicates) {
            const auto& keys = set.concepts.keys();
            known.insert(keys.begin(), keys.end());
        }
    }
    if (!known.count(concept_id)) {
        std::string suggestions;
        auto it = known.lower_bound(concept_id);
        auto lo = it;
        for (int i = 0; i < 3 && lo != known.begin(); ++i) --lo;
        for (int i = 0; i < 6 && lo != known.end(); ++i, ++lo) {
            suggestions += (suggestions.empty() ? "" : ", ") + *lo;
        }
        throw DataError("unknown concept " + concept_id + "; nearest known concept ids: " +
                        (suggestions.empty() ? "(none)" : suggestions));
    }

    const std::vector<std::string> concepts{concept_id};
    const NeighborTable table = neighbor_table(concepts, reps, space, k, config.jobs);

    const std::string stem =
        "neighbors_" + sanitize_label(concept_id) + "." + to_string(space);
    atomic_write(config.out_dir / (stem + ".tsv"), table.to_tsv());
    if (emit_distances) {
        atomic_write(config.out_dir / (stem + ".distances.csv"), table.distances_csv());
    }
    std::cout << table.to_text();
    return kExitOk;
}

namespace {

struct SummaryRow {
    std::string docs, lines, tokens, matches, concepts;
    std::string high_confidence, mean_consistency;
};

}  // namespace

int cmd_report(const ProjectConfig& config) {
    config.validate();
    ensure_out_dir(config);

    // collect per-pair cells
    struct Cell {
        std::string ref, cmp;
        nlohmann::json doc;
    };
    std::vector<Cell> cells;
    std::map<std::string, SummaryRow> summary;
    for (const auto& entry : fs::directory_iterator(config.out_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > 13 && name.ends_with(".compare.json")) {
            std::ifstream in(entry.path());
            nlohmann::json doc;
            try {
                in >> doc;
                cells.push_back({doc.at("reference_type").get<std::string>(),
                                 doc.at("comparison_type").get<std::string>(), doc});
            } catch (const nlohmann::json::exception&) {
                continue;  // foreign file, skip
            }
        } else if (name.ends_with(".stats.tsv")) {
            std::ifstream in(entry.path());
            std::string header, row;
            if (std::getline(in, header) && std::getline(in, row)) {
                std::istringstream fields(row);
                std::string doc_type;
                SummaryRow s;
                if (std::getline(fields, doc_type, '\t') && std::getline(fields, s.docs, '\t') &&
                    std::getline(fields, s.lines, '\t') && std::getline(fields, s.tokens, '\t') &&
                    std::getline(fields, s.matches, '\t') && std::getline(fields, s.concepts)) {
                    auto& target = summary[doc_type];
                    target.docs = s.docs;
                    target.lines = s.lines;
                    target.tokens = s.tokens;
                    target.matches = s.matches;
                    target.concepts = s.concepts;
                }
            }
        } else if (name.ends_with(".high_confidence.json")) {
            std::ifstream in(entry.path());
            nlohmann::json doc;
            try {
                in >> doc;
                auto& target = summary[doc.at("doc_type").get<std::string>()];
                target.high_confidence = std::to_string(doc.at("high_confidence").get<std::size_t>());
                target.mean_consistency = format_g9(doc.at("mean_consistency").get<double>());
            } catch (const nlohmann::json::exception&) {
                continue;
            }
        }
    }

    if (cells.empty() && summary.empty()) {
        std::cout << "nothing to report: out dir has no stats or comparison outputs\n";
        return kExitEmpty;
    }

    // pairwise matrices, one CSV per metric
    std::set<std::string> type_set;
    for (const auto& c : cells) {
        type_set.insert(c.ref);
        type_set.insert(c.cmp);
    }
    const std::vector<std::string> types(type_set.begin(), type_set.end());
    const auto index_of = [&](const std::string& t) {
        return static_cast<std::size_t>(std::lower_bound(types.begin(), types.end(), t) -
                                        types.begin());
    };

    const std::vector<std::pair<std::string, std::string>> metrics = {
        {"shared", "shared_concepts"}, {"reference", "reference"}, {"comparison", "comparison"},
        {"cross", "cross"},            {"delta", "delta"},
    };
    for (const auto& [metric_name, field] : metrics) {
        std::vector<std::vector<std::string>> grid(types.size(),
                                                   std::vector<std::string>(types.size()));
        for (const auto& c : cells) {
            std::string value;
            if (field == "shared_concepts") {
                value = std::to_string(c.doc.at("shared_concepts").get<std::size_t>());
            } else {
                value = format_g9(c.doc.at("means").at(field).get<double>());
            }
            grid[index_of(c.ref)][index_of(c.cmp)] = value;
        }
        std::ostringstream csv;
        csv << "reference\\comparison";
        for (const auto& t : types) csv << ',' << t;
        csv << '\n';
        for (std::size_t r = 0; r < types.size(); ++r) {
            csv << types[r];
            for (std::size_t c = 0; c < types.size(); ++c) csv << ',' << grid[r][c];
            csv << '\n';
        }
        atomic_write(config.out_dir / ("report_matrix_" + metric_name + ".csv"), csv.str());
    }

    std::ostringstream tsv;
    tsv << "doc_type\tdocs\tlines\ttokens\tmatches\tconcepts\thigh_confidence\tmean_consistency\n";
    for (const auto& [doc_type, s] : summary) {
        tsv << doc_type << '\t' << s.docs << '\t' << s.lines << '\t' << s.tokens << '\t'
            << s.matches << '\t' << s.concepts << '\t'
            << (s.high_confidence.empty() ? "-" : s.high_confidence) << '\t'
            << (s.mean_consistency.empty() ? "-" : s.mean_consistency) << '\n';
    }
    atomic_write(config.out_dir / "report_summary.tsv", tsv.str());

    std::cout << "report written for " << summary.size() << " doc types and " << cells.size()
              << " comparisons\n";
    return kExitOk;
}

}  // namespace sublang
