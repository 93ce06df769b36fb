// nsed: subgraph/graph edit distance search engine.
//
// Subcommands: gen-data, oracle, train, embed, index-build, query, eval,
// selftest. Every run emits a manifest with the resolved config, seed and
// output hashes; all randomness flows through the run's single seed, so
// re-running a manifest reproduces its outputs byte for byte.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nsed/datagen.hpp"
#include "nsed/edit_distance.hpp"
#include "nsed/encoder.hpp"
#include "nsed/graph.hpp"
#include "nsed/isomorphism.hpp"
#include "nsed/metric_tree.hpp"
#include "nsed/metrics.hpp"
#include "nsed/tape.hpp"
#include "nsed/trainer.hpp"

using namespace nsed;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot hash missing file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class ManifestWriter {
public:
    ManifestWriter(std::string subcommand, std::uint64_t seed)
        : start_(std::chrono::steady_clock::now()) {
        doc_["subcommand"] = std::move(subcommand);
        doc_["seed"] = seed;
    }
    void config(ordered_json cfg) { doc_["config"] = std::move(cfg); }
    void input(const std::string& path) { doc_["inputs"].push_back(path); }
    void output(const std::string& path) {
        doc_["outputs"].push_back({{"path", path}, {"fnv1a64", hex64(file_hash(path))}});
    }
    void write(const std::string& path) {
        doc_["wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start_)
                              .count();
        std::ofstream out(path, std::ios::binary);
        require(out.good(), "cannot write manifest: " + path);
        out << doc_.dump(2) << '\n';
    }

private:
    ordered_json doc_;
    std::chrono::steady_clock::time_point start_;
};

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("NSED_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 0; // modules pick hardware concurrency
}

DistanceMode parse_mode(const std::string& mode) {
    if (mode == "sed") return DistanceMode::SED;
    if (mode == "ged") return DistanceMode::GED;
    throw ValidationError("mode must be 'sed' or 'ged', got '" + mode + "'");
}

LabelAlphabet alphabet_from_names(const std::vector<std::string>& names) {
    LabelAlphabet a;
    for (const auto& n : names) a.intern(n);
    return a;
}

// ---- gen-data ----

CorpusSpec parse_corpus_spec(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open corpus spec: " + path);
    json doc = json::parse(in, nullptr, false);
    require(!doc.is_discarded() && doc.is_object(), "corpus spec is not a JSON object");

    CorpusSpec spec;
    spec.seed = doc.value("seed", 1ull);
    spec.mode = parse_mode(doc.value("mode", std::string("sed")));
    require(doc.contains("source") && doc["source"].is_object(), "spec needs a source object");
    const auto& src = doc["source"];
    std::string kind = src.value("kind", std::string());
    if (kind == "synthetic-er" || kind == "synthetic-tree") {
        SyntheticSpec syn;
        syn.kind = kind == "synthetic-er" ? SyntheticSpec::Kind::ErdosRenyi
                                          : SyntheticSpec::Kind::RandomTree;
        syn.graph_count = src.value("graphs", 50);
        syn.min_nodes = src.value("min_nodes", 6);
        syn.max_nodes = src.value("max_nodes", 12);
        syn.edge_prob = src.value("edge_prob", 0.25);
        syn.label_count = src.value("labels", 3);
        spec.synthetic = syn;
    } else if (kind == "single-graph") {
        spec.single_graph_path = src.value("path", std::string());
        require(!spec.single_graph_path.empty(), "single-graph source needs a path");
    } else if (kind == "graph-db") {
        spec.graph_db_path = src.value("path", std::string());
        require(!spec.graph_db_path.empty(), "graph-db source needs a path");
    } else {
        throw ValidationError("unknown source kind: '" + kind + "'");
    }
    spec.target_hops = doc.value("target_hops", 2);
    spec.query_depth = doc.value("query_depth", 3);
    spec.query_max_nodes = doc.value("query_max_nodes", 8);
    spec.target_max_nodes = doc.value("target_max_nodes", 12);
    require(doc.contains("pairs") && doc["pairs"].is_object(), "spec needs a pairs object");
    spec.train_pairs = doc["pairs"].value("train", 0);
    spec.val_pairs = doc["pairs"].value("val", 0);
    spec.test_pairs = doc["pairs"].value("test", 0);
    spec.related_fraction = doc.value("related_fraction", 0.5);
    spec.oracle_budget = doc.value("oracle_budget", 2'000'000ull);
    spec.oracle_cap = doc.value("oracle_cap", 24);
    spec.augment_per_pair = doc.value("augment_per_pair", 0);
    return spec;
}

ordered_json corpus_spec_json(const CorpusSpec& spec) {
    ordered_json src;
    if (spec.synthetic) {
        src["kind"] = spec.synthetic->kind == SyntheticSpec::Kind::ErdosRenyi ? "synthetic-er"
                                                                              : "synthetic-tree";
        src["graphs"] = spec.synthetic->graph_count;
        src["min_nodes"] = spec.synthetic->min_nodes;
        src["max_nodes"] = spec.synthetic->max_nodes;
        src["edge_prob"] = spec.synthetic->edge_prob;
        src["labels"] = spec.synthetic->label_count;
    } else if (!spec.single_graph_path.empty()) {
        src["kind"] = "single-graph";
        src["path"] = spec.single_graph_path;
    } else {
        src["kind"] = "graph-db";
        src["path"] = spec.graph_db_path;
    }
    return ordered_json{{"seed", spec.seed},
                        {"mode", spec.mode == DistanceMode::SED ? "sed" : "ged"},
                        {"source", src},
                        {"target_hops", spec.target_hops},
                        {"query_depth", spec.query_depth},
                        {"query_max_nodes", spec.query_max_nodes},
                        {"target_max_nodes", spec.target_max_nodes},
                        {"pairs",
                         ordered_json{{"train", spec.train_pairs},
                                      {"val", spec.val_pairs},
                                      {"test", spec.test_pairs}}},
                        {"related_fraction", spec.related_fraction},
                        {"oracle_budget", spec.oracle_budget},
                        {"oracle_cap", spec.oracle_cap},
                        {"augment_per_pair", spec.augment_per_pair},
                        {"threads", spec.threads}};
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_dir, int threads) {
    CorpusSpec spec = parse_corpus_spec(spec_path);
    spec.threads = resolve_threads(threads);
    ManifestWriter manifest("gen-data", spec.seed);
    manifest.config(corpus_spec_json(spec));
    manifest.input(spec_path);

    Corpus corpus = build_corpus(spec);

    std::filesystem::create_directories(out_dir);
    auto path = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };
    corpus.graphs.save_file(path("graphs.jsonl"));
    save_pairs(path("train.jsonl"), corpus.train);
    save_pairs(path("val.jsonl"), corpus.val);
    save_pairs(path("test.jsonl"), corpus.test);
    for (const char* f : {"graphs.jsonl", "train.jsonl", "val.jsonl", "test.jsonl"})
        manifest.output(path(f));
    manifest.write(path("manifest.json"));
    std::cout << "wrote corpus to " << out_dir << " (" << corpus.graphs.size() << " graphs, "
              << corpus.train.size() << "/" << corpus.val.size() << "/" << corpus.test.size()
              << " pairs)\n";
    return 0;
}

// ---- oracle ----

int cmd_oracle(const std::string& graphs_path, const std::string& pairs_path,
               const std::string& mode_str, std::uint64_t budget, int cap,
               const std::string& out_path, int threads) {
    DistanceMode mode = parse_mode(mode_str);
    GraphStore store = GraphStore::load_file(graphs_path);
    auto samples = load_pairs(pairs_path);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& s : samples) pairs.emplace_back(s.query_id, s.target_id);

    SearchLimits limits;
    limits.max_expansions = budget;
    limits.max_total_nodes = cap;
    auto results = label_pairs(store, pairs, mode, limits, resolve_threads(threads));

    ManifestWriter manifest("oracle", 0);
    manifest.config(ordered_json{{"mode", mode_str}, {"budget", budget}, {"cap", cap}});
    manifest.input(graphs_path);
    manifest.input(pairs_path);

    std::ofstream out(out_path, std::ios::binary);
    require(out.good(), "cannot write oracle output: " + out_path);
    for (const auto& r : results) {
        ordered_json obj{{"q", r.q},
                         {"t", r.t},
                         {"lb", r.lb},
                         {"ub", r.ub},
                         {"expansions", r.expansions},
                         {"complete", r.complete}};
        out << obj.dump() << '\n';
    }
    out.close();
    manifest.output(out_path);
    manifest.write(out_path + ".manifest.json");
    std::cout << "labeled " << results.size() << " pairs -> " << out_path << "\n";
    return 0;
}

// ---- train ----

int cmd_train(const std::string& graphs_path, const std::string& train_path,
              const std::string& val_path, const std::string& mode_str,
              const EncoderConfig& encoder_flags, const TrainConfig& train_flags,
              const std::string& out_path, const std::string& history_path) {
    PredictMode mode = parse_mode(mode_str) == DistanceMode::SED ? PredictMode::SED
                                                                 : PredictMode::GED;
    GraphStore store = GraphStore::load_file(graphs_path);
    auto train_set = load_pairs(train_path);
    auto val_set = load_pairs(val_path);
    require(!train_set.empty(), "training pair file is empty");
    require(!val_set.empty(), "validation pair file is empty");

    EncoderConfig ecfg = encoder_flags;
    ecfg.alphabet_size = store.alphabet().size();
    require(ecfg.alphabet_size >= 1, "graph store has no labels");

    ManifestWriter manifest("train", train_flags.seed);
    manifest.config(ordered_json{
        {"mode", mode_str},
        {"encoder",
         ordered_json{{"alphabet_size", ecfg.alphabet_size},
                      {"gin_layers", ecfg.gin_layers},
                      {"hidden_dim", ecfg.hidden_dim},
                      {"embedding_dim", ecfg.embedding_dim},
                      {"pre_mlp_layers", ecfg.pre_mlp_layers},
                      {"mlp_layers", ecfg.mlp_layers},
                      {"residual_block", ecfg.residual_block},
                      {"eps_learnable", ecfg.eps_learnable}}},
        {"train",
         ordered_json{{"batch_size", train_flags.batch_size},
                      {"max_lr", train_flags.max_lr},
                      {"half_cycle_iters", train_flags.half_cycle_iters},
                      {"weight_decay", train_flags.weight_decay},
                      {"patience_cycles", train_flags.patience_cycles},
                      {"max_cycles", train_flags.max_cycles},
                      {"seed", train_flags.seed},
                      {"loss",
                       train_flags.loss == TrainConfig::Loss::Interval ? "interval" : "mse"}}}});
    manifest.input(graphs_path);
    manifest.input(train_path);
    manifest.input(val_path);

    TrainOutcome outcome = train(store, train_set, val_set, ecfg, train_flags, mode);

    ModelFile model;
    model.mode = mode;
    model.config = ecfg;
    model.alphabet = store.alphabet().names();
    model.params = outcome.params;
    write_model(out_path, model);
    manifest.output(out_path);
    if (!history_path.empty()) {
        write_history_csv(history_path, outcome.history);
        manifest.output(history_path);
    }
    manifest.write(out_path + ".manifest.json");
    std::cout << "trained " << outcome.cycles_run << " cycles, best val loss "
              << outcome.best_val_loss << " -> " << out_path << "\n";
    return 0;
}

// ---- embed ----

int cmd_embed(const std::string& model_path, const std::string& graphs_path,
              const std::string& out_path, bool allow_unknown) {
    ModelFile model = read_model(model_path);
    GraphStore store = GraphStore::load_file(graphs_path);
    require(store.size() >= 1, "no graphs to embed");
    LabelAlphabet model_alphabet = alphabet_from_names(model.alphabet);

    std::vector<const LabeledGraph*> graphs;
    for (const auto& g : store.graphs()) graphs.push_back(&g);
    BatchOptions opts;
    opts.allow_unknown_labels = allow_unknown;
    if (allow_unknown)
        std::cerr << "note: unknown labels embed as zero feature rows (--allow-unknown-labels)\n";
    EmbeddingMatrix z =
        embed_graphs(graphs, store.alphabet(), model.params, model.config, model_alphabet, opts);
    write_embeddings(out_path, z);

    ManifestWriter manifest("embed", 0);
    manifest.config(ordered_json{{"model", model_path}, {"allow_unknown_labels", allow_unknown}});
    manifest.input(model_path);
    manifest.input(graphs_path);
    manifest.output(out_path);
    manifest.write(out_path + ".manifest.json");
    std::cout << "embedded " << z.count() << " graphs (dim " << z.dim << ") -> " << out_path
              << "\n";
    return 0;
}

// ---- index-build ----

int cmd_index_build(const std::string& embeddings_path, const std::string& dist_str, int leaf_cap,
                    std::uint64_t seed, const std::string& out_path) {
    EmbeddingMatrix items = read_embeddings(embeddings_path);
    IndexDistance dist = parse_mode(dist_str) == DistanceMode::SED ? IndexDistance::sed()
                                                                   : IndexDistance::ged();
    MetricTree tree = MetricTree::build(items, dist, leaf_cap, seed);
    tree.save(out_path);

    ManifestWriter manifest("index-build", seed);
    manifest.config(ordered_json{{"dist", dist_str}, {"leaf_cap", leaf_cap}, {"seed", seed}});
    manifest.input(embeddings_path);
    manifest.output(out_path);
    manifest.write(out_path + ".manifest.json");
    std::cout << "built index over " << items.count() << " embeddings (" << tree.node_count()
              << " nodes) -> " << out_path << "\n";
    return 0;
}

// ---- query ----

int cmd_query(const std::string& model_path, const std::string& embeddings_path,
              const std::string& index_path, const std::string& queries_path,
              const std::string& pairs_path, double range_r, int knn_k, bool no_index,
              bool verify_scan, const std::string& out_path) {
    ModelFile model = read_model(model_path);
    LabelAlphabet model_alphabet = alphabet_from_names(model.alphabet);

    std::ofstream out(out_path, std::ios::binary);
    require(out.good(), "cannot write query output: " + out_path);

    ManifestWriter manifest("query", 0);
    manifest.input(model_path);

    if (!pairs_path.empty()) {
        // Prediction mode: one head evaluation per listed pair.
        GraphStore store = GraphStore::load_file(queries_path);
        auto pairs = load_pairs(pairs_path);
        require(!pairs.empty(), "pair file is empty");
        // Predict against the model alphabet, not the store's.
        EncoderConfig cfg = model.config;
        std::vector<double> preds;
        {
            std::vector<const LabeledGraph*> graphs;
            std::map<std::string, int> row_of;
            std::vector<std::pair<int, int>> rows;
            for (const auto& s : pairs) {
                for (const auto* id : {&s.query_id, &s.target_id})
                    if (!row_of.count(*id)) {
                        row_of[*id] = static_cast<int>(graphs.size());
                        graphs.push_back(&store.by_id(*id));
                    }
                rows.emplace_back(row_of[s.query_id], row_of[s.target_id]);
            }
            EmbeddingMatrix z = embed_graphs(graphs, store.alphabet(), model.params, cfg,
                                             model_alphabet);
            for (auto [qr, tr] : rows)
                preds.push_back(model.mode == PredictMode::SED
                                    ? head_sed(z.row(qr), z.row(tr), z.dim)
                                    : head_ged(z.row(qr), z.row(tr), z.dim));
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            ordered_json obj{
                {"q", pairs[i].query_id}, {"t", pairs[i].target_id}, {"pred", preds[i]}};
            out << obj.dump() << '\n';
        }
        out.close();
        manifest.config(ordered_json{{"mode", "pairs"}, {"pairs", pairs_path}});
        manifest.input(queries_path);
        manifest.input(pairs_path);
        manifest.output(out_path);
        manifest.write(out_path + ".manifest.json");
        std::cout << "predicted " << pairs.size() << " pairs -> " << out_path << "\n";
        return 0;
    }

    require(range_r >= 0.0 || knn_k >= 1, "need --range or --knn (or --pairs)");
    require(!embeddings_path.empty(), "need --embeddings for retrieval queries");
    EmbeddingMatrix items = read_embeddings(embeddings_path);
    manifest.input(embeddings_path);
    IndexDistance dist =
        model.mode == PredictMode::SED ? IndexDistance::sed() : IndexDistance::ged();

    std::optional<MetricTree> tree;
    if (!no_index) {
        require(!index_path.empty(), "need --index unless --no-index is set");
        tree = MetricTree::load(index_path);
        require(tree->dist_tag() == dist.tag, "index distance tag disagrees with the model head");
        manifest.input(index_path);
    }

    GraphStore queries = GraphStore::load_file(queries_path);
    require(queries.size() >= 1, "no query graphs");
    manifest.input(queries_path);
    std::vector<const LabeledGraph*> qgraphs;
    for (const auto& g : queries.graphs()) qgraphs.push_back(&g);
    EmbeddingMatrix qz =
        embed_graphs(qgraphs, queries.alphabet(), model.params, model.config, model_alphabet);

    int mismatches = 0;
    QueryStats stats;
    for (int qi = 0; qi < qz.count(); ++qi) {
        const float* q = qz.row(qi);
        ordered_json matches = ordered_json::array();
        if (knn_k >= 1) {
            KnnResult res = tree ? tree->knn_query(items, q, knn_k, dist, &stats)
                                 : linear_scan_knn(items, q, knn_k, dist);
            if (verify_scan && tree) {
                KnnResult scan = linear_scan_knn(items, q, knn_k, dist);
                if (res.items != scan.items) {
                    ++mismatches;
                    std::cerr << "knn mismatch for query " << qz.ids[static_cast<std::size_t>(qi)]
                              << "\n";
                }
            }
            if (res.k_exceeded_items)
                std::cerr << "note: k exceeds corpus size for query "
                          << qz.ids[static_cast<std::size_t>(qi)] << "\n";
            for (auto [id, d] : res.items)
                matches.push_back(
                    ordered_json{{"t", items.ids[static_cast<std::size_t>(id)]}, {"d", d}});
        } else {
            auto res = tree ? tree->range_query(items, q, range_r, dist, &stats)
                            : linear_scan_range(items, q, range_r, dist);
            if (verify_scan && tree) {
                auto scan = linear_scan_range(items, q, range_r, dist);
                if (res != scan) {
                    ++mismatches;
                    std::cerr << "range mismatch for query "
                              << qz.ids[static_cast<std::size_t>(qi)] << ": tree/" << res.size()
                              << " vs scan/" << scan.size() << "\n";
                }
            }
            // Report in ascending (distance, id) order.
            std::vector<std::pair<double, int>> ordered;
            for (int id : res) ordered.emplace_back(dist(q, items.row(id), items.dim), id);
            std::sort(ordered.begin(), ordered.end());
            for (auto [d, id] : ordered)
                matches.push_back(
                    ordered_json{{"t", items.ids[static_cast<std::size_t>(id)]}, {"d", d}});
        }
        ordered_json obj{{"q", qz.ids[static_cast<std::size_t>(qi)]}, {"matches", matches}};
        out << obj.dump() << '\n';
    }
    out.close();

    manifest.config(ordered_json{{"range", range_r},
                                 {"knn", knn_k},
                                 {"no_index", no_index},
                                 {"verify_scan", verify_scan},
                                 {"pruned_subtrees", stats.pruned_subtrees},
                                 {"distance_evals", stats.distance_evals}});
    manifest.output(out_path);
    manifest.write(out_path + ".manifest.json");
    if (verify_scan)
        std::cout << (mismatches == 0 ? "verify-scan: tree equals linear scan\n"
                                      : "verify-scan: MISMATCH\n");
    require(mismatches == 0, "tree and linear scan disagreed");
    std::cout << "answered " << qz.count() << " queries -> " << out_path << "\n";
    return 0;
}

// ---- eval ----

int cmd_eval(const std::string& predictions_path, const std::string& truths_path,
             const std::vector<std::string>& metrics, int k,
             const std::vector<double>& threshold_pcts, const std::string& out_path,
             const std::string& per_query_path) {
    auto truths = load_pairs(truths_path);
    require(!truths.empty(), "truth file is empty");

    std::ifstream in(predictions_path);
    require(in.good(), "cannot open predictions: " + predictions_path);
    std::map<std::pair<std::string, std::string>, double> preds;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        require(!obj.is_discarded() && obj.contains("q") && obj.contains("t") &&
                    obj.contains("pred"),
                "line " + std::to_string(line_no) + ": bad prediction record");
        preds[{obj["q"].get<std::string>(), obj["t"].get<std::string>()}] =
            obj["pred"].get<double>();
    }

    ScoredPairs scored;
    std::map<std::string, ScoredPairs> by_query;
    for (const auto& s : truths) {
        auto it = preds.find({s.query_id, s.target_id});
        require(it != preds.end(),
                "missing prediction for pair (" + s.query_id + ", " + s.target_id + ")");
        const double truth = (s.lb + s.ub) / 2.0;
        scored.predicted.push_back(it->second);
        scored.truth.push_back(truth);
        by_query[s.query_id].predicted.push_back(it->second);
        by_query[s.query_id].truth.push_back(truth);
    }

    auto want = [&](const char* name) {
        return metrics.empty() || std::find(metrics.begin(), metrics.end(), name) != metrics.end();
    };

    ordered_json report;
    if (want("rmse")) report["rmse"] = rmse(scored);
    if (want("mae")) report["mae"] = mae(scored);
    if (want("r2")) {
        try {
            report["r2"] = r2(scored);
        } catch (const ValidationError&) {
            report["r2"] = nullptr;
        }
    }
    if (want("tau")) {
        try {
            report["kendall_tau"] = kendall_tau(scored.predicted, scored.truth);
        } catch (const ValidationError&) {
            report["kendall_tau"] = nullptr;
        }
    }
    if (want("p@k")) {
        double acc = 0.0;
        int used = 0;
        for (const auto& [qid, sp] : by_query) {
            if (static_cast<int>(sp.predicted.size()) < k) continue;
            acc += precision_at_k(sp.predicted, sp.truth, k);
            ++used;
        }
        report["precision_at_k"] = used > 0 ? ordered_json(acc / used) : ordered_json(nullptr);
        report["precision_at_k_queries"] = used;
        report["k"] = k;
    }
    if (want("f1")) {
        const double max_truth = *std::max_element(scored.truth.begin(), scored.truth.end());
        ordered_json f1s = ordered_json::array();
        for (double pct : threshold_pcts) {
            RangeF1 r = range_f1(scored.predicted, scored.truth, max_truth * pct / 100.0);
            f1s.push_back(ordered_json{{"threshold_pct", pct},
                                       {"threshold", max_truth * pct / 100.0},
                                       {"f1", r.f1},
                                       {"degenerate", r.degenerate}});
        }
        report["range_f1"] = f1s;
    }
    report["pairs"] = scored.predicted.size();

    std::ofstream out(out_path, std::ios::binary);
    require(out.good(), "cannot write eval report: " + out_path);
    out << report.dump(2) << '\n';
    out.close();

    if (!per_query_path.empty()) {
        std::ofstream pq(per_query_path, std::ios::binary);
        require(pq.good(), "cannot write per-query report: " + per_query_path);
        pq << "query,pairs,rmse,mae\n";
        for (const auto& [qid, sp] : by_query)
            pq << qid << ',' << sp.predicted.size() << ',' << rmse(sp) << ',' << mae(sp) << '\n';
    }

    ManifestWriter manifest("eval", 0);
    manifest.config(ordered_json{{"metrics", metrics}, {"k", k}});
    manifest.input(predictions_path);
    manifest.input(truths_path);
    manifest.output(out_path);
    manifest.write(out_path + ".manifest.json");
    std::cout << report.dump(2) << '\n';
    return 0;
}

// ---- selftest ----

struct SelftestScale {
    int vector_triples;
    int graph_triples;
    int index_items;
    int index_queries;
};

int cmd_selftest(const std::string& level, std::uint64_t seed, bool inject_failure) {
    require(level == "quick" || level == "full", "selftest level must be quick or full");
    SelftestScale scale = level == "full" ? SelftestScale{10000, 60, 800, 40}
                                          : SelftestScale{2000, 20, 300, 15};
    Rng rng(seed);
    int failures = 0;
    auto suite = [&](const char* name, bool ok) {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
        if (!ok) ++failures;
    };

    // Head triangle inequalities and metric axioms on random vectors.
    {
        bool ok = true;
        const int dim = 64;
        std::vector<float> a(dim), b(dim), c(dim);
        for (int t = 0; t < scale.vector_triples; ++t) {
            for (auto& v : a) v = static_cast<float>(rng.normal());
            for (auto& v : b) v = static_cast<float>(rng.normal());
            for (auto& v : c) v = static_cast<float>(rng.normal());
            double slack = inject_failure ? -1e-3 : 1e-6;
            ok &= head_sed(a.data(), c.data(), dim) <=
                  head_sed(a.data(), b.data(), dim) + head_sed(b.data(), c.data(), dim) + slack;
            ok &= head_ged(a.data(), b.data(), dim) == head_ged(b.data(), a.data(), dim);
            ok &= head_ged(a.data(), c.data(), dim) <=
                  head_ged(a.data(), b.data(), dim) + head_ged(b.data(), c.data(), dim) + slack;
        }
        suite("embedding heads: triangle inequality + metric axioms", ok);
    }

    // Exact oracle properties, including the SED-as-GED route against an
    // independent subgraph-isomorphism zero test.
    {
        bool ok = true;
        auto sedp = DistancePolicy::sed();
        auto gedp = DistancePolicy::ged();
        SyntheticSpec syn;
        syn.min_nodes = 2;
        syn.max_nodes = 5;
        syn.label_count = 2;
        LabelAlphabet alpha;
        for (int t = 0; t < scale.graph_triples; ++t) {
            LabeledGraph g1 = synthetic_graph(syn, alpha, rng);
            LabeledGraph g2 = synthetic_graph(syn, alpha, rng);
            LabeledGraph g3 = synthetic_graph(syn, alpha, rng);
            ok &= verify_sed_triangle(g1, g2, g3, sedp) == TriangleCheck::Holds;
            auto ab = exact_ged(g1, g2, gedp);
            auto ba = exact_ged(g2, g1, gedp);
            ok &= ab.complete && ba.complete && ab.bounds.upper == ba.bounds.upper;
            ok &= exact_ged(g1, g1, gedp).bounds.upper == 0.0;
            bool sed_zero = exact_sed(g1, g2, sedp).bounds.upper == 0.0;
            if (inject_failure) sed_zero = !sed_zero;
            ok &= sed_zero == subgraph_isomorphic(g1, g2);
        }
        suite("exact oracle: SED triangle, GED symmetry, identity", ok);
    }

    // Gradient check of the full pipeline at small width.
    {
        EncoderConfig cfg;
        cfg.alphabet_size = 2;
        cfg.gin_layers = 2;
        cfg.hidden_dim = 6;
        cfg.embedding_dim = 6;
        SyntheticSpec syn;
        syn.min_nodes = 3;
        syn.max_nodes = 5;
        syn.label_count = 2;
        LabelAlphabet alpha;
        LabeledGraph q = synthetic_graph(syn, alpha, rng);
        LabeledGraph t = synthetic_graph(syn, alpha, rng);
        GraphBatch batch = build_batch({&q, &t}, alpha, alpha);
        Rng init(seed ^ 0xabcd);
        auto params64 = init_params<double>(cfg, init);
        std::vector<Matrix<double>> flat;
        for (const auto* m : param_tensors(params64)) flat.push_back(*m);

        auto build = [&](Tape<double>& tape, const std::vector<int>& leaves) {
            StagedParams<double> staged;
            std::size_t idx = 0;
            for (std::size_t l = 0; l < params64.pre_w.size(); ++l) {
                staged.pre_w.push_back(leaves[idx++]);
                staged.pre_b.push_back(leaves[idx++]);
            }
            staged.gin_w.resize(params64.gin_w.size());
            staged.gin_b.resize(params64.gin_b.size());
            for (std::size_t i = 0; i < params64.gin_w.size(); ++i) {
                staged.eps.push_back(leaves[idx++]);
                for (std::size_t l = 0; l < params64.gin_w[i].size(); ++l) {
                    staged.gin_w[i].push_back(leaves[idx++]);
                    staged.gin_b[i].push_back(leaves[idx++]);
                }
            }
            for (std::size_t l = 0; l < params64.post_w.size(); ++l) {
                staged.post_w.push_back(leaves[idx++]);
                staged.post_b.push_back(leaves[idx++]);
            }
            auto z = embed_on_tape(tape, batch, staged, cfg);
            auto zq = tape.gather_rows(z, {0});
            auto zt = tape.gather_rows(z, {1});
            auto pred = tape.relu_diff_norm(zq, zt);
            Matrix<double> lb(1, 1), ub(1, 1);
            lb.at(0, 0) = 0.5;
            ub.at(0, 0) = 1.5;
            auto over = tape.relu(tape.sub(pred, tape.leaf(ub)));
            auto under = tape.relu(tape.sub(tape.leaf(lb), pred));
            return tape.mean_all(tape.add(tape.square(over), tape.square(under)));
        };
        auto report = grad_check(build, flat, 1e-4);
        double limit = inject_failure ? 1e-12 : 1e-4;
        bool ok = report.checked > 0 && report.max_rel_error < limit;
        suite("gradient check: encoder + head + interval loss", ok);
    }

    // Index scan equivalence on both heads.
    {
        bool ok = true;
        EmbeddingMatrix items;
        items.dim = 16;
        for (int i = 0; i < scale.index_items; ++i) {
            items.ids.push_back("i" + std::to_string(i));
            for (int d = 0; d < items.dim; ++d)
                items.data.push_back(static_cast<float>(rng.normal()));
        }
        for (auto dist : {IndexDistance::sed(), IndexDistance::ged()}) {
            MetricTree tree = MetricTree::build(items, dist, 8, seed);
            for (int t = 0; t < scale.index_queries; ++t) {
                std::vector<float> q(static_cast<std::size_t>(items.dim));
                for (auto& v : q) v = static_cast<float>(rng.normal());
                double r = rng.uniform_real() * 4.0;
                auto a = tree.range_query(items, q.data(), r, dist);
                auto b = linear_scan_range(items, q.data(), inject_failure ? r + 1e-4 : r, dist);
                ok &= a == b;
                auto ka = tree.knn_query(items, q.data(), 10, dist);
                auto kb = linear_scan_knn(items, q.data(), 10, dist);
                ok &= ka.items == kb.items;
            }
        }
        suite("metric tree: range/knn equals linear scan", ok);
    }

    std::cout << (failures == 0 ? "selftest: all suites passed\n"
                                : "selftest: FAILURES present\n");
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nsed: neural subgraph/graph edit distance search"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "cap worker threads (env NSED_THREADS)");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a labeled corpus from a spec file");
    std::string gen_spec, gen_out;
    gen->add_option("--spec", gen_spec, "corpus spec JSON")->required();
    gen->add_option("--out", gen_out, "output directory")->required();

    // oracle
    auto* oracle = app.add_subcommand("oracle", "exactly label (query,target) pairs");
    std::string or_graphs, or_pairs, or_mode = "sed", or_out;
    std::uint64_t or_budget = 2'000'000;
    int or_cap = 24;
    oracle->add_option("--graphs", or_graphs, "graph store JSONL")->required();
    oracle->add_option("--pairs", or_pairs, "pair JSONL with q/t ids")->required();
    oracle->add_option("--mode", or_mode, "sed|ged");
    oracle->add_option("--budget", or_budget, "branch-and-bound node budget per pair");
    oracle->add_option("--cap", or_cap, "max |Vq|+|Vt| guard");
    oracle->add_option("--out", or_out, "labeled output JSONL")->required();

    // train
    auto* tr = app.add_subcommand("train", "train the siamese encoder");
    std::string tr_graphs, tr_train, tr_val, tr_mode = "sed", tr_out, tr_history;
    EncoderConfig tr_ecfg;
    TrainConfig tr_tcfg;
    std::string tr_loss = "interval";
    bool tr_freeze_eps = false;
    tr->add_option("--graphs", tr_graphs)->required();
    tr->add_option("--train", tr_train)->required();
    tr->add_option("--val", tr_val)->required();
    tr->add_option("--mode", tr_mode, "sed|ged");
    tr->add_option("--out", tr_out, "model file")->required();
    tr->add_option("--history", tr_history, "training history CSV");
    tr->add_option("--gin-layers", tr_ecfg.gin_layers);
    tr->add_option("--hidden-dim", tr_ecfg.hidden_dim);
    tr->add_option("--embedding-dim", tr_ecfg.embedding_dim);
    tr->add_option("--pre-mlp-layers", tr_ecfg.pre_mlp_layers);
    tr->add_option("--mlp-layers", tr_ecfg.mlp_layers);
    tr->add_option("--residual-block", tr_ecfg.residual_block);
    tr->add_flag("--freeze-eps", tr_freeze_eps, "keep the per-layer eps fixed at 0");
    tr->add_option("--batch-size", tr_tcfg.batch_size);
    tr->add_option("--max-lr", tr_tcfg.max_lr);
    tr->add_option("--half-cycle", tr_tcfg.half_cycle_iters);
    tr->add_option("--weight-decay", tr_tcfg.weight_decay);
    tr->add_option("--patience", tr_tcfg.patience_cycles);
    tr->add_option("--max-cycles", tr_tcfg.max_cycles);
    tr->add_option("--seed", tr_tcfg.seed);
    tr->add_option("--loss", tr_loss, "interval|mse");
    tr->add_option("--clip-norm", tr_tcfg.clip_norm);

    // embed
    auto* em = app.add_subcommand("embed", "embed graphs with a trained model");
    std::string em_model, em_graphs, em_out;
    bool em_allow_unknown = false;
    em->add_option("--model", em_model)->required();
    em->add_option("--graphs", em_graphs)->required();
    em->add_option("--out", em_out)->required();
    em->add_flag("--allow-unknown-labels", em_allow_unknown,
                 "map out-of-alphabet labels to zero rows instead of failing");

    // index-build
    auto* ib = app.add_subcommand("index-build", "build the metric-tree index");
    std::string ib_embeddings, ib_dist = "sed", ib_out;
    int ib_leaf_cap = 8;
    std::uint64_t ib_seed = 1;
    ib->add_option("--embeddings", ib_embeddings)->required();
    ib->add_option("--dist", ib_dist, "sed|ged");
    ib->add_option("--leaf-cap", ib_leaf_cap);
    ib->add_option("--seed", ib_seed);
    ib->add_option("--out", ib_out)->required();

    // query
    auto* qc = app.add_subcommand("query", "range/k-NN retrieval or pair prediction");
    std::string q_model, q_embeddings, q_index, q_queries, q_pairs, q_out;
    double q_range = -1.0;
    int q_knn = 0;
    bool q_no_index = false, q_verify = false;
    qc->add_option("--model", q_model)->required();
    qc->add_option("--embeddings", q_embeddings);
    qc->add_option("--index", q_index);
    qc->add_option("--queries", q_queries, "query graphs JSONL (or graph store for --pairs)")
        ->required();
    qc->add_option("--pairs", q_pairs, "predict these (q,t) pairs instead of retrieving");
    qc->add_option("--range", q_range, "range query threshold");
    qc->add_option("--knn", q_knn, "k nearest neighbors");
    qc->add_flag("--no-index", q_no_index, "linear scan instead of the tree");
    qc->add_flag("--verify-scan", q_verify, "run both paths and fail on any difference");
    qc->add_option("--out", q_out)->required();

    // eval
    auto* ev = app.add_subcommand("eval", "score predictions against truths");
    std::string ev_pred, ev_truth, ev_out, ev_per_query;
    std::vector<std::string> ev_metrics;
    std::vector<double> ev_pcts{1, 5, 10, 15, 20};
    int ev_k = 10;
    ev->add_option("--predictions", ev_pred)->required();
    ev->add_option("--truths", ev_truth)->required();
    ev->add_option("--metrics", ev_metrics, "subset of rmse,mae,r2,tau,p@k,f1 (default all)");
    ev->add_option("--k", ev_k, "k for precision@k");
    ev->add_option("--threshold-pcts", ev_pcts, "range-F1 thresholds as % of max truth");
    ev->add_option("--out", ev_out)->required();
    ev->add_option("--per-query", ev_per_query, "per-query CSV breakdown");

    // selftest
    auto* st = app.add_subcommand("selftest", "run the property suites");
    std::string st_level = "quick";
    std::uint64_t st_seed = 1;
    bool st_inject = false;
    st->add_option("--level", st_level, "quick|full");
    st->add_option("--seed", st_seed);
    st->add_flag("--inject-failure", st_inject, "deliberately break one check (harness test)");

    try {
        app.parse(argc, argv);
        if (*gen) return cmd_gen_data(gen_spec, gen_out, threads);
        if (*oracle)
            return cmd_oracle(or_graphs, or_pairs, or_mode, or_budget, or_cap, or_out, threads);
        if (*tr) {
            require(tr_loss == "mse" || tr_loss == "interval", "loss must be interval or mse");
            tr_tcfg.loss = tr_loss == "mse" ? TrainConfig::Loss::Mse : TrainConfig::Loss::Interval;
            tr_ecfg.eps_learnable = !tr_freeze_eps;
            return cmd_train(tr_graphs, tr_train, tr_val, tr_mode, tr_ecfg, tr_tcfg, tr_out,
                             tr_history);
        }
        if (*em) return cmd_embed(em_model, em_graphs, em_out, em_allow_unknown);
        if (*ib) return cmd_index_build(ib_embeddings, ib_dist, ib_leaf_cap, ib_seed, ib_out);
        if (*qc)
            return cmd_query(q_model, q_embeddings, q_index, q_queries, q_pairs, q_range, q_knn,
                             q_no_index, q_verify, q_out);
        if (*ev)
            return cmd_eval(ev_pred, ev_truth, ev_metrics, ev_k, ev_pcts, ev_out, ev_per_query);
        if (*st) return cmd_selftest(st_level, st_seed, st_inject);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ContractError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
