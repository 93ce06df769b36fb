#include "nsed/encoder.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "nsed/io_util.hpp"

namespace nsed {

using nlohmann::json;

void EncoderConfig::validate() const {
    contract(alphabet_size >= 1, "encoder alphabet_size must be >= 1");
    contract(gin_layers >= 1, "encoder gin_layers must be >= 1");
    contract(hidden_dim >= 1 && embedding_dim >= 1, "encoder dims must be >= 1");
    contract(pre_mlp_layers >= 1 && mlp_layers >= 1, "encoder MLP depths must be >= 1");
    contract(residual_block >= 0, "residual_block must be >= 0");
}

std::vector<bool> param_trainable(const EncoderConfig& cfg) {
    std::vector<bool> out;
    for (int l = 0; l < cfg.pre_mlp_layers; ++l) {
        out.push_back(true);
        out.push_back(true);
    }
    for (int i = 0; i < cfg.gin_layers; ++i) {
        out.push_back(cfg.eps_learnable);
        for (int l = 0; l < cfg.mlp_layers; ++l) {
            out.push_back(true);
            out.push_back(true);
        }
    }
    for (int l = 0; l < cfg.mlp_layers; ++l) {
        out.push_back(true);
        out.push_back(true);
    }
    return out;
}

GraphBatch build_batch(const std::vector<const LabeledGraph*>& graphs,
                       const LabelAlphabet& graph_alphabet, const LabelAlphabet& model_alphabet,
                       const BatchOptions& opts) {
    require(!graphs.empty(), "cannot build an empty batch");

    // Source alphabet id -> model alphabet id (-1: unknown).
    std::vector<int> remap(static_cast<std::size_t>(graph_alphabet.size()), -1);
    for (int i = 0; i < graph_alphabet.size(); ++i) {
        auto id = model_alphabet.id_of(graph_alphabet.name(i));
        if (id) remap[static_cast<std::size_t>(i)] = *id;
    }

    GraphBatch batch;
    batch.graph_count = static_cast<int>(graphs.size());
    int offset = 0;
    for (int gi = 0; gi < batch.graph_count; ++gi) {
        const LabeledGraph& g = *graphs[static_cast<std::size_t>(gi)];
        for (int v = 0; v < g.node_count(); ++v) {
            int mapped = remap[static_cast<std::size_t>(g.label(v))];
            if (mapped < 0 && !opts.allow_unknown_labels)
                throw ValidationError("label \"" + graph_alphabet.name(g.label(v)) +
                                      "\" is not in the model alphabet");
            batch.labels.push_back(mapped);
            batch.node_to_graph.push_back(gi);
        }
        for (auto [u, v] : g.edges()) {
            batch.edge_src.push_back(offset + u);
            batch.edge_dst.push_back(offset + v);
            batch.edge_src.push_back(offset + v);
            batch.edge_dst.push_back(offset + u);
        }
        batch.graph_node_counts.push_back(g.node_count());
        offset += g.node_count();
    }
    batch.total_nodes = offset;

    // Sort the directed pairs by (dst, src): aggregation order then depends
    // only on each graph's own structure.
    std::vector<int> order(batch.edge_src.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (batch.edge_dst[static_cast<std::size_t>(a)] !=
            batch.edge_dst[static_cast<std::size_t>(b)])
            return batch.edge_dst[static_cast<std::size_t>(a)] <
                   batch.edge_dst[static_cast<std::size_t>(b)];
        return batch.edge_src[static_cast<std::size_t>(a)] <
               batch.edge_src[static_cast<std::size_t>(b)];
    });
    std::vector<int> src, dst;
    src.reserve(order.size());
    dst.reserve(order.size());
    for (int i : order) {
        src.push_back(batch.edge_src[static_cast<std::size_t>(i)]);
        dst.push_back(batch.edge_dst[static_cast<std::size_t>(i)]);
    }
    batch.edge_src = std::move(src);
    batch.edge_dst = std::move(dst);
    return batch;
}

EmbeddingMatrix embed_graphs(const std::vector<const LabeledGraph*>& graphs,
                             const LabelAlphabet& graph_alphabet, const EncoderParams& params,
                             const EncoderConfig& cfg, const LabelAlphabet& model_alphabet,
                             const BatchOptions& opts) {
    require(!graphs.empty(), "no graphs to embed");
    EmbeddingMatrix out;
    out.dim = cfg.embedding_dim;
    out.data.reserve(graphs.size() * static_cast<std::size_t>(cfg.embedding_dim));

    // Chunked so huge corpora do not hold every intermediate at once. Chunk
    // boundaries cannot change per-graph results; embeddings are
    // batch-independent by construction.
    const int kChunkNodes = 50'000;
    std::size_t begin = 0;
    while (begin < graphs.size()) {
        std::size_t end = begin;
        int nodes = 0;
        while (end < graphs.size() &&
               (nodes == 0 || nodes + graphs[end]->node_count() <= kChunkNodes)) {
            nodes += graphs[end]->node_count();
            ++end;
        }
        std::vector<const LabeledGraph*> chunk(graphs.begin() + static_cast<std::ptrdiff_t>(begin),
                                               graphs.begin() + static_cast<std::ptrdiff_t>(end));
        GraphBatch batch = build_batch(chunk, graph_alphabet, model_alphabet, opts);
        Tape<float> tape;
        auto staged = stage_params(tape, params, cfg);
        auto z = embed_on_tape(tape, batch, staged, cfg);
        tape.check_finite(z);
        const auto& Z = tape.value(z);
        out.data.insert(out.data.end(), Z.data.begin(), Z.data.end());
        for (const auto* g : chunk) out.ids.push_back(g->id());
        begin = end;
    }
    return out;
}

double head_sed(const float* zq, const float* zt, int dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        double d = static_cast<double>(zq[i]) - static_cast<double>(zt[i]);
        if (d > 0.0) acc += d * d;
    }
    return std::sqrt(acc);
}

double head_ged(const float* z1, const float* z2, int dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        double d = static_cast<double>(z1[i]) - static_cast<double>(z2[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

double predict(const LabeledGraph& gq, const LabeledGraph& gt, const LabelAlphabet& graph_alphabet,
               const ModelFile& model, const BatchOptions& opts) {
    LabelAlphabet model_alphabet;
    for (const auto& name : model.alphabet) model_alphabet.intern(name);
    EmbeddingMatrix z =
        embed_graphs({&gq, &gt}, graph_alphabet, model.params, model.config, model_alphabet, opts);
    return model.mode == PredictMode::SED ? head_sed(z.row(0), z.row(1), z.dim)
                                          : head_ged(z.row(0), z.row(1), z.dim);
}

void write_model(const std::string& path, const ModelFile& model) {
    model.config.validate();
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write model file: " + path);
    out.write("NSED", 4);
    io::write_u32(out, 1); // format version
    io::write_u32(out, model.mode == PredictMode::SED ? 0u : 1u);
    const auto& c = model.config;
    io::write_u32(out, static_cast<std::uint32_t>(c.alphabet_size));
    io::write_u32(out, static_cast<std::uint32_t>(c.gin_layers));
    io::write_u32(out, static_cast<std::uint32_t>(c.hidden_dim));
    io::write_u32(out, static_cast<std::uint32_t>(c.embedding_dim));
    io::write_u32(out, static_cast<std::uint32_t>(c.pre_mlp_layers));
    io::write_u32(out, static_cast<std::uint32_t>(c.mlp_layers));
    io::write_u32(out, static_cast<std::uint32_t>(c.residual_block));
    io::write_u8(out, c.eps_learnable ? 1 : 0);
    io::write_u8(out, c.canonical_aggregation ? 1 : 0);
    io::write_u32(out, static_cast<std::uint32_t>(model.alphabet.size()));
    for (const auto& name : model.alphabet) io::write_string(out, name);

    auto tensors = param_tensors(model.params);
    std::uint64_t total = 0;
    for (const auto* t : tensors) total += t->size();
    io::write_u64(out, total);
    for (const auto* t : tensors) io::write_f32_array(out, t->data);
    require(out.good(), "short write to model file: " + path);

    json sidecar;
    sidecar["mode"] = model.mode == PredictMode::SED ? "sed" : "ged";
    sidecar["config"] = {{"alphabet_size", c.alphabet_size},
                         {"gin_layers", c.gin_layers},
                         {"hidden_dim", c.hidden_dim},
                         {"embedding_dim", c.embedding_dim},
                         {"pre_mlp_layers", c.pre_mlp_layers},
                         {"mlp_layers", c.mlp_layers},
                         {"residual_block", c.residual_block},
                         {"eps_learnable", c.eps_learnable},
                         {"canonical_aggregation", c.canonical_aggregation}};
    sidecar["alphabet"] = model.alphabet;
    sidecar["parameter_count"] = total;
    std::ofstream side(path + ".json");
    require(side.good(), "cannot write model sidecar: " + path + ".json");
    side << sidecar.dump(2) << '\n';
}

ModelFile read_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open model file: " + path);
    char magic[4];
    in.read(magic, 4);
    require(in.good() && std::memcmp(magic, "NSED", 4) == 0, "not an NSED model file: " + path);
    std::uint32_t version = io::read_u32(in);
    require(version == 1, "unsupported NSED model version " + std::to_string(version));

    ModelFile model;
    model.mode = io::read_u32(in) == 0 ? PredictMode::SED : PredictMode::GED;
    auto& c = model.config;
    c.alphabet_size = static_cast<int>(io::read_u32(in));
    c.gin_layers = static_cast<int>(io::read_u32(in));
    c.hidden_dim = static_cast<int>(io::read_u32(in));
    c.embedding_dim = static_cast<int>(io::read_u32(in));
    c.pre_mlp_layers = static_cast<int>(io::read_u32(in));
    c.mlp_layers = static_cast<int>(io::read_u32(in));
    c.residual_block = static_cast<int>(io::read_u32(in));
    c.eps_learnable = io::read_u8(in) != 0;
    c.canonical_aggregation = io::read_u8(in) != 0;
    c.validate();

    std::uint32_t alphabet_size = io::read_u32(in);
    require(static_cast<int>(alphabet_size) == c.alphabet_size,
            "model alphabet length disagrees with config");
    for (std::uint32_t i = 0; i < alphabet_size; ++i) model.alphabet.push_back(io::read_string(in));

    // Materialize tensors with the config's shapes, then fill in order.
    Rng throwaway(1);
    model.params = init_params<float>(c, throwaway);
    auto tensors = param_tensors(model.params);
    std::uint64_t total = io::read_u64(in);
    std::uint64_t expect = 0;
    for (const auto* t : tensors) expect += t->size();
    require(total == expect, "model parameter count mismatch");
    for (auto* t : tensors) t->data = io::read_f32_array(in, t->size());
    return model;
}

} // namespace nsed
