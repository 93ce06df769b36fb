#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nsed/embedding.hpp"
#include "nsed/graph.hpp"
#include "nsed/rng.hpp"
#include "nsed/tape.hpp"

namespace nsed {

// Architecture: Pre-MLP -> k GIN layers (sum aggregation, learnable eps,
// identity residual after every residual_block layers) -> per-node concat of
// all layer outputs -> sum-pool -> Post-MLP. One parameter set is shared by
// every graph passed through it; that weight sharing is what makes the
// prediction heads' guarantees compose.
struct EncoderConfig {
    int alphabet_size = 0;
    int gin_layers = 8;
    int hidden_dim = 64;
    int embedding_dim = 64;
    int pre_mlp_layers = 1;
    int mlp_layers = 2;
    int residual_block = 2;
    bool eps_learnable = true;
    // Accumulate each aggregation segment in value order instead of index
    // order; embeddings then survive node re-indexing bit-for-bit.
    bool canonical_aggregation = false;

    void validate() const;
};

template <typename Real>
struct EncoderParamsT {
    std::vector<Matrix<Real>> pre_w, pre_b;               // pre-MLP layers
    std::vector<std::vector<Matrix<Real>>> gin_w, gin_b;  // [gin layer][mlp layer]
    std::vector<Matrix<Real>> eps;                        // 1x1 per gin layer
    std::vector<Matrix<Real>> post_w, post_b;

    template <typename Other>
    EncoderParamsT<Other> cast() const {
        EncoderParamsT<Other> out;
        for (const auto& m : pre_w) out.pre_w.push_back(m.template cast<Other>());
        for (const auto& m : pre_b) out.pre_b.push_back(m.template cast<Other>());
        out.gin_w.resize(gin_w.size());
        out.gin_b.resize(gin_b.size());
        for (std::size_t i = 0; i < gin_w.size(); ++i) {
            for (const auto& m : gin_w[i]) out.gin_w[i].push_back(m.template cast<Other>());
            for (const auto& m : gin_b[i]) out.gin_b[i].push_back(m.template cast<Other>());
        }
        for (const auto& m : eps) out.eps.push_back(m.template cast<Other>());
        for (const auto& m : post_w) out.post_w.push_back(m.template cast<Other>());
        for (const auto& m : post_b) out.post_b.push_back(m.template cast<Other>());
        return out;
    }
};

using EncoderParams = EncoderParamsT<float>;

// Glorot-uniform weights, zero biases, eps = 0.
template <typename Real>
EncoderParamsT<Real> init_params(const EncoderConfig& cfg, Rng& rng);

// Flat views over every parameter tensor, in the serialization order:
// pre-MLP (W, b per layer), per GIN layer (eps, then W, b per MLP layer),
// post-MLP (W, b per layer).
template <typename Real>
std::vector<Matrix<Real>*> param_tensors(EncoderParamsT<Real>& p);
template <typename Real>
std::vector<const Matrix<Real>*> param_tensors(const EncoderParamsT<Real>& p);
// Parallel to param_tensors: false marks tensors the optimizer must freeze
// (eps when eps_learnable is off).
std::vector<bool> param_trainable(const EncoderConfig& cfg);

// Batched encoder input: one-hot features appear implicitly via labels.
// Edge endpoints are global row indices, listed bidirectionally and sorted
// by (dst, src) so aggregation order is a pure function of each graph's own
// structure (batch composition can never change a graph's embedding).
struct GraphBatch {
    int graph_count = 0;
    int total_nodes = 0;
    std::vector<int> labels;        // model-alphabet ids; -1 = unknown-as-zero
    std::vector<int> node_to_graph; // segment index for pooling
    std::vector<int> edge_src, edge_dst;
    std::vector<int> graph_node_counts;
};

struct BatchOptions {
    bool allow_unknown_labels = false; // unknown labels become zero rows when set
};

GraphBatch build_batch(const std::vector<const LabeledGraph*>& graphs,
                       const LabelAlphabet& graph_alphabet, const LabelAlphabet& model_alphabet,
                       const BatchOptions& opts = {});

// Forward pass on a tape; returns the graph_count x embedding_dim node.
template <typename Real>
struct StagedParams {
    std::vector<typename Tape<Real>::NodeId> pre_w, pre_b;
    std::vector<std::vector<typename Tape<Real>::NodeId>> gin_w, gin_b;
    std::vector<typename Tape<Real>::NodeId> eps;
    std::vector<typename Tape<Real>::NodeId> post_w, post_b;
    std::vector<typename Tape<Real>::NodeId> all; // same order as param_tensors
};

template <typename Real>
StagedParams<Real> stage_params(Tape<Real>& tape, const EncoderParamsT<Real>& params,
                                const EncoderConfig& cfg);

template <typename Real>
typename Tape<Real>::NodeId embed_on_tape(Tape<Real>& tape, const GraphBatch& batch,
                                          const StagedParams<Real>& staged,
                                          const EncoderConfig& cfg);

// Plain inference: embeds graphs with 32-bit arithmetic (the precision the
// NSEM container and index path use).
EmbeddingMatrix embed_graphs(const std::vector<const LabeledGraph*>& graphs,
                             const LabelAlphabet& graph_alphabet, const EncoderParams& params,
                             const EncoderConfig& cfg, const LabelAlphabet& model_alphabet,
                             const BatchOptions& opts = {});

// Prediction heads over embedding rows. Double accumulation over f32 inputs;
// the same routine backs predict(), the linear scan and the metric tree, so
// those paths agree bit-for-bit.
double head_sed(const float* zq, const float* zt, int dim);
double head_ged(const float* z1, const float* z2, int dim);

enum class PredictMode { SED, GED };

struct ModelFile {
    PredictMode mode = PredictMode::SED;
    EncoderConfig config;
    std::vector<std::string> alphabet; // interned label order
    EncoderParams params;
};

double predict(const LabeledGraph& gq, const LabeledGraph& gt, const LabelAlphabet& graph_alphabet,
               const ModelFile& model, const BatchOptions& opts = {});

// Binary model container (magic NSED) plus a JSON sidecar at path + ".json".
void write_model(const std::string& path, const ModelFile& model);
ModelFile read_model(const std::string& path);

// ---- template implementations ----

template <typename Real>
EncoderParamsT<Real> init_params(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    auto glorot = [&rng](int fan_in, int fan_out) {
        Matrix<Real> w(fan_in, fan_out);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : w.data)
            v = static_cast<Real>((rng.uniform_real() * 2.0 - 1.0) * limit);
        return w;
    };
    EncoderParamsT<Real> p;
    const int d = cfg.hidden_dim;
    {
        int in = cfg.alphabet_size;
        for (int l = 0; l < cfg.pre_mlp_layers; ++l) {
            p.pre_w.push_back(glorot(in, d));
            p.pre_b.push_back(Matrix<Real>::zeros(1, d));
            in = d;
        }
    }
    p.gin_w.resize(static_cast<std::size_t>(cfg.gin_layers));
    p.gin_b.resize(static_cast<std::size_t>(cfg.gin_layers));
    for (int i = 0; i < cfg.gin_layers; ++i) {
        p.eps.push_back(Matrix<Real>::zeros(1, 1));
        for (int l = 0; l < cfg.mlp_layers; ++l) {
            p.gin_w[static_cast<std::size_t>(i)].push_back(glorot(d, d));
            p.gin_b[static_cast<std::size_t>(i)].push_back(Matrix<Real>::zeros(1, d));
        }
    }
    {
        int in = cfg.gin_layers * d;
        for (int l = 0; l < cfg.mlp_layers; ++l) {
            int out = (l + 1 == cfg.mlp_layers) ? cfg.embedding_dim : d;
            p.post_w.push_back(glorot(in, out));
            p.post_b.push_back(Matrix<Real>::zeros(1, out));
            in = out;
        }
    }
    return p;
}

namespace detail {
template <typename Real, typename Params, typename Out>
void collect_params(Params& p, std::vector<Out>& out) {
    for (std::size_t l = 0; l < p.pre_w.size(); ++l) {
        out.push_back(&p.pre_w[l]);
        out.push_back(&p.pre_b[l]);
    }
    for (std::size_t i = 0; i < p.gin_w.size(); ++i) {
        out.push_back(&p.eps[i]);
        for (std::size_t l = 0; l < p.gin_w[i].size(); ++l) {
            out.push_back(&p.gin_w[i][l]);
            out.push_back(&p.gin_b[i][l]);
        }
    }
    for (std::size_t l = 0; l < p.post_w.size(); ++l) {
        out.push_back(&p.post_w[l]);
        out.push_back(&p.post_b[l]);
    }
}
} // namespace detail

template <typename Real>
std::vector<Matrix<Real>*> param_tensors(EncoderParamsT<Real>& p) {
    std::vector<Matrix<Real>*> out;
    detail::collect_params<Real>(p, out);
    return out;
}

template <typename Real>
std::vector<const Matrix<Real>*> param_tensors(const EncoderParamsT<Real>& p) {
    std::vector<const Matrix<Real>*> out;
    detail::collect_params<Real>(p, out);
    return out;
}

template <typename Real>
StagedParams<Real> stage_params(Tape<Real>& tape, const EncoderParamsT<Real>& params,
                                const EncoderConfig& cfg) {
    cfg.validate();
    StagedParams<Real> s;
    auto stage = [&](const Matrix<Real>& m) {
        auto id = tape.leaf(m);
        s.all.push_back(id);
        return id;
    };
    for (std::size_t l = 0; l < params.pre_w.size(); ++l) {
        s.pre_w.push_back(stage(params.pre_w[l]));
        s.pre_b.push_back(stage(params.pre_b[l]));
    }
    s.gin_w.resize(params.gin_w.size());
    s.gin_b.resize(params.gin_b.size());
    for (std::size_t i = 0; i < params.gin_w.size(); ++i) {
        s.eps.push_back(stage(params.eps[i]));
        for (std::size_t l = 0; l < params.gin_w[i].size(); ++l) {
            s.gin_w[i].push_back(stage(params.gin_w[i][l]));
            s.gin_b[i].push_back(stage(params.gin_b[i][l]));
        }
    }
    for (std::size_t l = 0; l < params.post_w.size(); ++l) {
        s.post_w.push_back(stage(params.post_w[l]));
        s.post_b.push_back(stage(params.post_b[l]));
    }
    return s;
}

template <typename Real>
typename Tape<Real>::NodeId embed_on_tape(Tape<Real>& tape, const GraphBatch& batch,
                                          const StagedParams<Real>& staged,
                                          const EncoderConfig& cfg) {
    using NodeId = typename Tape<Real>::NodeId;
    contract(batch.total_nodes > 0, "cannot embed an empty batch");

    Matrix<Real> onehot(batch.total_nodes, cfg.alphabet_size);
    for (int v = 0; v < batch.total_nodes; ++v) {
        int label = batch.labels[static_cast<std::size_t>(v)];
        contract(label < cfg.alphabet_size, "label id exceeds model alphabet");
        if (label >= 0) onehot.at(v, label) = Real(1);
    }
    NodeId h = tape.leaf(std::move(onehot));

    for (std::size_t l = 0; l < staged.pre_w.size(); ++l) {
        h = tape.add_row(tape.matmul(h, staged.pre_w[l]), staged.pre_b[l]);
        if (l + 1 < staged.pre_w.size()) h = tape.relu(h);
    }

    NodeId one = tape.leaf(Matrix<Real>::scalar(Real(1)));
    NodeId block_input = h;
    std::vector<NodeId> layer_outputs;
    const int k = cfg.gin_layers;
    for (int i = 0; i < k; ++i) {
        NodeId agg;
        if (!batch.edge_src.empty()) {
            NodeId gathered = tape.gather_rows(h, batch.edge_src);
            agg = tape.segment_sum(gathered, batch.edge_dst, batch.total_nodes,
                                   cfg.canonical_aggregation);
        } else {
            agg = tape.leaf(Matrix<Real>::zeros(batch.total_nodes, cfg.hidden_dim));
        }
        NodeId one_plus_eps = tape.add(one, staged.eps[static_cast<std::size_t>(i)]);
        NodeId t = tape.add(tape.mul_scalar(h, one_plus_eps), agg);
        const auto& ws = staged.gin_w[static_cast<std::size_t>(i)];
        const auto& bs = staged.gin_b[static_cast<std::size_t>(i)];
        for (std::size_t l = 0; l < ws.size(); ++l) {
            t = tape.add_row(tape.matmul(t, ws[l]), bs[l]);
            if (l + 1 < ws.size()) t = tape.relu(t);
        }
        if (cfg.residual_block > 0 && (i + 1) % cfg.residual_block == 0) {
            t = tape.add(t, block_input);
            block_input = t;
        }
        h = t;
        layer_outputs.push_back(h);
    }

    NodeId z = layer_outputs.size() == 1 ? layer_outputs[0] : tape.concat_cols(layer_outputs);
    NodeId pooled =
        tape.segment_sum(z, batch.node_to_graph, batch.graph_count, cfg.canonical_aggregation);

    NodeId out = pooled;
    for (std::size_t l = 0; l < staged.post_w.size(); ++l) {
        out = tape.add_row(tape.matmul(out, staged.post_w[l]), staged.post_b[l]);
        if (l + 1 < staged.post_w.size()) out = tape.relu(out);
    }
    return out;
}

} // namespace nsed
