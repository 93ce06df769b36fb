#include "nsed/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "nsed/rng.hpp"

namespace nsed {

using nlohmann::json;

void TrainConfig::validate() const {
    contract(batch_size >= 1, "batch_size must be >= 1");
    contract(max_lr > 0.0, "max_lr must be positive");
    contract(half_cycle_iters >= 1, "half_cycle_iters must be >= 1");
    contract(weight_decay >= 0.0, "weight_decay must be nonnegative");
    contract(patience_cycles >= 1, "patience_cycles must be >= 1");
    contract(max_cycles >= 1, "max_cycles must be >= 1");
}

double loss_interval(double pred, double lb, double ub) {
    contract(lb <= ub, "interval loss needs lb <= ub");
    if (pred > ub) return (pred - ub) * (pred - ub);
    if (pred < lb) return (lb - pred) * (lb - pred);
    return 0.0;
}

double loss_mse(double pred, double truth) { return (pred - truth) * (pred - truth); }

double lr_at(std::int64_t iteration, const TrainConfig& cfg) {
    const std::int64_t period = 2ll * cfg.half_cycle_iters;
    const std::int64_t phase = iteration % period;
    if (phase <= cfg.half_cycle_iters)
        return cfg.max_lr * static_cast<double>(phase) / cfg.half_cycle_iters;
    return cfg.max_lr * static_cast<double>(period - phase) / cfg.half_cycle_iters;
}

namespace {

struct BatchPairs {
    std::vector<const LabeledGraph*> graphs; // unique graphs, first-occurrence order
    std::vector<int> query_rows;             // row in the embedding matrix per sample
    std::vector<int> target_rows;
};

BatchPairs collect_batch(const GraphStore& store, const std::vector<TrainSample>& samples,
                         const std::vector<int>& indices) {
    BatchPairs out;
    std::map<std::string, int> row_of;
    auto row_for = [&](const std::string& id) {
        auto it = row_of.find(id);
        if (it != row_of.end()) return it->second;
        int row = static_cast<int>(out.graphs.size());
        out.graphs.push_back(&store.by_id(id));
        row_of.emplace(id, row);
        return row;
    };
    for (int i : indices) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        out.query_rows.push_back(row_for(s.query_id));
        out.target_rows.push_back(row_for(s.target_id));
    }
    return out;
}

// Builds the full forward graph for one minibatch and returns the scalar
// loss node.
Tape<float>::NodeId batch_loss(Tape<float>& tape, const StagedParams<float>& staged,
                               const BatchPairs& batch, const GraphBatch& graph_batch,
                               const std::vector<TrainSample>& samples,
                               const std::vector<int>& indices, const EncoderConfig& encoder_cfg,
                               const TrainConfig& cfg, PredictMode mode) {
    auto z = embed_on_tape(tape, graph_batch, staged, encoder_cfg);
    auto zq = tape.gather_rows(z, batch.query_rows);
    auto zt = tape.gather_rows(z, batch.target_rows);
    auto pred = mode == PredictMode::SED ? tape.relu_diff_norm(zq, zt)
                                         : tape.l2_norm_rows(tape.sub(zq, zt));

    const int n = static_cast<int>(indices.size());
    Matrix<float> lb(n, 1), ub(n, 1);
    for (int i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])];
        if (cfg.loss == TrainConfig::Loss::Mse) {
            const float truth = static_cast<float>((s.lb + s.ub) / 2.0);
            lb.at(i, 0) = truth;
            ub.at(i, 0) = truth;
        } else {
            lb.at(i, 0) = static_cast<float>(s.lb);
            ub.at(i, 0) = static_cast<float>(s.ub);
        }
    }
    auto lb_node = tape.leaf(std::move(lb));
    auto ub_node = tape.leaf(std::move(ub));
    auto over = tape.relu(tape.sub(pred, ub_node));
    auto under = tape.relu(tape.sub(lb_node, pred));
    return tape.mean_all(tape.add(tape.square(over), tape.square(under)));
}

} // namespace

void adamw_step(EncoderParams& params, const std::vector<Matrix<float>>& grads,
                const std::vector<bool>& trainable, AdamState& state, double lr,
                const TrainConfig& cfg) {
    auto tensors = param_tensors(params);
    contract(tensors.size() == grads.size(), "gradient/parameter count mismatch");
    if (state.m.empty()) {
        state.m.resize(tensors.size());
        state.v.resize(tensors.size());
        for (std::size_t t = 0; t < tensors.size(); ++t) {
            state.m[t].assign(tensors[t]->size(), 0.0f);
            state.v[t].assign(tensors[t]->size(), 0.0f);
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    double clip_scale = 1.0;
    if (cfg.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& g : grads)
            for (float v : g.data) sq += static_cast<double>(v) * v;
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm) clip_scale = cfg.clip_norm / norm;
    }

    for (std::size_t t = 0; t < tensors.size(); ++t) {
        if (!trainable[t]) continue;
        auto& p = tensors[t]->data;
        const auto& g = grads[t].data;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = static_cast<double>(g[i]) * clip_scale;
            const double m = cfg.beta1 * state.m[t][i] + (1.0 - cfg.beta1) * gi;
            const double v = cfg.beta2 * state.v[t][i] + (1.0 - cfg.beta2) * gi * gi;
            state.m[t][i] = static_cast<float>(m);
            state.v[t][i] = static_cast<float>(v);
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            double update = lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            update += lr * cfg.weight_decay * static_cast<double>(p[i]);
            p[i] = static_cast<float>(p[i] - update);
        }
    }
}

double evaluate_loss(const GraphStore& store, const std::vector<TrainSample>& samples,
                     const EncoderParams& params, const EncoderConfig& encoder_cfg,
                     const TrainConfig& cfg, PredictMode mode) {
    require(!samples.empty(), "cannot evaluate on an empty sample set");
    auto preds = predict_pairs(store, samples, params, encoder_cfg, mode);
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        acc += cfg.loss == TrainConfig::Loss::Mse ? loss_mse(preds[i], (s.lb + s.ub) / 2.0)
                                                  : loss_interval(preds[i], s.lb, s.ub);
    }
    return acc / static_cast<double>(samples.size());
}

std::vector<double> predict_pairs(const GraphStore& store, const std::vector<TrainSample>& samples,
                                  const EncoderParams& params, const EncoderConfig& encoder_cfg,
                                  PredictMode mode) {
    require(!samples.empty(), "no pairs to predict");
    std::vector<int> indices(samples.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
    BatchPairs batch = collect_batch(store, samples, indices);
    EmbeddingMatrix z = embed_graphs(batch.graphs, store.alphabet(), params, encoder_cfg,
                                     store.alphabet());
    std::vector<double> preds(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const float* zq = z.row(batch.query_rows[i]);
        const float* zt = z.row(batch.target_rows[i]);
        preds[i] = mode == PredictMode::SED ? head_sed(zq, zt, z.dim) : head_ged(zq, zt, z.dim);
    }
    return preds;
}

TrainOutcome train(const GraphStore& store, const std::vector<TrainSample>& train_set,
                   const std::vector<TrainSample>& val_set, const EncoderConfig& encoder_cfg,
                   const TrainConfig& cfg, PredictMode mode, const EncoderParams* initial) {
    cfg.validate();
    encoder_cfg.validate();
    require(!train_set.empty(), "training set is empty");
    require(!val_set.empty(), "validation set is empty");
    for (const auto& s : train_set) {
        store.by_id(s.query_id);
        store.by_id(s.target_id);
        require(s.lb <= s.ub && s.lb >= 0.0, "invalid sample bounds for pair " + s.query_id);
    }

    Rng rng(cfg.seed);
    EncoderParams params = initial ? *initial : init_params<float>(encoder_cfg, rng);
    const auto trainable = param_trainable(encoder_cfg);

    AdamState adam;
    std::vector<int> epoch_order(train_set.size());
    for (std::size_t i = 0; i < epoch_order.size(); ++i) epoch_order[i] = static_cast<int>(i);
    std::size_t cursor = epoch_order.size(); // force shuffle on first use

    TrainOutcome out;
    out.params = params;
    out.best_val_loss = std::numeric_limits<double>::infinity();

    const std::int64_t cycle_iters = 2ll * cfg.half_cycle_iters;
    int stale_cycles = 0;
    std::int64_t iter = 0;
    auto wall_start = std::chrono::steady_clock::now();

    for (int cycle = 1; cycle <= cfg.max_cycles; ++cycle) {
        double cycle_loss = 0.0;
        for (std::int64_t ci = 0; ci < cycle_iters; ++ci, ++iter) {
            std::vector<int> batch_idx;
            batch_idx.reserve(static_cast<std::size_t>(cfg.batch_size));
            for (int b = 0; b < cfg.batch_size; ++b) {
                if (cursor >= epoch_order.size()) {
                    rng.shuffle(epoch_order);
                    cursor = 0;
                }
                batch_idx.push_back(epoch_order[cursor++]);
            }

            BatchPairs batch = collect_batch(store, train_set, batch_idx);
            GraphBatch graph_batch =
                build_batch(batch.graphs, store.alphabet(), store.alphabet());

            Tape<float> tape;
            auto staged = stage_params(tape, params, encoder_cfg);
            auto loss = batch_loss(tape, staged, batch, graph_batch, train_set, batch_idx,
                                   encoder_cfg, cfg, mode);
            tape.check_finite(loss);
            tape.backward(loss);
            cycle_loss += static_cast<double>(tape.value(loss).data[0]);

            std::vector<Matrix<float>> grads;
            grads.reserve(staged.all.size());
            for (auto id : staged.all) grads.push_back(tape.grad(id));

            // lr_at(iter) is 0 at the very first iteration; stepping with it
            // is a no-op by design of the schedule.
            adamw_step(params, grads, trainable, adam, lr_at(iter, cfg), cfg);
        }

        const double val_loss = evaluate_loss(store, val_set, params, encoder_cfg, cfg, mode);
        auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - wall_start)
                           .count();
        out.history.push_back(TrainHistoryRow{cycle, cycle_loss / static_cast<double>(cycle_iters),
                                              val_loss, cfg.max_lr, wall_ms});
        out.cycles_run = cycle;

        if (val_loss < out.best_val_loss) {
            out.best_val_loss = val_loss;
            out.params = params;
            stale_cycles = 0;
        } else {
            ++stale_cycles;
            if (stale_cycles >= cfg.patience_cycles) break;
        }
    }
    return out;
}

void write_history_csv(const std::string& path, const std::vector<TrainHistoryRow>& history) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write history file: " + path);
    out << "cycle,train_loss,val_loss,lr_peak,wall_ms\n";
    char buf[160];
    for (const auto& row : history) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%lld\n", row.cycle, row.train_loss,
                      row.val_loss, row.lr_peak, row.wall_ms);
        out << buf;
    }
}

std::vector<TrainSample> load_pairs(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open pair file: " + path);
    std::vector<TrainSample> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        require(!obj.is_discarded() && obj.is_object(),
                "line " + std::to_string(line_no) + ": malformed pair record");
        require(obj.contains("q") && obj.contains("t"),
                "line " + std::to_string(line_no) + ": pair needs \"q\" and \"t\"");
        TrainSample s;
        s.query_id = obj["q"].get<std::string>();
        s.target_id = obj["t"].get<std::string>();
        s.lb = obj.value("lb", 0.0);
        s.ub = obj.value("ub", s.lb);
        s.complete = obj.value("complete", true);
        require(s.lb <= s.ub, "line " + std::to_string(line_no) + ": lb > ub");
        out.push_back(std::move(s));
    }
    return out;
}

void save_pairs(const std::string& path, const std::vector<TrainSample>& samples) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write pair file: " + path);
    for (const auto& s : samples) {
        nlohmann::ordered_json obj{{"q", s.query_id},
                                   {"t", s.target_id},
                                   {"lb", s.lb},
                                   {"ub", s.ub},
                                   {"complete", s.complete}};
        out << obj.dump() << '\n';
    }
}

} // namespace nsed
