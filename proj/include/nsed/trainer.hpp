#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsed/encoder.hpp"
#include "nsed/graph.hpp"

namespace nsed {

// One supervised pair with interval ground truth; exact-oracle data has
// lb == ub.
struct TrainSample {
    std::string query_id;
    std::string target_id;
    double lb = 0.0;
    double ub = 0.0;
    bool complete = true;
};

struct TrainConfig {
    int batch_size = 200;
    double max_lr = 1e-3;
    int half_cycle_iters = 2000; // triangular wave: 0 -> max_lr -> 0
    double weight_decay = 1e-3;  // decoupled, multiplied by the scheduled lr
    int patience_cycles = 5;
    int max_cycles = 100; // hard stop independent of patience
    std::uint64_t seed = 1;
    enum class Loss { Interval, Mse } loss = Loss::Interval;
    // Optimizer moments; standard defaults.
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 0.0; // 0 disables gradient clipping

    void validate() const;
};

// Piecewise-quadratic interval loss: zero inside [lb, ub], squared distance
// to the violated bound outside. Degenerates to squared error at lb == ub.
double loss_interval(double pred, double lb, double ub);
double loss_mse(double pred, double truth);

// Triangular schedule value at an iteration (0-based).
double lr_at(std::int64_t iteration, const TrainConfig& cfg);

struct TrainHistoryRow {
    int cycle = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr_peak = 0.0;
    long long wall_ms = 0;
};

struct AdamState {
    std::vector<std::vector<float>> m, v;
    std::int64_t step = 0;
};

// One AdamW update. Weight decay is decoupled and scaled by the passed lr:
// p <- p - lr * mhat / (sqrt(vhat) + eps) - lr * weight_decay * p.
void adamw_step(EncoderParams& params, const std::vector<Matrix<float>>& grads,
                const std::vector<bool>& trainable, AdamState& state, double lr,
                const TrainConfig& cfg);

struct TrainOutcome {
    EncoderParams params; // best-validation parameters
    std::vector<TrainHistoryRow> history;
    double best_val_loss = 0.0;
    int cycles_run = 0;
};

// Minibatch AdamW with the cyclic schedule; validates at the end of every
// full cycle, keeps the best-validation parameters and stops after
// patience_cycles cycles without improvement. Bit-deterministic given the
// seed.
TrainOutcome train(const GraphStore& store, const std::vector<TrainSample>& train_set,
                   const std::vector<TrainSample>& val_set, const EncoderConfig& encoder_cfg,
                   const TrainConfig& cfg, PredictMode mode,
                   const EncoderParams* initial = nullptr);

// Mean loss of fixed parameters over a sample set (no gradient).
double evaluate_loss(const GraphStore& store, const std::vector<TrainSample>& samples,
                     const EncoderParams& params, const EncoderConfig& encoder_cfg,
                     const TrainConfig& cfg, PredictMode mode);

// Head predictions for a list of pairs under fixed parameters.
std::vector<double> predict_pairs(const GraphStore& store, const std::vector<TrainSample>& samples,
                                  const EncoderParams& params, const EncoderConfig& encoder_cfg,
                                  PredictMode mode);

void write_history_csv(const std::string& path, const std::vector<TrainHistoryRow>& history);

// JSON-lines pair files: {"q","t","lb","ub","complete"}.
std::vector<TrainSample> load_pairs(const std::string& path);
void save_pairs(const std::string& path, const std::vector<TrainSample>& samples);

} // namespace nsed
