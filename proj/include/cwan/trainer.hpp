#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cwan/adam.hpp"
#include "cwan/data.hpp"
#include "cwan/losses.hpp"
#include "cwan/model.hpp"

namespace cwan {

struct TrainConfig {
    float lr = 1e-4f;
    float weight_decay = 0.05f;
    int batch_size = 16; // 16 for the lightness net, 32 for the color net
    int epochs = 200;
    uint64_t seed = 0;
    LossConfig loss;
    long max_steps = 0;       // optimizer-step cap, 0 = none
    bool diagnostics = false; // per-epoch beta-point / neighborhood PSNR
};

/// `key = value` lines, '#' comments, every TrainConfig field recognized;
/// unknown keys are errors.
TrainConfig train_config_from_file(const std::string& path);

struct EpochLog {
    int epoch = 0;
    double total = 0.0;
    // NaN marks a column that does not apply to the phase; CSV cells stay empty.
    double huber = std::numeric_limits<double>::quiet_NaN();
    double mse = std::numeric_limits<double>::quiet_NaN();
    double psnr_beta = std::numeric_limits<double>::quiet_NaN();
    double psnr_nbr = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    std::vector<EpochLog> curve;
    long steps = 0;
    bool diverged = false; // model was restored to the last finite epoch
};

/// Optimizer state that survives across calls, so training can run in chunks
/// (evaluate, continue) while staying bit-identical to one uninterrupted run.
struct TrainSession {
    AdamState<float> adam;
    int next_epoch = 1;
    long steps = 0;
};

/// Phase 1: L1 regression of the lightness net on (low, gt) lightness patches.
TrainResult train_cwan_l(CwanL<float>& model, const PatchSet& patches, const TrainConfig& cfg,
                         TrainSession* session = nullptr, std::ostream* log = nullptr);

/// Stage 1 of the color branch: generator-only L1 fit to the ground-truth
/// attention maps. Patches must carry attention bundles.
TrainResult pretrain_attention_generator(CwanAb<float>& model, const PatchSet& patches,
                                         const TrainConfig& cfg, TrainSession* session = nullptr,
                                         std::ostream* log = nullptr);

/// Stage 2: end-to-end color training (generator fine-tuned jointly) under
/// Huber + alpha * masked point MSE; attention points are resampled per
/// (epoch, patch) from a derived seed.
TrainResult train_cwan_ab(CwanAb<float>& model, const PatchSet& patches, const TrainConfig& cfg,
                          TrainSession* session = nullptr, std::ostream* log = nullptr);

/// CSV columns: epoch,total,huber,mse,psnr_beta,psnr_nbr (NaN cells empty).
void write_loss_csv(const std::string& path, const std::vector<EpochLog>& curve);

} // namespace cwan
