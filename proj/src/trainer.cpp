#include "cwan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "cwan/colorspace.hpp"
#include "cwan/errors.hpp"
#include "cwan/metrics.hpp"
#include "cwan/rng.hpp"

namespace cwan {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::vector<float>> snapshot_params(const ParamRefs<float>& params) {
    std::vector<std::vector<float>> s;
    for (const auto& [name, t] : params) {
        (void)name;
        s.push_back(t->data);
    }
    return s;
}

void restore_params(const ParamRefs<float>& params, const std::vector<std::vector<float>>& snap) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].second->data = snap[i];
}

constexpr uint64_t kShuffleTag = 0x73687566; // keeps shuffle seeds apart from sampling seeds

std::vector<std::size_t> shuffled_order(std::size_t n, uint64_t seed, int epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto rng = make_rng(mix_seed(seed, kShuffleTag, static_cast<uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared epoch/batch loop. `item_pass` runs forward+backward for one patch and
// returns its loss components; called with parameter grads already zeroed.
template <typename ItemPass, typename PostEpoch>
TrainResult run_training(const ParamRefs<float>& params, std::size_t n_items,
                         const TrainConfig& cfg, TrainSession* session, std::ostream* log,
                         const char* phase, ItemPass&& item_pass, PostEpoch&& post_epoch) {
    if (n_items == 0) throw DataError(std::string(phase) + ": empty patch set");

    TrainSession local;
    TrainSession& ses = session ? *session : local;

    AdamConfig<float> adam_cfg;
    adam_cfg.lr = cfg.lr;
    adam_cfg.weight_decay = cfg.weight_decay;

    TrainResult result;
    auto last_good = snapshot_params(params);

    const int first_epoch = ses.next_epoch;
    const int last_epoch = first_epoch + cfg.epochs - 1;
    for (int epoch = first_epoch; epoch <= last_epoch; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto order = shuffled_order(n_items, cfg.seed, epoch);

        EpochLog entry;
        entry.epoch = epoch;
        double total_sum = 0.0, huber_sum = 0.0, mse_sum = 0.0;
        bool any_components = false;
        bool finite = true;

        std::size_t pos = 0;
        while (pos < n_items) {
            const std::size_t take =
                std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n_items - pos);
            zero_grads(params);
            for (std::size_t i = 0; i < take; ++i) {
                const AbLossValue v = item_pass(order[pos + i], epoch);
                total_sum += v.total;
                if (!std::isnan(v.huber)) {
                    huber_sum += v.huber;
                    mse_sum += v.mse;
                    any_components = true;
                }
                if (!std::isfinite(v.total)) finite = false;
            }
            if (!finite) break;
            scale_grads(params, 1.0f / static_cast<float>(take));
            try {
                adam_step(params, ses.adam, adam_cfg);
            } catch (const NumericError&) {
                finite = false;
                break;
            }
            ++ses.steps;
            pos += take;
            if (cfg.max_steps > 0 && ses.steps >= cfg.max_steps) break;
        }

        if (!finite) {
            restore_params(params, last_good);
            result.diverged = true;
            if (log)
                *log << "[" << phase << "] epoch " << epoch
                     << " diverged (non-finite loss); restored last good parameters\n";
            break;
        }

        entry.total = total_sum / static_cast<double>(pos > 0 ? pos : 1);
        if (any_components) {
            entry.huber = huber_sum / static_cast<double>(pos);
            entry.mse = mse_sum / static_cast<double>(pos);
        }
        post_epoch(epoch, entry);
        result.curve.push_back(entry);
        last_good = snapshot_params(params);
        ses.next_epoch = epoch + 1;

        if (log) {
            *log << "[" << phase << "] epoch " << epoch << " total=" << entry.total;
            if (any_components) *log << " huber=" << entry.huber << " mse=" << entry.mse;
            if (!std::isnan(entry.psnr_beta))
                *log << " psnr_beta=" << entry.psnr_beta << " psnr_nbr=" << entry.psnr_nbr;
            *log << " wall=" << elapsed_s(t0) << "s\n";
        }
        if (cfg.max_steps > 0 && ses.steps >= cfg.max_steps) break;
    }
    result.steps = ses.steps;
    return result;
}

} // namespace

TrainConfig train_config_from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("config: cannot open " + path);
    TrainConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config: expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "lr") cfg.lr = std::stof(value);
            else if (key == "weight_decay") cfg.weight_decay = std::stof(value);
            else if (key == "batch_size") cfg.batch_size = std::stoi(value);
            else if (key == "epochs") cfg.epochs = std::stoi(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "alpha") cfg.loss.alpha = std::stof(value);
            else if (key == "delta") cfg.loss.delta = std::stof(value);
            else if (key == "beta") cfg.loss.beta = std::stoi(value);
            else if (key == "max_steps") cfg.max_steps = std::stol(value);
            else if (key == "diagnostics") cfg.diagnostics = (value == "true" || value == "1");
            else throw DataError("config: unknown key '" + key + "' at line " + std::to_string(lineno));
        } catch (const std::invalid_argument&) {
            throw DataError("config: bad value for '" + key + "' at line " + std::to_string(lineno));
        } catch (const std::out_of_range&) {
            throw DataError("config: value out of range for '" + key + "' at line " +
                            std::to_string(lineno));
        }
    }
    if (cfg.lr <= 0.f) throw DataError("config: lr must be positive");
    if (cfg.batch_size < 1) throw DataError("config: batch_size must be >= 1");
    return cfg;
}

TrainResult train_cwan_l(CwanL<float>& model, const PatchSet& patches, const TrainConfig& cfg,
                         TrainSession* session, std::ostream* log) {
    std::vector<Tensor<float>> xs, ys;
    for (const auto& p : patches.patches) {
        xs.push_back(lightness_tensor(rgb_to_lab(p.low)));
        ys.push_back(lightness_tensor(rgb_to_lab(p.gt)));
    }

    ParamRefs<float> params;
    model.collect_params("l.", params);

    typename CwanL<float>::Acts acts;
    Tensor<float> g;
    return run_training(
        params, xs.size(), cfg, session, log, "train-l",
        [&](std::size_t i, int) {
            const Tensor<float>& out = model.forward(xs[i], acts);
            AbLossValue v;
            v.total = l1_loss(out, ys[i], &g);
            v.huber = std::numeric_limits<double>::quiet_NaN();
            model.backward(g, acts);
            return v;
        },
        [](int, EpochLog&) {});
}

TrainResult pretrain_attention_generator(CwanAb<float>& model, const PatchSet& patches,
                                         const TrainConfig& cfg, TrainSession* session,
                                         std::ostream* log) {
    std::vector<Tensor<float>> xs;
    std::vector<const Tensor<float>*> maps;
    for (const auto& p : patches.patches) {
        if (!p.bundle) throw DataError("pretrain-attn: patches lack attention bundles");
        xs.push_back(ab_tensor(rgb_to_lab(p.low)));
        maps.push_back(&p.bundle->map);
    }

    ParamRefs<float> params;
    model.collect_generator_params("ab.", params);

    typename AttentionGenerator<float>::Acts acts;
    Tensor<float> g;
    return run_training(
        params, xs.size(), cfg, session, log, "pretrain-attn",
        [&](std::size_t i, int) {
            const Tensor<float>& out = model.generator.forward(xs[i], acts);
            AbLossValue v;
            v.total = l1_loss(out, *maps[i], &g);
            v.huber = std::numeric_limits<double>::quiet_NaN();
            model.generator.backward(g, acts);
            return v;
        },
        [](int, EpochLog&) {});
}

TrainResult train_cwan_ab(CwanAb<float>& model, const PatchSet& patches, const TrainConfig& cfg,
                          TrainSession* session, std::ostream* log) {
    std::vector<Tensor<float>> xs, ys;
    std::vector<const Tensor<float>*> maps;
    for (const auto& p : patches.patches) {
        if (!p.bundle) throw DataError("train-ab: patches lack attention bundles");
        xs.push_back(ab_tensor(rgb_to_lab(p.low)));
        ys.push_back(ab_tensor(rgb_to_lab(p.gt)));
        maps.push_back(&p.bundle->map);
    }
    const std::size_t n = xs.size();

    ParamRefs<float> params;
    model.collect_params("ab.", params);

    // Points resampled per (epoch, patch); cached per epoch because an item
    // may be visited by both the train pass and the diagnostic pass.
    std::vector<PointSample> samples(n);
    int samples_epoch = -1;
    auto sample_for = [&](std::size_t i, int epoch) -> const PointSample& {
        if (samples_epoch != epoch) {
            for (std::size_t j = 0; j < n; ++j)
                samples[j] =
                    sample_attention_points(*maps[j], cfg.loss.beta,
                                            mix_seed(cfg.seed, static_cast<uint64_t>(epoch), j));
            samples_epoch = epoch;
        }
        return samples[i];
    };

    typename CwanAb<float>::Acts acts;
    Tensor<float> g_ab, g_p;
    return run_training(
        params, n, cfg, session, log, "train-ab",
        [&](std::size_t i, int epoch) {
            const PointSample& ps = sample_for(i, epoch);
            model.forward(xs[i], acts);
            const AbLossValue v =
                cwan_ab_loss(acts.enh.ab_out, ys[i], acts.enh.p_out, ps.points, ps.point_mask,
                             ps.selected, cfg.loss, &g_ab, &g_p);
            model.backward(g_ab, g_p, acts);
            return v;
        },
        [&](int epoch, EpochLog& entry) {
            if (!cfg.diagnostics) return;
            MaskedSse beta_acc, nbr_acc;
            typename CwanAb<float>::Acts eval_acts;
            for (std::size_t i = 0; i < n; ++i) {
                const PointSample& ps = sample_for(i, epoch);
                if (ps.selected == 0) continue;
                model.forward(xs[i], eval_acts);
                beta_acc.accumulate(eval_acts.enh.ab_out, ys[i], ps.point_mask,
                                    PointPsnrMode::Points);
                nbr_acc.accumulate(eval_acts.enh.ab_out, ys[i], ps.point_mask,
                                   PointPsnrMode::Neighborhood8);
            }
            if (beta_acc.count > 0) entry.psnr_beta = beta_acc.psnr();
            if (nbr_acc.count > 0) entry.psnr_nbr = nbr_acc.psnr();
        });
}

void write_loss_csv(const std::string& path, const std::vector<EpochLog>& curve) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("loss csv: cannot open for writing " + path);
    f << "epoch,total,huber,mse,psnr_beta,psnr_nbr\n";
    char buf[64];
    const auto cell = [&buf](double v) -> std::string {
        if (std::isnan(v)) return "";
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        return buf;
    };
    for (const auto& e : curve)
        f << e.epoch << "," << cell(e.total) << "," << cell(e.huber) << "," << cell(e.mse) << ","
          << cell(e.psnr_beta) << "," << cell(e.psnr_nbr) << "\n";
    if (!f) throw DataError("loss csv: write failed: " + path);
}

} // namespace cwan
