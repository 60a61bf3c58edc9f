// cwan: dataset synthesis, three-phase training, enhancement, evaluation and
// attention diagnostics behind one binary. Exit codes: 0 success, 1 usage,
// 2 data error, 3 numeric failure.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cwan/attention.hpp"
#include "cwan/checkpoint.hpp"
#include "cwan/colorspace.hpp"
#include "cwan/data.hpp"
#include "cwan/errors.hpp"
#include "cwan/gradcheck.hpp"
#include "cwan/image_io.hpp"
#include "cwan/kernels.hpp"
#include "cwan/metrics.hpp"
#include "cwan/model.hpp"
#include "cwan/trainer.hpp"

namespace fs = std::filesystem;
using namespace cwan;

namespace {

std::vector<fs::path> list_images(const fs::path& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".png" || ext == ".ppm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .png/.ppm images in " + dir.string());
    return files;
}

struct TrainFlags {
    std::string config_path;
    TrainConfig cfg;
    bool quiet = false;

    void add_to(CLI::App* cmd, int default_batch) {
        cfg.batch_size = default_batch;
        cmd->add_option("--config", config_path, "key = value config file; flags override");
        cmd->add_option("--lr", cfg.lr, "learning rate")->capture_default_str();
        cmd->add_option("--weight-decay", cfg.weight_decay, "L2 coefficient added to gradients")
            ->capture_default_str();
        cmd->add_option("--batch", cfg.batch_size, "batch size")->capture_default_str();
        cmd->add_option("--epochs", cfg.epochs, "training epochs")->capture_default_str();
        cmd->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
        cmd->add_option("--max-steps", cfg.max_steps, "optimizer step cap (0 = none)")
            ->capture_default_str();
        cmd->add_flag("--quiet", quiet, "suppress per-epoch log lines");
    }

    // Config file first, then explicit flags override it.
    void resolve(CLI::App* cmd) {
        if (config_path.empty()) return;
        TrainConfig file_cfg = train_config_from_file(config_path);
        const auto keep = [&](const char* flag) { return cmd->count(flag) > 0; };
        if (!keep("--lr")) cfg.lr = file_cfg.lr;
        if (!keep("--weight-decay")) cfg.weight_decay = file_cfg.weight_decay;
        if (!keep("--batch")) cfg.batch_size = file_cfg.batch_size;
        if (!keep("--epochs")) cfg.epochs = file_cfg.epochs;
        if (!keep("--seed")) cfg.seed = file_cfg.seed;
        if (!keep("--max-steps")) cfg.max_steps = file_cfg.max_steps;
        if (cmd->get_option_no_throw("--alpha") && !keep("--alpha"))
            cfg.loss.alpha = file_cfg.loss.alpha;
        if (cmd->get_option_no_throw("--delta") && !keep("--delta"))
            cfg.loss.delta = file_cfg.loss.delta;
        if (cmd->get_option_no_throw("--beta") && !keep("--beta")) cfg.loss.beta = file_cfg.loss.beta;
        if (cmd->get_option_no_throw("--diagnostics") && !keep("--diagnostics"))
            cfg.diagnostics = file_cfg.diagnostics;
    }

    std::ostream* log() const { return quiet ? nullptr : &std::cerr; }
};

BlockKind parse_kind(const std::string& s) { return block_kind_from_name(s); }

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
    std::string in_dir, out_dir;
    float decrease = 0.85f;
    float sigma = 0.f;
    uint64_t seed = 0;
    bool gamma_domain = false;
    float val_frac = 0.f, test_frac = 0.f;
};

int run_synth(const SynthArgs& a) {
    const auto files = list_images(a.in_dir);
    fs::create_directories(a.out_dir);

    std::vector<Split> splits(files.size(), Split::Train);
    {
        const auto n = files.size();
        const auto n_val = static_cast<std::size_t>(std::lround(a.val_frac * n));
        const auto n_test = static_cast<std::size_t>(std::lround(a.test_frac * n));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        auto rng = make_rng(mix_seed(a.seed, 0x73706c69)); // split assignment
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i = 0; i < n_val && i < n; ++i) splits[order[i]] = Split::Val;
        for (std::size_t i = n_val; i < n_val + n_test && i < n; ++i)
            splits[order[i]] = Split::Test;
    }

    Dataset ds;
    ds.provenance["decrease"] = std::to_string(a.decrease);
    ds.provenance["sigma"] = std::to_string(a.sigma);
    ds.provenance["seed"] = std::to_string(a.seed);
    ds.provenance["domain"] = a.gamma_domain ? "gamma" : "linear";

    for (std::size_t i = 0; i < files.size(); ++i) {
        const SrgbImage gt = read_image(files[i].string());
        SrgbImage low = synth_lowlight(gt, a.decrease, !a.gamma_domain);
        if (a.sigma > 0.f) low = add_gaussian_noise(low, a.sigma, mix_seed(a.seed, i));
        const fs::path out_path = fs::path(a.out_dir) / (files[i].stem().string() + "_low.png");
        write_image(out_path.string(), low);
        ds.entries.push_back({splits[i], out_path.string(), files[i].string()});
    }
    const fs::path manifest = fs::path(a.out_dir) / "manifest.tsv";
    save_manifest(manifest.string(), ds);
    std::cout << manifest.string() << "\n";
    return 0;
}

// ---- training commands -----------------------------------------------

struct TrainLArgs {
    std::string manifest, out_ckpt, loss_csv;
    TrainFlags flags;
    int patch_size = 64;
    int per_image = 50;
    CwanLConfig model_cfg;
    std::string block_kind = "memory";
};

int run_train_l(TrainLArgs& a, CLI::App* cmd) {
    a.flags.resolve(cmd);
    a.model_cfg.block_kind = parse_kind(a.block_kind);

    const Dataset ds = load_manifest(a.manifest);
    PatchOptions opt;
    opt.patch_size = a.patch_size;
    opt.per_image = a.per_image;
    opt.seed = mix_seed(a.flags.cfg.seed, 0x70617463);
    const PatchSet patches = extract_patches(ds, Split::Train, opt);

    CwanL<float> model(a.model_cfg, a.flags.cfg.seed);
    const TrainResult r = train_cwan_l(model, patches, a.flags.cfg, nullptr, a.flags.log());
    save_cwan_l(a.out_ckpt, model);
    if (!a.loss_csv.empty()) write_loss_csv(a.loss_csv, r.curve);
    if (r.diverged) {
        std::cerr << "train-l: diverged; last good checkpoint written to " << a.out_ckpt << "\n";
        return 3;
    }
    return 0;
}

struct AttnArgs {
    std::string manifest, out_ckpt, loss_csv;
    TrainFlags flags;
    int patch_size = 32;
    int per_image = 100;
    CwanAbConfig model_cfg;
    std::string generator_kind = "forward", enhancer_kind = "forward";
    double tau_low_frac = 0.05, tau_high_frac = 0.5;
    std::string attention_source = "gt";
};

PatchSet attn_patches(const AttnArgs& a, const TrainConfig& cfg) {
    const Dataset ds = load_manifest(a.manifest);
    PatchOptions opt;
    opt.patch_size = a.patch_size;
    opt.per_image = a.per_image;
    opt.seed = mix_seed(cfg.seed, 0x70617463);
    opt.with_attention = true;
    opt.attention.tau_low_frac = a.tau_low_frac;
    opt.attention.tau_high_frac = a.tau_high_frac;
    opt.attention.beta = cfg.loss.beta;
    if (a.attention_source == "gt") opt.attention_source = AttentionSource::GroundTruth;
    else if (a.attention_source == "low") opt.attention_source = AttentionSource::LowLight;
    else throw DataError("unknown --attention-source (want gt or low): " + a.attention_source);
    return extract_patches(ds, Split::Train, opt);
}

int run_pretrain_attn(AttnArgs& a, CLI::App* cmd) {
    a.flags.resolve(cmd);
    a.model_cfg.generator_kind = parse_kind(a.generator_kind);
    a.model_cfg.enhancer_kind = parse_kind(a.enhancer_kind);

    const PatchSet patches = attn_patches(a, a.flags.cfg);
    CwanAb<float> model(a.model_cfg, a.flags.cfg.seed);
    const TrainResult r =
        pretrain_attention_generator(model, patches, a.flags.cfg, nullptr, a.flags.log());
    save_cwan_ab(a.out_ckpt, model);
    if (!a.loss_csv.empty()) write_loss_csv(a.loss_csv, r.curve);
    if (r.diverged) {
        std::cerr << "pretrain-attn: diverged; last good checkpoint written\n";
        return 3;
    }
    return 0;
}

struct TrainAbArgs {
    AttnArgs base;
    std::string attn_ckpt;
};

int run_train_ab(TrainAbArgs& a, CLI::App* cmd) {
    a.base.flags.resolve(cmd);
    const PatchSet patches = attn_patches(a.base, a.base.flags.cfg);
    CwanAb<float> model = load_cwan_ab(a.attn_ckpt);
    const TrainResult r =
        train_cwan_ab(model, patches, a.base.flags.cfg, nullptr, a.base.flags.log());
    save_cwan_ab(a.base.out_ckpt, model);
    if (!a.base.loss_csv.empty()) write_loss_csv(a.base.loss_csv, r.curve);
    if (r.diverged) {
        std::cerr << "train-ab: diverged; last good checkpoint written\n";
        return 3;
    }
    return 0;
}

// ---- enhance / eval -----------------------------------------------------

struct EnhanceArgs {
    std::string input, out_dir, ckpt_l, ckpt_ab;
};

int run_enhance(const EnhanceArgs& a) {
    Cwan<float> model;
    model.l = load_cwan_l(a.ckpt_l);
    model.ab = load_cwan_ab(a.ckpt_ab);

    std::vector<fs::path> inputs;
    if (fs::is_directory(a.input)) inputs = list_images(a.input);
    else if (fs::is_regular_file(a.input)) inputs.push_back(a.input);
    else throw DataError("enhance: no such input: " + a.input);

    fs::create_directories(a.out_dir);
    for (const auto& p : inputs) {
        const SrgbImage img = read_image(p.string());
        const SrgbImage out = enhance(model, img);
        const fs::path out_path = fs::path(a.out_dir) / p.filename();
        write_image(out_path.string(), out);
        std::cout << out_path.string() << "\n";
    }
    return 0;
}

struct EvalArgs {
    std::string pred_dir, gt_dir, low_dir, out_csv, out_table;
};

int run_eval(const EvalArgs& a) {
    const auto preds = list_images(a.pred_dir);
    MetricReport report;
    for (const auto& p : preds) {
        const fs::path gt_path = fs::path(a.gt_dir) / p.filename();
        const fs::path low_path = fs::path(a.low_dir) / p.filename();
        if (!fs::exists(gt_path)) throw DataError("eval: missing ground truth " + gt_path.string());
        if (!fs::exists(low_path)) throw DataError("eval: missing low-light " + low_path.string());
        const SrgbImage pred = read_image(p.string());
        const SrgbImage gt = read_image(gt_path.string());
        const SrgbImage low = read_image(low_path.string());
        ImageMetrics m;
        m.name = p.filename().string();
        m.psnr = psnr(pred, gt);
        m.ssim = ssim(pred, gt);
        m.loe = loe(low, pred);
        m.colorfulness = colorfulness(pred);
        report.rows.push_back(std::move(m));
    }
    write_report_csv(a.out_csv, report);
    if (!a.out_table.empty()) write_report_table(a.out_table, report);
    std::cout << format_metric(report.mean().psnr) << " dB mean PSNR over " << report.rows.size()
              << " images\n";
    return 0;
}

// ---- attn-viz -----------------------------------------------------------

struct AttnVizArgs {
    std::string image, out_dir, ckpt_ab, ckpt_l;
    double tau_low_frac = 0.05, tau_high_frac = 0.5;
    int top = 30;
};

void draw_marker(SrgbImage& img, int y, int x) {
    for (int d = -2; d <= 2; ++d) {
        const auto put = [&](int yy, int xx) {
            if (yy < 0 || yy >= img.height || xx < 0 || xx >= img.width) return;
            img.at(yy, xx, 0) = 1.f;
            img.at(yy, xx, 1) = 0.f;
            img.at(yy, xx, 2) = 0.f;
        };
        put(y + d, x);
        put(y, x + d);
    }
}

int run_attn_viz(const AttnVizArgs& a) {
    const SrgbImage img = read_image(a.image);
    const LabImage lab = rgb_to_lab(img);
    const Tensor<float> x_ab = ab_tensor(lab);
    fs::create_directories(a.out_dir);
    const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;

    // Frequency-derived ground-truth map of the input image itself.
    const FrequencyImage freq = color_frequency(img);
    const double n = static_cast<double>(freq.total_pixels());
    const Tensor<float> mask = frequency_mask(freq, a.tau_low_frac * n, a.tau_high_frac * n);
    const Tensor<float> map = attention_map(x_ab, mask);
    write_gray_png((fs::path(a.out_dir) / "m_a.png").string(), map.data.data(), img.height,
                   img.width);
    write_gray_png((fs::path(a.out_dir) / "m_b.png").string(), map.data.data() + plane,
                   img.height, img.width);

    if (a.ckpt_ab.empty()) return 0;

    CwanAb<float> ab_model = load_cwan_ab(a.ckpt_ab);
    typename AttentionGenerator<float>::Acts acts;
    const Tensor<float>& mhat = ab_model.generator.forward(x_ab, acts);
    write_gray_png((fs::path(a.out_dir) / "mhat_a.png").string(), mhat.data.data(), img.height,
                   img.width);
    write_gray_png((fs::path(a.out_dir) / "mhat_b.png").string(), mhat.data.data() + plane,
                   img.height, img.width);

    // Top responses of max(m̂_a, m̂_b) overlaid as markers.
    std::vector<std::pair<float, std::size_t>> responses(plane);
    for (std::size_t i = 0; i < plane; ++i)
        responses[i] = {std::max(mhat.data[i], mhat.data[plane + i]), i};
    std::sort(responses.begin(), responses.end(), [](const auto& l, const auto& r) {
        return l.first != r.first ? l.first > r.first : l.second < r.second;
    });

    SrgbImage overlay = img;
    if (!a.ckpt_l.empty()) {
        Cwan<float> model;
        model.l = load_cwan_l(a.ckpt_l);
        model.ab = std::move(ab_model);
        overlay = enhance(model, img);
    }
    const int count = std::min<int>(a.top, static_cast<int>(plane));
    for (int i = 0; i < count; ++i) {
        const std::size_t idx = responses[i].second;
        draw_marker(overlay, static_cast<int>(idx / img.width), static_cast<int>(idx % img.width));
    }
    write_image((fs::path(a.out_dir) / "overlay.png").string(), overlay);
    return 0;
}

// ---- gradcheck ------------------------------------------------------------

struct GradCheckArgs {
    uint64_t seed = 1;
    std::size_t samples = 50;
    double h = 1e-3;
    double tolerance = 1e-3;
};

// Declared in tests as well; double precision keeps finite differences clear
// of f32 accumulation noise while exercising the same templated code.
int run_gradcheck(const GradCheckArgs& a) {
    using D = double;
    bool ok = true;
    const auto report = [&](const std::string& name, const GradCheckResult& r) {
        const bool pass = r.max_rel_error < a.tolerance;
        ok = ok && pass;
        std::cout << (pass ? "PASS" : "FAIL") << "  " << name << "  max_rel_err=" << r.max_rel_error
                  << " (" << r.coords_checked << " coords)\n";
    };

    auto rng = make_rng(a.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto randomize = [&](Tensor<D>& t) {
        for (auto& v : t.data) v = u(rng);
    };

    const int h8 = 8, w8 = 8;

    { // single conv layer, input + weight + bias grads
        ConvLayer<D> conv(3, 4, 3);
        auto wrng = make_rng(mix_seed(a.seed, 2));
        conv = ConvLayer<D>::he_init(3, 4, 3, wrng);
        Tensor<D> x({3, h8, w8});
        randomize(x);
        const auto proj = projection_weights<D>(static_cast<std::size_t>(4) * h8 * w8,
                                                mix_seed(a.seed, 3));
        Tensor<D> out, gout({4, h8, w8}), gin;
        const auto loss = [&]() {
            conv.forward(x, out);
            return project(out.data, proj);
        };
        loss();
        for (std::size_t i = 0; i < proj.size(); ++i) gout.data[i] = proj[i];
        conv.weight.zero_grad();
        conv.bias.zero_grad();
        conv.backward(x, gout, gin);
        report("conv3x3 input", grad_check<D>(x.data.data(), x.numel(), gin.data, loss, a.h,
                                              a.samples, mix_seed(a.seed, 4)));
        report("conv3x3 weights", grad_check<D>(conv.weight.data.data(), conv.weight.numel(),
                                                conv.weight.grad, loss, a.h, a.samples,
                                                mix_seed(a.seed, 5)));
        report("conv3x3 bias", grad_check<D>(conv.bias.data.data(), conv.bias.numel(),
                                             conv.bias.grad, loss, a.h, a.samples,
                                             mix_seed(a.seed, 6)));
    }

    { // relu away from the kink
        Tensor<D> x({2, h8, w8});
        for (auto& v : x.data) {
            v = u(rng);
            if (std::abs(v) < 0.1) v = v < 0 ? v - 0.1 : v + 0.1;
        }
        const auto proj = projection_weights<D>(x.numel(), mix_seed(a.seed, 7));
        Tensor<D> out, gout(x.shape), gin;
        const auto loss = [&]() {
            relu_forward(x, out);
            return project(out.data, proj);
        };
        loss();
        for (std::size_t i = 0; i < proj.size(); ++i) gout.data[i] = proj[i];
        relu_backward(x, gout, gin);
        report("relu", grad_check<D>(x.data.data(), x.numel(), gin.data, loss, a.h, a.samples,
                                     mix_seed(a.seed, 8), 1e-4));
    }

    { // sigmoid
        Tensor<D> x({2, h8, w8});
        randomize(x);
        const auto proj = projection_weights<D>(x.numel(), mix_seed(a.seed, 9));
        Tensor<D> out, gout(x.shape), gin;
        const auto loss = [&]() {
            sigmoid_forward(x, out);
            return project(out.data, proj);
        };
        loss();
        for (std::size_t i = 0; i < proj.size(); ++i) gout.data[i] = proj[i];
        sigmoid_backward(out, gout, gin);
        report("sigmoid", grad_check<D>(x.data.data(), x.numel(), gin.data, loss, a.h, a.samples,
                                        mix_seed(a.seed, 10)));
    }

    { // full lightness network, input + a sampled weight tensor
        CwanL<D> net(CwanLConfig{}, mix_seed(a.seed, 11));
        // small random stand-in for the zero reconstruction head so its
        // gradient path is exercised
        auto wrng = make_rng(mix_seed(a.seed, 12));
        std::normal_distribution<double> nd(0.0, 0.05);
        for (auto& v : net.rec.weight.data) v = nd(wrng);
        Tensor<D> x({1, h8, w8});
        for (auto& v : x.data) v = 0.5 + 0.4 * u(rng);
        const auto proj = projection_weights<D>(static_cast<std::size_t>(h8) * w8,
                                                mix_seed(a.seed, 13));
        typename CwanL<D>::Acts acts;
        Tensor<D> gout({1, h8, w8});
        const auto loss = [&]() {
            const Tensor<D>& out = net.forward(x, acts);
            return project(out.data, proj);
        };
        loss();
        for (std::size_t i = 0; i < proj.size(); ++i) gout.data[i] = proj[i];
        ParamRefs<D> params;
        net.collect_params("l.", params);
        zero_grads(params);
        Tensor<D> gin = net.backward(gout, acts);
        report("cwan_l input", grad_check<D>(x.data.data(), x.numel(), gin.data, loss, a.h,
                                             a.samples, mix_seed(a.seed, 14)));
        Tensor<D>* w = &net.backbone.blocks[1].conv0.weight;
        report("cwan_l weights", grad_check<D>(w->data.data(), w->numel(), w->grad, loss, a.h,
                                               a.samples, mix_seed(a.seed, 15)));
    }

    { // full color network end to end (generator + enhancer)
        CwanAb<D> net(CwanAbConfig{}, mix_seed(a.seed, 16));
        auto wrng = make_rng(mix_seed(a.seed, 17));
        std::normal_distribution<double> nd(0.0, 0.05);
        for (auto& v : net.enhancer.rec.weight.data) v = nd(wrng);
        for (auto& v : net.enhancer.point_head.weight.data) v = nd(wrng);
        for (auto& v : net.generator.rec.weight.data) v = nd(wrng);

        Tensor<D> x({2, h8, w8});
        for (auto& v : x.data) v = 0.5 + 0.4 * u(rng);
        const auto proj_ab = projection_weights<D>(static_cast<std::size_t>(2) * h8 * w8,
                                                   mix_seed(a.seed, 18));
        const auto proj_p = projection_weights<D>(static_cast<std::size_t>(2) * h8 * w8,
                                                  mix_seed(a.seed, 19));
        typename CwanAb<D>::Acts acts;
        const auto loss = [&]() {
            net.forward(x, acts);
            return project(acts.enh.ab_out.data, proj_ab) + project(acts.enh.p_out.data, proj_p);
        };
        loss();
        Tensor<D> g_ab({2, h8, w8}), g_p({2, h8, w8});
        for (std::size_t i = 0; i < proj_ab.size(); ++i) {
            g_ab.data[i] = proj_ab[i];
            g_p.data[i] = proj_p[i];
        }
        ParamRefs<D> params;
        net.collect_params("ab.", params);
        zero_grads(params);
        Tensor<D> gin = net.backward(g_ab, g_p, acts);
        report("cwan_ab input", grad_check<D>(x.data.data(), x.numel(), gin.data, loss, a.h,
                                              a.samples, mix_seed(a.seed, 20)));
        Tensor<D>* w = &net.generator.backbone.blocks[0].conv1.weight;
        report("cwan_ab generator weights",
               grad_check<D>(w->data.data(), w->numel(), w->grad, loss, a.h, a.samples,
                             mix_seed(a.seed, 21)));
        Tensor<D>* w2 = &net.enhancer.backbone.blocks[1].conv2.weight;
        report("cwan_ab enhancer weights",
               grad_check<D>(w2->data.data(), w2->numel(), w2->grad, loss, a.h, a.samples,
                             mix_seed(a.seed, 22)));
    }

    return ok ? 0 : 3;
}

// ---- ablate-alpha ---------------------------------------------------------

struct AblateArgs {
    std::string manifest, out_csv, ckpt_l;
    std::vector<double> alphas = {1.4, 1.2, 1.0, 0.8, 0.6, 0.4, 0.2, 0.0};
    std::string mode = "warm";
    TrainFlags flags;
    int patch_size = 32;
    int per_image = 100;
    int l_epochs = 0;        // 0: same as --epochs
    int pretrain_epochs = 0; // 0: same as --epochs
    int finetune_epochs = 5;
    double tau_low_frac = 0.05, tau_high_frac = 0.5;
};

double mean_enhance_psnr(Cwan<float>& model, const std::vector<DatasetEntry>& entries) {
    double sum = 0.0;
    for (const auto& e : entries) {
        const SrgbImage low = read_image(e.low_path);
        const SrgbImage gt = read_image(e.gt_path);
        sum += psnr(enhance(model, low), gt);
    }
    return sum / static_cast<double>(entries.size());
}

int run_ablate(AblateArgs& a, CLI::App* cmd) {
    a.flags.resolve(cmd);
    if (a.mode != "warm" && a.mode != "cold")
        throw DataError("ablate-alpha: --mode must be warm or cold");
    const Dataset ds = load_manifest(a.manifest);
    auto eval_entries = ds.split_entries(Split::Test);
    if (eval_entries.empty()) eval_entries = ds.split_entries(Split::Train);
    if (eval_entries.empty()) throw DataError("ablate-alpha: manifest has no usable entries");

    TrainConfig base_cfg = a.flags.cfg;

    // Shared lightness model.
    Cwan<float> model;
    if (!a.ckpt_l.empty()) {
        model.l = load_cwan_l(a.ckpt_l);
    } else {
        PatchOptions lopt;
        lopt.patch_size = a.patch_size;
        lopt.per_image = a.per_image;
        lopt.seed = mix_seed(base_cfg.seed, 0x70617463);
        const PatchSet lpatches = extract_patches(ds, Split::Train, lopt);
        model.l = CwanL<float>(CwanLConfig{}, base_cfg.seed);
        TrainConfig lcfg = base_cfg;
        lcfg.batch_size = 16;
        if (a.l_epochs > 0) lcfg.epochs = a.l_epochs;
        train_cwan_l(model.l, lpatches, lcfg, nullptr, a.flags.log());
    }

    // Attention patches shared by every arm.
    PatchOptions opt;
    opt.patch_size = a.patch_size;
    opt.per_image = a.per_image;
    opt.seed = mix_seed(base_cfg.seed, 0x70617463);
    opt.with_attention = true;
    opt.attention.tau_low_frac = a.tau_low_frac;
    opt.attention.tau_high_frac = a.tau_high_frac;
    opt.attention.beta = base_cfg.loss.beta;
    const PatchSet patches = extract_patches(ds, Split::Train, opt);

    // Stage 1 once: the pretrained generator is alpha-independent.
    CwanAb<float> pretrained(CwanAbConfig{}, base_cfg.seed);
    {
        TrainConfig pcfg = base_cfg;
        pcfg.batch_size = 32;
        if (a.pretrain_epochs > 0) pcfg.epochs = a.pretrain_epochs;
        pretrain_attention_generator(pretrained, patches, pcfg, nullptr, a.flags.log());
    }

    // Warm start: one base model at alpha = 1, then short per-alpha fine-tunes.
    CwanAb<float> base_model = pretrained;
    if (a.mode == "warm") {
        TrainConfig cfg1 = base_cfg;
        cfg1.batch_size = 32;
        cfg1.loss.alpha = 1.0f;
        train_cwan_ab(base_model, patches, cfg1, nullptr, a.flags.log());
    }

    std::ofstream csv(a.out_csv, std::ios::trunc);
    if (!csv) throw DataError("ablate-alpha: cannot open " + a.out_csv);
    csv << "alpha,psnr\n";
    for (double alpha : a.alphas) {
        CwanAb<float> arm = a.mode == "warm" ? base_model : pretrained;
        TrainConfig cfg = base_cfg;
        cfg.batch_size = 32;
        cfg.loss.alpha = static_cast<float>(alpha);
        cfg.epochs = a.mode == "warm" ? a.finetune_epochs : base_cfg.epochs;
        cfg.seed = mix_seed(base_cfg.seed, static_cast<uint64_t>(alpha * 1000.0));
        train_cwan_ab(arm, patches, cfg, nullptr, a.flags.log());

        model.ab = arm;
        const double p = mean_enhance_psnr(model, eval_entries);
        char row[64];
        std::snprintf(row, sizeof(row), "%.1f,%.6f\n", alpha, p);
        csv << row;
        std::cerr << "[ablate-alpha] alpha=" << alpha << " psnr=" << p << "\n";
    }
    std::cout << a.out_csv << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"color-wise attention network for low-light image enhancement"};
    app.require_subcommand(1);
    bool serial = false;
    app.add_flag("--serial", serial, "use the serial reference kernels");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "darken images and write a paired manifest");
    synth->add_option("--in", synth_args.in_dir, "directory of ground-truth images")->required();
    synth->add_option("--out", synth_args.out_dir, "output directory")->required();
    synth->add_option("--decrease", synth_args.decrease, "intensity decrease in [0,1)")
        ->capture_default_str();
    synth->add_option("--sigma", synth_args.sigma, "Gaussian noise sigma on the 0-255 scale")
        ->capture_default_str();
    synth->add_option("--seed", synth_args.seed, "RNG seed")->capture_default_str();
    synth->add_flag("--gamma-domain", synth_args.gamma_domain,
                    "multiply gamma-encoded values instead of linear light");
    synth->add_option("--val-frac", synth_args.val_frac, "fraction assigned to the val split")
        ->capture_default_str();
    synth->add_option("--test-frac", synth_args.test_frac, "fraction assigned to the test split")
        ->capture_default_str();

    TrainLArgs tl;
    auto* train_l = app.add_subcommand("train-l", "train the lightness network");
    train_l->add_option("--manifest", tl.manifest, "dataset manifest")->required();
    train_l->add_option("--out", tl.out_ckpt, "output checkpoint")->required();
    train_l->add_option("--loss-csv", tl.loss_csv, "per-epoch loss curve CSV");
    tl.flags.add_to(train_l, 16);
    train_l->add_option("--patch-size", tl.patch_size, "square patch size")->capture_default_str();
    train_l->add_option("--per-image", tl.per_image, "patches per training image")
        ->capture_default_str();
    train_l->add_option("--blocks", tl.model_cfg.blocks, "number of blocks")->capture_default_str();
    train_l->add_option("--channels", tl.model_cfg.channels, "feature channels")
        ->capture_default_str();
    train_l->add_option("--block-kind", tl.block_kind, "memory or forward")->capture_default_str();

    AttnArgs pa;
    auto* pretrain = app.add_subcommand("pretrain-attn", "stage-1 attention generator pretraining");
    pretrain->add_option("--manifest", pa.manifest, "dataset manifest")->required();
    pretrain->add_option("--out", pa.out_ckpt, "output checkpoint")->required();
    pretrain->add_option("--loss-csv", pa.loss_csv, "per-epoch loss curve CSV");
    pa.flags.add_to(pretrain, 32);
    pretrain->add_option("--patch-size", pa.patch_size, "square patch size")->capture_default_str();
    pretrain->add_option("--per-image", pa.per_image, "patches per training image")
        ->capture_default_str();
    pretrain->add_option("--beta", pa.flags.cfg.loss.beta, "attention points per patch")
        ->capture_default_str();
    pretrain->add_option("--tau-low-frac", pa.tau_low_frac, "lower frequency threshold (of N)")
        ->capture_default_str();
    pretrain->add_option("--tau-high-frac", pa.tau_high_frac, "upper frequency threshold (of N)")
        ->capture_default_str();
    pretrain->add_option("--attention-source", pa.attention_source,
                          "colors the supervision is built from: gt or low")
        ->capture_default_str();
    pretrain->add_option("--generator-blocks", pa.model_cfg.generator_blocks, "generator blocks")
        ->capture_default_str();
    pretrain->add_option("--enhancer-blocks", pa.model_cfg.enhancer_blocks, "enhancer blocks")
        ->capture_default_str();
    pretrain->add_option("--channels", pa.model_cfg.channels, "feature channels")
        ->capture_default_str();
    pretrain->add_option("--generator-kind", pa.generator_kind, "memory or forward")
        ->capture_default_str();
    pretrain->add_option("--enhancer-kind", pa.enhancer_kind, "memory or forward")
        ->capture_default_str();

    TrainAbArgs tab;
    auto* train_ab = app.add_subcommand("train-ab", "stage-2 end-to-end color training");
    train_ab->add_option("--manifest", tab.base.manifest, "dataset manifest")->required();
    train_ab->add_option("--attn-checkpoint", tab.attn_ckpt, "stage-1 checkpoint")->required();
    train_ab->add_option("--out", tab.base.out_ckpt, "output checkpoint")->required();
    train_ab->add_option("--loss-csv", tab.base.loss_csv, "per-epoch loss curve CSV");
    tab.base.flags.add_to(train_ab, 32);
    train_ab->add_option("--patch-size", tab.base.patch_size, "square patch size")
        ->capture_default_str();
    train_ab->add_option("--per-image", tab.base.per_image, "patches per training image")
        ->capture_default_str();
    train_ab->add_option("--alpha", tab.base.flags.cfg.loss.alpha, "point-loss weight")
        ->capture_default_str();
    train_ab->add_option("--delta", tab.base.flags.cfg.loss.delta, "Huber threshold")
        ->capture_default_str();
    train_ab->add_option("--beta", tab.base.flags.cfg.loss.beta, "attention points per patch")
        ->capture_default_str();
    train_ab->add_option("--tau-low-frac", tab.base.tau_low_frac, "lower frequency threshold")
        ->capture_default_str();
    train_ab->add_option("--tau-high-frac", tab.base.tau_high_frac, "upper frequency threshold")
        ->capture_default_str();
    train_ab->add_option("--attention-source", tab.base.attention_source, "gt or low")
        ->capture_default_str();
    train_ab->add_flag("--diagnostics", tab.base.flags.cfg.diagnostics,
                       "log per-epoch beta-point and neighborhood PSNR");

    EnhanceArgs ea;
    auto* enh = app.add_subcommand("enhance", "enhance an image or directory");
    enh->add_option("--in", ea.input, "input image or directory")->required();
    enh->add_option("--out", ea.out_dir, "output directory")->required();
    enh->add_option("--checkpoint-l", ea.ckpt_l, "lightness checkpoint")->required();
    enh->add_option("--checkpoint-ab", ea.ckpt_ab, "color checkpoint")->required();

    EvalArgs ev;
    auto* evalc = app.add_subcommand("eval", "PSNR/SSIM/LOE/colorfulness report");
    evalc->add_option("--pred", ev.pred_dir, "enhanced images")->required();
    evalc->add_option("--gt", ev.gt_dir, "ground-truth images")->required();
    evalc->add_option("--low", ev.low_dir, "low-light inputs")->required();
    evalc->add_option("--out-csv", ev.out_csv, "CSV report path")->required();
    evalc->add_option("--out-table", ev.out_table, "aligned text table path");

    AttnVizArgs av;
    auto* viz = app.add_subcommand("attn-viz", "attention map visualization");
    viz->add_option("--image", av.image, "input image")->required();
    viz->add_option("--out", av.out_dir, "output directory")->required();
    viz->add_option("--checkpoint-ab", av.ckpt_ab, "color checkpoint for predicted maps");
    viz->add_option("--checkpoint-l", av.ckpt_l, "lightness checkpoint for the overlay base");
    viz->add_option("--tau-low-frac", av.tau_low_frac, "lower frequency threshold")
        ->capture_default_str();
    viz->add_option("--tau-high-frac", av.tau_high_frac, "upper frequency threshold")
        ->capture_default_str();
    viz->add_option("--top", av.top, "responses to overlay")->capture_default_str();

    GradCheckArgs gc;
    auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    grad->add_option("--seed", gc.seed, "RNG seed")->capture_default_str();
    grad->add_option("--samples", gc.samples, "coordinates per check")->capture_default_str();
    grad->add_option("--h", gc.h, "central difference step")->capture_default_str();
    grad->add_option("--tolerance", gc.tolerance, "max relative error")->capture_default_str();

    AblateArgs ab;
    auto* ablate = app.add_subcommand("ablate-alpha", "loss-weight sweep");
    ablate->add_option("--manifest", ab.manifest, "dataset manifest")->required();
    ablate->add_option("--out-csv", ab.out_csv, "sweep result CSV")->required();
    ablate->add_option("--checkpoint-l", ab.ckpt_l, "reuse a trained lightness checkpoint");
    ablate->add_option("--alphas", ab.alphas, "sweep values")->delimiter(',')
        ->capture_default_str();
    ablate->add_option("--mode", ab.mode, "warm (fine-tune from alpha=1) or cold")
        ->capture_default_str();
    ab.flags.add_to(ablate, 32);
    ablate->add_option("--patch-size", ab.patch_size, "square patch size")->capture_default_str();
    ablate->add_option("--per-image", ab.per_image, "patches per training image")
        ->capture_default_str();
    ablate->add_option("--delta", ab.flags.cfg.loss.delta, "Huber threshold")
        ->capture_default_str();
    ablate->add_option("--beta", ab.flags.cfg.loss.beta, "attention points per patch")
        ->capture_default_str();
    ablate->add_option("--l-epochs", ab.l_epochs, "lightness training epochs (0 = --epochs)")
        ->capture_default_str();
    ablate->add_option("--pretrain-epochs", ab.pretrain_epochs,
                        "stage-1 epochs (0 = --epochs)")
        ->capture_default_str();
    ablate->add_option("--finetune-epochs", ab.finetune_epochs, "warm-mode fine-tune epochs")
        ->capture_default_str();
    ablate->add_option("--tau-low-frac", ab.tau_low_frac, "lower frequency threshold")
        ->capture_default_str();
    ablate->add_option("--tau-high-frac", ab.tau_high_frac, "upper frequency threshold")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (serial) set_backend(Backend::Serial);

    try {
        if (synth->parsed()) return run_synth(synth_args);
        if (train_l->parsed()) return run_train_l(tl, train_l);
        if (pretrain->parsed()) return run_pretrain_attn(pa, pretrain);
        if (train_ab->parsed()) return run_train_ab(tab, train_ab);
        if (enh->parsed()) return run_enhance(ea);
        if (evalc->parsed()) return run_eval(ev);
        if (viz->parsed()) return run_attn_viz(av);
        if (grad->parsed()) return run_gradcheck(gc);
        if (ablate->parsed()) return run_ablate(ab, ablate);
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
