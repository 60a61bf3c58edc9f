// Times the serial reference kernels against the OpenMP kernels at training
// shapes and checks that both produce identical outputs.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cwan/kernels.hpp"
#include "cwan/model.hpp"
#include "cwan/rng.hpp"

using namespace cwan;

namespace {

double time_best_of(int reps, const std::function<void()>& fn) {
    double best = 1e30;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        best = std::min(best, dt);
    }
    return best;
}

struct Case {
    const char* name;
    int cin, cout, k, h, w;
};

void fill_random(std::vector<float>& v, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(-1.f, 1.f);
    for (auto& x : v) x = u(rng);
}

bool identical(const std::vector<float>& a, const std::vector<float>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (compiled without OpenMP)\n");
#endif
    std::printf("%-34s %12s %12s %9s  %s\n", "kernel", "serial (ms)", "openmp (ms)", "speedup",
                "bitwise");

    const Case cases[] = {
        {"conv3x3 64->64 32x32", 64, 64, 3, 32, 32},
        {"conv3x3 64->64 64x64", 64, 64, 3, 64, 64},
        {"conv1x1 192->64 64x64 (gate)", 192, 64, 1, 64, 64},
        {"conv3x3 4->64 32x32 (f_ext)", 4, 64, 3, 32, 32},
    };

    auto rng = make_rng(7);
    bool all_identical = true;
    for (const auto& c : cases) {
        std::vector<float> in(static_cast<std::size_t>(c.cin) * c.h * c.w);
        std::vector<float> w(static_cast<std::size_t>(c.cout) * c.cin * c.k * c.k);
        std::vector<float> b(c.cout);
        fill_random(in, rng);
        fill_random(w, rng);
        fill_random(b, rng);
        std::vector<float> out_s(static_cast<std::size_t>(c.cout) * c.h * c.w);
        std::vector<float> out_p(out_s.size());
        std::vector<float> gin_s(in.size()), gin_p(in.size());
        std::vector<float> gw_s(w.size(), 0.f), gw_p(w.size(), 0.f);
        std::vector<float> gb_s(b.size(), 0.f), gb_p(b.size(), 0.f);

        const double ts = time_best_of(5, [&] {
            reference::conv2d_forward(in.data(), c.cin, c.h, c.w, w.data(), b.data(), c.cout, c.k,
                                      out_s.data());
        });
        const double tp = time_best_of(5, [&] {
            parallel::conv2d_forward(in.data(), c.cin, c.h, c.w, w.data(), b.data(), c.cout, c.k,
                                     out_p.data());
        });
        const bool same_fwd = identical(out_s, out_p);

        const double ts_bi = time_best_of(5, [&] {
            reference::conv2d_backward_input(out_s.data(), c.cout, c.h, c.w, w.data(), c.cin, c.k,
                                             gin_s.data());
        });
        const double tp_bi = time_best_of(5, [&] {
            parallel::conv2d_backward_input(out_s.data(), c.cout, c.h, c.w, w.data(), c.cin, c.k,
                                            gin_p.data());
        });
        const bool same_bi = identical(gin_s, gin_p);

        const double ts_bp = time_best_of(5, [&] {
            std::fill(gw_s.begin(), gw_s.end(), 0.f);
            std::fill(gb_s.begin(), gb_s.end(), 0.f);
            reference::conv2d_backward_params(in.data(), c.cin, c.h, c.w, out_s.data(), c.cout,
                                              c.k, gw_s.data(), gb_s.data());
        });
        const double tp_bp = time_best_of(5, [&] {
            std::fill(gw_p.begin(), gw_p.end(), 0.f);
            std::fill(gb_p.begin(), gb_p.end(), 0.f);
            parallel::conv2d_backward_params(in.data(), c.cin, c.h, c.w, out_s.data(), c.cout,
                                             c.k, gw_p.data(), gb_p.data());
        });
        const bool same_bp = identical(gw_s, gw_p) && identical(gb_s, gb_p);

        all_identical = all_identical && same_fwd && same_bi && same_bp;
        std::printf("%-34s %12.3f %12.3f %8.2fx  %s\n", c.name, ts * 1e3, tp * 1e3, ts / tp,
                    same_fwd ? "yes" : "NO");
        std::printf("%-34s %12.3f %12.3f %8.2fx  %s\n", "  backward input", ts_bi * 1e3,
                    tp_bi * 1e3, ts_bi / tp_bi, same_bi ? "yes" : "NO");
        std::printf("%-34s %12.3f %12.3f %8.2fx  %s\n", "  backward params", ts_bp * 1e3,
                    tp_bp * 1e3, ts_bp / tp_bp, same_bp ? "yes" : "NO");
    }

    // Whole-network forward at the training patch size.
    {
        CwanL<float> net(CwanLConfig{}, 7);
        Tensor<float> x({1, 64, 64});
        auto r2 = make_rng(8);
        std::uniform_real_distribution<float> u(0.f, 1.f);
        for (auto& v : x.data) v = u(r2);
        typename CwanL<float>::Acts acts;

        set_backend(Backend::Serial);
        const double ts = time_best_of(3, [&] { net.forward(x, acts); });
        Tensor<float> out_serial = acts.out;
        set_backend(Backend::OpenMP);
        const double tp = time_best_of(3, [&] { net.forward(x, acts); });
        const bool same = out_serial.data == acts.out.data;
        all_identical = all_identical && same;
        std::printf("%-34s %12.3f %12.3f %8.2fx  %s\n", "cwan_l forward 64x64", ts * 1e3, tp * 1e3,
                    ts / tp, same ? "yes" : "NO");
    }

    std::printf("\n%s\n", all_identical ? "serial and openmp kernels agree bit for bit"
                                        : "MISMATCH between serial and openmp kernels");
    return all_identical ? 0 : 1;
}
