#pragma once

/// Convolution kernels, "same" zero padding, stride 1.
///
/// Two implementations share this header: `reference` is a plain serial
/// transcription of the definition and is the ground truth in tests;
/// `parallel` reorders the loops around a padded copy so the inner loop is a
/// contiguous axpy, and splits independent output planes across OpenMP
/// threads. Both accumulate each output element in the same (ic,ky,kx) or
/// (oc,ky,kx) order, so their results are identical bit for bit and runs are
/// reproducible regardless of thread count.

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cwan {

enum class Backend { Serial, OpenMP };

inline Backend& backend_ref() {
#ifdef _OPENMP
    static Backend b = Backend::OpenMP;
#else
    static Backend b = Backend::Serial;
#endif
    return b;
}

inline Backend backend() { return backend_ref(); }
inline void set_backend(Backend b) { backend_ref() = b; }

namespace detail {

// Zero-padded copy of a (C,H,W) volume, `p` pixels on each spatial side.
template <typename T>
void pad_volume(const T* in, int c, int h, int w, int p, std::vector<T>& out) {
    const int hp = h + 2 * p, wp = w + 2 * p;
    out.assign(static_cast<std::size_t>(c) * hp * wp, T(0));
    for (int ic = 0; ic < c; ++ic) {
        const T* src = in + static_cast<std::size_t>(ic) * h * w;
        T* dst = out.data() + static_cast<std::size_t>(ic) * hp * wp + p * wp + p;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) dst[x] = src[x];
            src += w;
            dst += wp;
        }
    }
}

} // namespace detail

namespace reference {

// out[oc,y,x] = bias[oc] + sum_{ic,ky,kx} in[ic, y+ky-p, x+kx-p] * w[oc,ic,ky,kx]
template <typename T>
void conv2d_forward(const T* in, int cin, int h, int w, const T* wgt, const T* bias, int cout,
                    int k, T* out) {
    const int p = (k - 1) / 2;
    for (int oc = 0; oc < cout; ++oc) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                T acc = bias[oc];
                for (int ic = 0; ic < cin; ++ic) {
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = y + ky - p;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = x + kx - p;
                            if (ix < 0 || ix >= w) continue;
                            acc += in[(static_cast<std::size_t>(ic) * h + iy) * w + ix] *
                                   wgt[((static_cast<std::size_t>(oc) * cin + ic) * k + ky) * k + kx];
                        }
                    }
                }
                out[(static_cast<std::size_t>(oc) * h + y) * w + x] = acc;
            }
        }
    }
}

// gin[ic,y,x] = sum_{oc,ky,kx} gout[oc, y+ky-p, x+kx-p] * w[oc,ic,k-1-ky,k-1-kx]
template <typename T>
void conv2d_backward_input(const T* gout, int cout, int h, int w, const T* wgt, int cin, int k,
                           T* gin) {
    const int p = (k - 1) / 2;
    for (int ic = 0; ic < cin; ++ic) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                T acc = T(0);
                for (int oc = 0; oc < cout; ++oc) {
                    for (int ky = 0; ky < k; ++ky) {
                        const int gy = y + ky - p;
                        if (gy < 0 || gy >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int gx = x + kx - p;
                            if (gx < 0 || gx >= w) continue;
                            acc += gout[(static_cast<std::size_t>(oc) * h + gy) * w + gx] *
                                   wgt[((static_cast<std::size_t>(oc) * cin + ic) * k + (k - 1 - ky)) * k +
                                       (k - 1 - kx)];
                        }
                    }
                }
                gin[(static_cast<std::size_t>(ic) * h + y) * w + x] = acc;
            }
        }
    }
}

// gw[oc,ic,ky,kx] += sum_{y,x} gout[oc,y,x] * in[ic, y+ky-p, x+kx-p]
// gb[oc] += sum_{y,x} gout[oc,y,x]       (accumulating: caller owns zeroing)
template <typename T>
void conv2d_backward_params(const T* in, int cin, int h, int w, const T* gout, int cout, int k,
                            T* gw, T* gb) {
    const int p = (k - 1) / 2;
    for (int oc = 0; oc < cout; ++oc) {
        T bacc = T(0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                bacc += gout[(static_cast<std::size_t>(oc) * h + y) * w + x];
        gb[oc] += bacc;

        for (int ic = 0; ic < cin; ++ic) {
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    T acc = T(0);
                    for (int y = 0; y < h; ++y) {
                        const int iy = y + ky - p;
                        if (iy < 0 || iy >= h) continue;
                        for (int x = 0; x < w; ++x) {
                            const int ix = x + kx - p;
                            if (ix < 0 || ix >= w) continue;
                            acc += gout[(static_cast<std::size_t>(oc) * h + y) * w + x] *
                                   in[(static_cast<std::size_t>(ic) * h + iy) * w + ix];
                        }
                    }
                    gw[((static_cast<std::size_t>(oc) * cin + ic) * k + ky) * k + kx] += acc;
                }
            }
        }
    }
}

} // namespace reference

namespace parallel {

template <typename T>
void conv2d_forward(const T* in, int cin, int h, int w, const T* wgt, const T* bias, int cout,
                    int k, T* out) {
    const int p = (k - 1) / 2;
    const int hp = h + 2 * p, wp = w + 2 * p;
    std::vector<T> pad;
    detail::pad_volume(in, cin, h, w, p, pad);

#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < cout; ++oc) {
        T* o = out + static_cast<std::size_t>(oc) * h * w;
        const T bv = bias[oc];
        for (int i = 0; i < h * w; ++i) o[i] = bv;
        const T* woc = wgt + static_cast<std::size_t>(oc) * cin * k * k;
        for (int ic = 0; ic < cin; ++ic) {
            const T* plane = pad.data() + static_cast<std::size_t>(ic) * hp * wp;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const T wv = woc[(static_cast<std::size_t>(ic) * k + ky) * k + kx];
                    for (int y = 0; y < h; ++y) {
                        const T* src = plane + static_cast<std::size_t>(y + ky) * wp + kx;
                        T* dst = o + static_cast<std::size_t>(y) * w;
                        for (int x = 0; x < w; ++x) dst[x] += wv * src[x];
                    }
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_input(const T* gout, int cout, int h, int w, const T* wgt, int cin, int k,
                           T* gin) {
    const int p = (k - 1) / 2;
    const int hp = h + 2 * p, wp = w + 2 * p;
    std::vector<T> pad;
    detail::pad_volume(gout, cout, h, w, p, pad);

#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < cin; ++ic) {
        T* o = gin + static_cast<std::size_t>(ic) * h * w;
        for (int i = 0; i < h * w; ++i) o[i] = T(0);
        for (int oc = 0; oc < cout; ++oc) {
            const T* plane = pad.data() + static_cast<std::size_t>(oc) * hp * wp;
            const T* wocic = wgt + (static_cast<std::size_t>(oc) * cin + ic) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const T wv = wocic[static_cast<std::size_t>(k - 1 - ky) * k + (k - 1 - kx)];
                    for (int y = 0; y < h; ++y) {
                        const T* src = plane + static_cast<std::size_t>(y + ky) * wp + kx;
                        T* dst = o + static_cast<std::size_t>(y) * w;
                        for (int x = 0; x < w; ++x) dst[x] += wv * src[x];
                    }
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_params(const T* in, int cin, int h, int w, const T* gout, int cout, int k,
                            T* gw, T* gb) {
    const int p = (k - 1) / 2;
    const int hp = h + 2 * p, wp = w + 2 * p;
    std::vector<T> pad;
    detail::pad_volume(in, cin, h, w, p, pad);

#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < cout; ++oc) {
        const T* g = gout + static_cast<std::size_t>(oc) * h * w;
        T bacc = T(0);
        for (int i = 0; i < h * w; ++i) bacc += g[i];
        gb[oc] += bacc;

        for (int ic = 0; ic < cin; ++ic) {
            const T* plane = pad.data() + static_cast<std::size_t>(ic) * hp * wp;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    T acc = T(0);
                    for (int y = 0; y < h; ++y) {
                        const T* src = plane + static_cast<std::size_t>(y + ky) * wp + kx;
                        const T* go = g + static_cast<std::size_t>(y) * w;
                        for (int x = 0; x < w; ++x) acc += go[x] * src[x];
                    }
                    gw[((static_cast<std::size_t>(oc) * cin + ic) * k + ky) * k + kx] += acc;
                }
            }
        }
    }
}

} // namespace parallel

// Backend dispatch. The parallel path is the default; the serial reference is
// kept selectable for tests and the kernel benchmark.
template <typename T>
void conv2d_forward(const T* in, int cin, int h, int w, const T* wgt, const T* bias, int cout,
                    int k, T* out) {
    if (backend() == Backend::Serial)
        reference::conv2d_forward(in, cin, h, w, wgt, bias, cout, k, out);
    else
        parallel::conv2d_forward(in, cin, h, w, wgt, bias, cout, k, out);
}

template <typename T>
void conv2d_backward_input(const T* gout, int cout, int h, int w, const T* wgt, int cin, int k,
                           T* gin) {
    if (backend() == Backend::Serial)
        reference::conv2d_backward_input(gout, cout, h, w, wgt, cin, k, gin);
    else
        parallel::conv2d_backward_input(gout, cout, h, w, wgt, cin, k, gin);
}

template <typename T>
void conv2d_backward_params(const T* in, int cin, int h, int w, const T* gout, int cout, int k,
                            T* gw, T* gb) {
    if (backend() == Backend::Serial)
        reference::conv2d_backward_params(in, cin, h, w, gout, cout, k, gw, gb);
    else
        parallel::conv2d_backward_params(in, cin, h, w, gout, cout, k, gw, gb);
}

} // namespace cwan
