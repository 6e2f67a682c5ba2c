#pragma once

#include <cassert>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ccotdr {

using cplx = std::complex<double>;

/// Iterative radix-2 FFT with precomputed twiddle and bit-reversal tables.
/// A plan is immutable after construction and safe to share across threads.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        assert(n >= 1 && (n & (n - 1)) == 0);
        twiddle_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            double a = -2.0 * pi_ * static_cast<double>(k) / static_cast<double>(n);
            twiddle_[k] = cplx(std::cos(a), std::sin(a));
        }
        bitrev_.resize(n);
        std::size_t log2n = 0;
        while ((std::size_t{1} << log2n) < n) ++log2n;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < log2n; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
            bitrev_[i] = static_cast<uint32_t>(r);
        }
    }

    std::size_t size() const { return n_; }

    void forward(cplx* x) const { transform(x, false); }

    /// Inverse transform, scaled by 1/n.
    void inverse(cplx* x) const {
        transform(x, true);
        double s = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) x[i] *= s;
    }

    static std::size_t next_pow2(std::size_t n) {
        std::size_t p = 1;
        while (p < n) p <<= 1;
        return p;
    }

private:
    void transform(cplx* x, bool inv) const {
        for (std::size_t i = 0; i < n_; ++i) {
            std::size_t j = bitrev_[i];
            if (i < j) std::swap(x[i], x[j]);
        }
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            std::size_t half = len >> 1;
            std::size_t step = n_ / len;
            for (std::size_t i = 0; i < n_; i += len) {
                for (std::size_t k = 0; k < half; ++k) {
                    cplx w = twiddle_[k * step];
                    if (inv) w = std::conj(w);
                    cplx u = x[i + k];
                    cplx v = x[i + k + half] * w;
                    x[i + k] = u + v;
                    x[i + k + half] = u - v;
                }
            }
        }
    }

    static constexpr double pi_ = 3.141592653589793238462643383279502884;
    std::size_t n_;
    std::vector<cplx> twiddle_;
    std::vector<uint32_t> bitrev_;
};

/// FFT of arbitrary length via Bluestein's chirp-z algorithm.
/// In-place on `x`; `inverse` applies 1/n scaling.
inline void fft_any(std::vector<cplx>& x, bool inverse = false) {
    const std::size_t n = x.size();
    if (n == 0) return;
    if ((n & (n - 1)) == 0) {
        Fft plan(n);
        if (inverse) plan.inverse(x.data());
        else plan.forward(x.data());
        return;
    }
    const double pi = 3.141592653589793238462643383279502884;
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<cplx> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // angle = sign * pi * k^2 / n, k^2 reduced mod 2n to keep precision
        std::size_t k2 = (k * k) % (2 * n);
        chirp[k] = std::polar(1.0, sign * pi * static_cast<double>(k2) / static_cast<double>(n));
    }
    std::size_t m = Fft::next_pow2(2 * n - 1);
    std::vector<cplx> a(m), b(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
    b[0] = cplx(1.0, 0.0);
    for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
    Fft plan(m);
    plan.forward(a.data());
    plan.forward(b.data());
    for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
    plan.inverse(a.data());
    for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
    if (inverse) {
        double s = 1.0 / static_cast<double>(n);
        for (auto& v : x) v *= s;
    }
}

/// Linear convolution y[n] = sum_i h[i] s[n-i], truncated to out_len, with the
/// real input `s` fixed at plan time. Shareable across threads; each caller
/// passes its own scratch buffer.
class ConvolutionPlan {
public:
    ConvolutionPlan(std::span<const double> s, std::size_t max_h_len, std::size_t out_len)
        : out_len_(out_len),
          nfft_(Fft::next_pow2(s.size() + max_h_len - 1)),
          max_h_len_(max_h_len),
          fft_(Fft::next_pow2(s.size() + max_h_len - 1)),
          s_spectrum_(nfft_) {
        for (std::size_t i = 0; i < s.size(); ++i) s_spectrum_[i] = cplx(s[i], 0.0);
        fft_.forward(s_spectrum_.data());
    }

    std::size_t nfft() const { return nfft_; }

    void run(std::span<const cplx> h, std::vector<cplx>& out, std::vector<cplx>& scratch) const {
        assert(h.size() <= max_h_len_);
        scratch.assign(nfft_, cplx(0.0, 0.0));
        std::copy(h.begin(), h.end(), scratch.begin());
        fft_.forward(scratch.data());
        for (std::size_t k = 0; k < nfft_; ++k) scratch[k] *= s_spectrum_[k];
        fft_.inverse(scratch.data());
        out.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(out_len_));
    }

private:
    std::size_t out_len_;
    std::size_t nfft_;
    std::size_t max_h_len_;
    Fft fft_;
    std::vector<cplx> s_spectrum_;
};

/// Direct-sum convolution oracle, O(N*K). Test/verification path.
inline std::vector<cplx> convolve_direct(std::span<const double> s, std::span<const cplx> h,
                                         std::size_t out_len) {
    std::vector<cplx> y(out_len, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (h[i] == cplx(0.0, 0.0)) continue;
        std::size_t n_end = std::min(out_len, s.size() + i);
        for (std::size_t n = i; n < n_end; ++n) y[n] += h[i] * s[n - i];
    }
    return y;
}

} // namespace ccotdr
