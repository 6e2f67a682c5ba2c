#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "ccotdr/fft.hpp"

using namespace ccotdr;

namespace {

// Naive DFT oracle.
std::vector<cplx> dft(const std::vector<cplx>& x, bool inverse = false) {
    const std::size_t n = x.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<cplx> out(n, cplx(0, 0));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t m = 0; m < n; ++m)
            out[k] += x[m] * std::polar(1.0, sign * 2.0 * M_PI * double(k * m) / double(n));
    if (inverse)
        for (auto& v : out) v /= double(n);
    return out;
}

std::vector<cplx> random_cplx(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<cplx> v(n);
    for (auto& x : v) x = cplx(u(rng), u(rng));
    return v;
}

double max_rel_err(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double scale = 0, err = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max(scale, std::abs(b[i]));
        err = std::max(err, std::abs(a[i] - b[i]));
    }
    return scale > 0 ? err / scale : err;
}

} // namespace

TEST_CASE("radix-2 FFT matches the naive DFT") {
    for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{16}, std::size_t{64}}) {
        auto x = random_cplx(n, 42 + unsigned(n));
        auto ref = dft(x);
        Fft plan(n);
        auto got = x;
        plan.forward(got.data());
        CHECK(max_rel_err(got, ref) < 1e-10);
    }
}

TEST_CASE("inverse FFT round trip") {
    auto x = random_cplx(256, 7);
    auto y = x;
    Fft plan(256);
    plan.forward(y.data());
    plan.inverse(y.data());
    CHECK(max_rel_err(y, x) < 1e-12);
}

TEST_CASE("Bluestein FFT handles arbitrary lengths") {
    for (std::size_t n : {std::size_t{12}, std::size_t{79}, std::size_t{100}, std::size_t{1024}}) {
        auto x = random_cplx(n, 100 + unsigned(n));
        auto ref = dft(x);
        auto got = x;
        fft_any(got, false);
        CHECK(max_rel_err(got, ref) < 1e-9);

        auto back = got;
        fft_any(back, true);
        CHECK(max_rel_err(back, x) < 1e-9);
    }
}

TEST_CASE("FFT convolution equals the direct sum to 1e-9 relative error") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> s(1000);
    for (auto& v : s) v = u(rng);
    auto h = random_cplx(257, 3);

    auto ref = convolve_direct(s, h, s.size());
    ConvolutionPlan plan(s, h.size(), s.size());
    std::vector<cplx> got, scratch;
    plan.run(h, got, scratch);
    REQUIRE(got.size() == ref.size());
    CHECK(max_rel_err(got, ref) < 1e-9);
}
