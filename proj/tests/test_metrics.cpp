#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fastdvd/metrics.hpp"

#include "support/oracles.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

using namespace fastdvd;

namespace {

// Reference MSE via Kahan-compensated summation of precomputed squared
// differences, a different accumulation order and scheme than the library's.
double mse_reference(const Tensor& a, const Tensor& b) {
    std::vector<double> sq(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sq[i] = d * d;
    }
    double sum = 0.0, carry = 0.0;
    for (double v : sq) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(sq.size());
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char ch : s) {
        if (ch == '\n') ++n;
    }
    return n;
}

} // namespace

TEST_CASE("mse handles the obvious cases") {
    Tensor a = Tensor::full(Dims{1, 3, 4, 4}, 0.25f);
    CHECK(mse(a, a) == 0.0);

    Tensor b = Tensor::full(Dims{1, 3, 4, 4}, 0.35f);
    CHECK(mse(a, b) == doctest::Approx(0.01).epsilon(1e-6));

    Tensor c(1, 3, 4, 5);
    CHECK_THROWS_AS(mse(a, c), ShapeError);
}

TEST_CASE("mse agrees with compensated summation on random inputs") {
    Rng rng(100);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor a = oracle::random_tensor<float>(Dims{2, 3, 15, 17}, rng, 0.0f, 1.0f);
        Tensor b = oracle::random_tensor<float>(Dims{2, 3, 15, 17}, rng, 0.0f, 1.0f);
        CHECK(std::abs(mse(a, b) - mse_reference(a, b)) < 1e-10);
    }
}

TEST_CASE("psnr caps exact matches and hits 20 dB at 0.1 difference") {
    Tensor a = Tensor::full(Dims{1, 3, 8, 8}, 0.5f);
    CHECK(psnr_frame(a, a) == 100.0);

    Tensor clean(1, 3, 32, 32);
    Tensor est = Tensor::full(Dims{1, 3, 32, 32}, 0.1f);
    CHECK(std::abs(psnr_frame(clean, est) - 20.0) < 1e-6);

    CHECK(psnr_frame(clean, est) == psnr_frame(est, clean));

    Tensor other(1, 3, 32, 33);
    CHECK_THROWS_AS(psnr_frame(clean, other), ShapeError);
}

TEST_CASE("float psnr matches the 255-scale integer computation") {
    Rng rng(101);
    for (int trial = 0; trial < 5; ++trial) {
        // quantize both frames to exact 8-bit levels first
        Tensor a(1, 3, 40, 40), b(1, 3, 40, 40);
        double sq255 = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const int av = static_cast<int>(rng.next_below(256));
            const int bv = static_cast<int>(rng.next_below(256));
            a[i] = static_cast<float>(av) / 255.0f;
            b[i] = static_cast<float>(bv) / 255.0f;
            sq255 += static_cast<double>(av - bv) * (av - bv);
        }
        const double mse255 = sq255 / static_cast<double>(a.size());
        const double psnr255 = 10.0 * std::log10(255.0 * 255.0 / mse255);
        CHECK(std::abs(psnr_frame(a, b) - psnr255) < 0.01);
    }
}

TEST_CASE("sequence psnr averages the per-frame values") {
    FrameSequence clean, est;
    clean.frames.push_back(Tensor(1, 3, 16, 16));
    est.frames.push_back(Tensor::full(Dims{1, 3, 16, 16}, 0.1f)); // 20 dB
    clean.frames.push_back(Tensor(1, 3, 16, 16));
    Tensor f2 = Tensor::full(Dims{1, 3, 16, 16}, 0.0316227766f); // 30 dB
    est.frames.push_back(f2);

    PsnrReport r = psnr_sequence(clean, est);
    REQUIRE(r.count() == 2);
    CHECK(std::abs(r.per_frame[0] - 20.0) < 1e-5);
    CHECK(std::abs(r.per_frame[1] - 30.0) < 1e-5);
    CHECK(std::abs(r.sequence_avg - 25.0) < 1e-5);
    CHECK(r.sequence_avg == (r.per_frame[0] + r.per_frame[1]) / 2.0);

    PsnrReport self = psnr_sequence(clean, clean);
    CHECK(self.sequence_avg == 100.0);

    FrameSequence single;
    single.frames.push_back(est.frames[0]);
    FrameSequence single_clean;
    single_clean.frames.push_back(clean.frames[0]);
    PsnrReport one = psnr_sequence(single_clean, single);
    CHECK(one.sequence_avg == one.per_frame[0]);

    CHECK_THROWS_AS(psnr_sequence(clean, single), ShapeError);
    FrameSequence none;
    CHECK_THROWS_AS(psnr_sequence(none, none), Error);
}

TEST_CASE("sigma-25 noise lands at the predicted psnr") {
    Rng rng(102);
    FrameSequence clean;
    clean.frames.push_back(
        oracle::random_tensor<float>(Dims{1, 3, 960, 540}, rng, 0.2f, 0.8f));
    NoiseSpec spec{25.0f, false, 9};
    FrameSequence noisy = add_awgn(clean, spec);
    const double db = psnr_frame(clean.frames[0], noisy.frames[0]);
    const double expected = 20.0 * std::log10(255.0 / 25.0); // 20.17 dB
    CHECK(std::abs(db - expected) < 0.1);
}

TEST_CASE("csv report carries one row per frame") {
    PsnrReport r;
    r.per_frame = {20.5, 31.25, 28.0};
    r.sequence_avg = (20.5 + 31.25 + 28.0) / 3.0;

    std::ostringstream out;
    write_psnr_csv(r, out);
    const std::string text = out.str();
    CHECK(count_lines(text) == 4); // header + 3 frames
    CHECK(text.substr(0, 20) == "frame_index,psnr_db\n");
    CHECK(text.find("0,20.500000\n") != std::string::npos);
    CHECK(text.find("1,31.250000\n") != std::string::npos);
    CHECK(text.find("2,28.000000\n") != std::string::npos);
}
