#pragma once

#include "fastdvd/errors.hpp"
#include "fastdvd/tensor.hpp"
#include "fastdvd/video.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

namespace fastdvd {

// Mean squared difference over all channels and pixels jointly, accumulated
// in double regardless of the tensor element type.
inline double mse(const Tensor& a, const Tensor& b) {
    if (a.dims() != b.dims()) {
        throw ShapeError("mse: dims mismatch, " + a.dims().str() + " vs " +
                         b.dims().str());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

// PSNR in dB for signals on a [0,1] scale (peak 1). Exact matches would be
// infinite, so anything below 1e-10 MSE is capped at 100 dB to keep sequence
// averages finite.
inline double psnr_frame(const Tensor& clean, const Tensor& estimate) {
    const double err = mse(clean, estimate);
    if (err < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / err);
}

struct PsnrReport {
    std::vector<double> per_frame; // dB, one entry per frame
    double sequence_avg = 0.0;     // arithmetic mean of per_frame

    long count() const { return static_cast<long>(per_frame.size()); }
};

inline PsnrReport psnr_sequence(const FrameSequence& clean, const FrameSequence& estimate) {
    if (clean.count() != estimate.count()) {
        throw ShapeError("psnr_sequence: " + std::to_string(clean.count()) +
                         " clean frames vs " + std::to_string(estimate.count()) +
                         " estimates");
    }
    if (clean.count() == 0) throw Error("psnr_sequence: empty sequences");
    PsnrReport report;
    report.per_frame.reserve(clean.frames.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < clean.frames.size(); ++i) {
        const double db = psnr_frame(clean.frames[i], estimate.frames[i]);
        report.per_frame.push_back(db);
        sum += db;
    }
    report.sequence_avg = sum / static_cast<double>(report.per_frame.size());
    return report;
}

// One header line plus one `frame_index,psnr_db` row per frame.
inline void write_psnr_csv(const PsnrReport& report, std::ostream& out) {
    out << "frame_index,psnr_db\n";
    for (std::size_t i = 0; i < report.per_frame.size(); ++i) {
        char row[64];
        std::snprintf(row, sizeof(row), "%zu,%.6f\n", i, report.per_frame[i]);
        out << row;
    }
}

} // namespace fastdvd
