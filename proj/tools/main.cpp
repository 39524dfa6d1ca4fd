#include "CLI11.hpp"

#include "fastdvd/metrics.hpp"
#include "fastdvd/model.hpp"
#include "fastdvd/thread_pool.hpp"
#include "fastdvd/train.hpp"
#include "fastdvd/video.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace fastdvd;

namespace {

// Everything a training run needs beyond the library TrainConfig: which
// model to build and how wide.
struct TrainSetup {
    TrainConfig cfg;
    Variant variant = Variant::cascade;
    int c0 = 32, c1 = 64, c2 = 128;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename Parse>
auto parse_or(const std::string& key, const std::string& value, Parse&& parse) {
    try {
        return parse(value);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse value '" + value + "'");
    }
}

bool parse_flag(const std::string& key, const std::string& value) {
    if (value == "on" || value == "true" || value == "1") return true;
    if (value == "off" || value == "false" || value == "0") return false;
    throw ConfigError("config key '" + key + "': expected on/off, got '" + value + "'");
}

// Plain key=value lines, # comments, keys named after TrainConfig fields
// plus `variant` and `channels`. Unknown or repeated keys are errors.
TrainSetup parse_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    TrainSetup setup;
    std::vector<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trimmed(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trimmed(line.substr(0, eq));
        const std::string value = trimmed(line.substr(eq + 1));
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
            throw ConfigError("config key '" + key + "' given twice");
        }
        seen.push_back(key);

        TrainConfig& cfg = setup.cfg;
        if (key == "patch_size") {
            cfg.patch_size = parse_or(key, value, [](const std::string& v) { return std::stoi(v); });
        } else if (key == "temporal_span") {
            cfg.temporal_span = parse_or(key, value, [](const std::string& v) { return std::stoi(v); });
        } else if (key == "sigma_low") {
            cfg.sigma_low = parse_or(key, value, [](const std::string& v) { return std::stof(v); });
        } else if (key == "sigma_high") {
            cfg.sigma_high = parse_or(key, value, [](const std::string& v) { return std::stof(v); });
        } else if (key == "epochs") {
            cfg.epochs = parse_or(key, value, [](const std::string& v) { return std::stoi(v); });
        } else if (key == "batch_size") {
            cfg.batch_size = parse_or(key, value, [](const std::string& v) { return std::stoi(v); });
        } else if (key == "ortho_epochs") {
            cfg.ortho_epochs = parse_or(key, value, [](const std::string& v) { return std::stoi(v); });
        } else if (key == "sample_count") {
            cfg.sample_count = parse_or(key, value, [](const std::string& v) { return std::stol(v); });
        } else if (key == "seed") {
            cfg.seed = parse_or(key, value, [](const std::string& v) { return std::stoull(v); });
        } else if (key == "flips") {
            cfg.augmentation.flips = parse_flag(key, value);
        } else if (key == "scale_factors") {
            cfg.augmentation.scale_factors.clear();
            for (const std::string& part : split(value, ',')) {
                cfg.augmentation.scale_factors.push_back(
                    parse_or(key, part, [](const std::string& v) { return std::stof(v); }));
            }
        } else if (key == "lr_schedule") {
            cfg.lr_schedule.clear();
            for (const std::string& part : split(value, ',')) {
                const auto colon = part.find(':');
                if (colon == std::string::npos) {
                    throw ConfigError("config key 'lr_schedule': expected epoch:rate, got '" +
                                      part + "'");
                }
                cfg.lr_schedule.emplace_back(
                    parse_or(key, part.substr(0, colon),
                             [](const std::string& v) { return std::stoi(v); }),
                    parse_or(key, part.substr(colon + 1),
                             [](const std::string& v) { return std::stod(v); }));
            }
        } else if (key == "variant") {
            if (value == "cascade") {
                setup.variant = Variant::cascade;
            } else if (value == "five_input") {
                setup.variant = Variant::five_input;
            } else {
                throw ConfigError("config key 'variant': expected cascade or five_input, got '" +
                                  value + "'");
            }
        } else if (key == "channels") {
            const std::vector<std::string> parts = split(value, ',');
            if (parts.size() != 3) {
                throw ConfigError("config key 'channels': expected three values c0,c1,c2");
            }
            setup.c0 = parse_or(key, parts[0], [](const std::string& v) { return std::stoi(v); });
            setup.c1 = parse_or(key, parts[1], [](const std::string& v) { return std::stoi(v); });
            setup.c2 = parse_or(key, parts[2], [](const std::string& v) { return std::stoi(v); });
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    validate(setup.cfg);
    return setup;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int run_denoise(const std::string& input, const std::string& output, float sigma,
                const std::string& weights_path, bool streaming) {
    FrameSequence noisy = load_sequence(input);
    ModelWeights weights = load_weights(weights_path);
    DenoiseResult result = denoise_sequence(noisy, sigma, weights, streaming);
    save_sequence(result.frames, output);
    const double total =
        std::accumulate(result.stats.frame_seconds.begin(), result.stats.frame_seconds.end(), 0.0);
    std::printf("denoised %d frames in %.2f s (%.1f ms/frame, %ld first-stage evals)\n",
                result.frames.count(), total,
                1e3 * total / static_cast<double>(result.frames.count()),
                result.stats.block1_evals);
    return 0;
}

int run_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_path, const std::string& checkpoint_dir) {
    TrainSetup setup;
    if (!config_path.empty()) setup = parse_train_config(config_path);
    Dataset data = load_dataset(data_dir);
    ModelWeights weights =
        init_weights<float>(setup.variant, setup.cfg.seed, setup.c0, setup.c1, setup.c2);
    TrainOptions opts;
    opts.checkpoint_dir = checkpoint_dir;
    opts.log = &std::cout;
    const std::vector<double> losses = train(weights, data, setup.cfg, opts);
    save_weights(weights, out_path);
    if (!losses.empty()) {
        std::printf("trained %d epochs, first epoch loss %.6g, last %.6g\n", setup.cfg.epochs,
                    losses.front(), losses.back());
    }
    std::printf("weights written to %s\n", out_path.c_str());
    return 0;
}

int run_addnoise(const std::string& input, const std::string& output, float sigma,
                 std::uint64_t seed, bool clip) {
    FrameSequence clean = load_sequence(input);
    NoiseSpec spec{sigma, clip, seed};
    FrameSequence noisy = add_awgn(clean, spec);
    save_sequence(noisy, output);
    std::printf("wrote %d frames at sigma %.2f\n", noisy.count(), sigma);
    return 0;
}

int run_psnr(const std::string& clean_dir, const std::string& test_dir,
             const std::string& csv_path) {
    FrameSequence clean = load_sequence(clean_dir);
    FrameSequence test = load_sequence(test_dir);
    PsnrReport report = psnr_sequence(clean, test);
    for (long i = 0; i < report.count(); ++i) {
        std::printf("frame %ld: %.2f dB\n", i, report.per_frame[i]);
    }
    std::printf("average: %.2f dB over %ld frames\n", report.sequence_avg, report.count());
    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw IoError("cannot open csv file '" + csv_path + "'");
        write_psnr_csv(report, csv);
    }
    return 0;
}

int run_bench(const std::string& weights_path, int width, int height, int frames, bool streaming,
              const std::string& channels) {
    ModelWeights weights = [&] {
        if (!weights_path.empty()) return load_weights(weights_path);
        const std::vector<std::string> parts = split(channels, ',');
        if (parts.size() != 3) throw ConfigError("--channels expects three values c0,c1,c2");
        return init_weights<float>(Variant::cascade, 1234, std::stoi(parts[0]),
                                   std::stoi(parts[1]), std::stoi(parts[2]));
    }();

    Rng rng(42);
    FrameSequence seq;
    for (int i = 0; i < frames; ++i) {
        Tensor f(1, 3, height, width);
        for (std::size_t j = 0; j < f.size(); ++j) {
            f[j] = static_cast<float>(rng.next_double());
        }
        seq.frames.push_back(std::move(f));
    }
    const int warmup = 2;
    if (frames <= warmup) throw ConfigError("--frames must exceed the " +
                                            std::to_string(warmup) + " warm-up frames");

    auto steady = [&](const PipelineStats& stats) {
        std::vector<double> ms;
        for (std::size_t i = warmup; i < stats.frame_seconds.size(); ++i) {
            ms.push_back(1e3 * stats.frame_seconds[i]);
        }
        return ms;
    };

    std::printf("geometry %dx%d, %d frames (%d warm-up excluded)\n", width, height, frames,
                warmup);
    DenoiseResult naive = denoise_sequence(seq, 25.0f, weights, false);
    const std::vector<double> naive_ms = steady(naive.stats);
    std::printf("naive: mean %.1f ms/frame, median %.1f ms/frame, %.1f first-stage evals/frame\n",
                mean_of(naive_ms), median_of(naive_ms),
                static_cast<double>(naive.stats.block1_evals) / frames);
    if (streaming) {
        DenoiseResult stream = denoise_sequence(seq, 25.0f, weights, true);
        const std::vector<double> stream_ms = steady(stream.stats);
        const double steady_evals =
            static_cast<double>(stream.stats.block1_evals - 3) / (frames - 1);
        std::printf(
            "streaming: mean %.1f ms/frame, median %.1f ms/frame, %.1f first-stage evals/frame "
            "(steady state)\n",
            mean_of(stream_ms), median_of(stream_ms), steady_evals);
        std::printf("speedup: %.2fx\n", mean_of(naive_ms) / mean_of(stream_ms));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("FASTDVD_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) set_num_threads(n);
    }

    CLI::App app{"FastDVDnet video denoiser"};
    app.require_subcommand(1);

    std::string input, output, weights_path, data_dir, config_path, clean_dir, test_dir;
    std::string csv_path, checkpoint_dir, channels = "32,64,128";
    float sigma = 25.0f;
    std::uint64_t seed = 0;
    bool no_streaming = false, clip = false, bench_streaming = false;
    int width = 960, height = 540, frames = 24;

    CLI::App* denoise = app.add_subcommand("denoise", "Denoise a PNG sequence");
    denoise->add_option("--input", input, "directory of noisy frames")->required();
    denoise->add_option("--output", output, "directory for denoised frames")->required();
    denoise->add_option("--sigma", sigma, "noise level on the 0-255 scale")->required();
    denoise->add_option("--weights", weights_path, "trained weights file")->required();
    denoise->add_flag("--no-streaming", no_streaming, "recompute all first-stage outputs");

    CLI::App* train_cmd = app.add_subcommand("train", "Train on a directory of sequences");
    train_cmd->add_option("--data", data_dir, "dataset directory (one subdirectory per sequence)")
        ->required();
    train_cmd->add_option("--config", config_path, "key=value training config file");
    train_cmd->add_option("--out", weights_path, "output weights file")->required();
    train_cmd->add_option("--checkpoints", checkpoint_dir, "per-epoch checkpoint directory");

    CLI::App* addnoise = app.add_subcommand("add-noise", "Add white Gaussian noise");
    addnoise->add_option("--input", input, "directory of clean frames")->required();
    addnoise->add_option("--output", output, "directory for noisy frames")->required();
    addnoise->add_option("--sigma", sigma, "noise level on the 0-255 scale")->required();
    addnoise->add_option("--seed", seed, "noise seed");
    addnoise->add_flag("--clip", clip, "clamp noisy values to [0,1]");

    CLI::App* psnr = app.add_subcommand("psnr", "Compare two sequences");
    psnr->add_option("--clean", clean_dir, "reference frames")->required();
    psnr->add_option("--test", test_dir, "frames under test")->required();
    psnr->add_option("--csv", csv_path, "write frame_index,psnr_db rows here");

    CLI::App* bench = app.add_subcommand("bench", "Time the denoiser on synthetic frames");
    bench->add_option("--weights", weights_path, "weights file (random weights when omitted)");
    bench->add_option("--width", width, "frame width");
    bench->add_option("--height", height, "frame height");
    bench->add_option("--frames", frames, "frame count");
    bench->add_option("--channels", channels, "c0,c1,c2 widths for random weights");
    bench->add_flag("--streaming", bench_streaming, "also time the streaming pipeline");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*denoise) return run_denoise(input, output, sigma, weights_path, !no_streaming);
        if (*train_cmd) return run_train(data_dir, config_path, weights_path, checkpoint_dir);
        if (*addnoise) return run_addnoise(input, output, sigma, seed, clip);
        if (*psnr) return run_psnr(clean_dir, test_dir, csv_path);
        if (*bench) return run_bench(weights_path, width, height, frames, bench_streaming, channels);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
