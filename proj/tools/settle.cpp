#include "settle/config.hpp"
#include "settle/error.hpp"
#include "settle/pipeline.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

namespace {

enum ExitCode { kOk = 0, kComputation = 1, kUsage = 2, kIo = 3 };

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Settlement-layer agreement toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_path;
    std::string factors_text;
    unsigned threads = 1;
    std::uint64_t seed = 0;
    std::uint64_t subsample = 0;
    bool quiet = false;

    app.add_option("--config", config_path, "Pipeline config (synth: synthetic-country config)");
    app.add_option("--out", out_path, "Output directory (overrides the config)");
    app.add_option("--factors", factors_text, "Comma-separated pyramid factors starting at 1");
    app.add_option("--threads", threads, "Worker threads, 0 = one per core")->default_val(1);
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config)");
    auto* subsample_opt = app.add_option("--subsample", subsample, "Train on a uniform subsample of this many rows");
    app.add_flag("-q,--quiet", quiet, "Only print errors");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"harmonize", "Ingest, rasterize and mask every dataset (cached)"},
        {"overlap", "National overlap report, one row per pyramid factor"},
        {"zonal", "Per-region overlap joined with HDI"},
        {"features", "Build the per-cell feature table"},
        {"train", "Nested cross-validation and bootstrap odds ratios"},
        {"report", "SVG figures from saved outputs"},
        {"synth", "Generate a synthetic country"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    spdlog::set_level(quiet ? spdlog::level::err : spdlog::level::warn);
    std::ostringstream sink;
    std::ostream& log = quiet ? static_cast<std::ostream&>(sink) : std::cout;
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        if (config_path.empty()) throw settle::UsageError("--config is required");
        if (command == "synth") {
            if (out_path.empty()) throw settle::UsageError("synth needs --out");
            settle::run_synth(config_path, out_path,
                              seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt, log);
            return kOk;
        }
        const auto config = settle::load_pipeline_config(config_path);
        settle::RunOptions options;
        options.threads = threads;
        if (!out_path.empty()) options.output = out_path;
        if (!factors_text.empty()) options.factors = settle::parse_factor_list(factors_text);
        if (seed_opt->count()) options.seed = seed;
        if (subsample_opt->count()) options.subsample = subsample;

        if (command == "harmonize")
            settle::run_harmonize(config, options, log);
        else if (command == "overlap")
            settle::run_overlap(config, options, log);
        else if (command == "zonal")
            settle::run_zonal(config, options, log);
        else if (command == "features")
            settle::run_features(config, options, log);
        else if (command == "train")
            settle::run_train(config, options, log);
        else if (command == "report")
            settle::run_report(config, options, log);
        return kOk;
    } catch (const settle::UsageError& e) {
        std::cerr << "settle " << command << ": " << e.what() << '\n';
        return kUsage;
    } catch (const settle::IoError& e) {
        std::cerr << "settle " << command << ": I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const settle::FormatError& e) {
        std::cerr << "settle " << command << ": malformed input: " << e.what() << '\n';
        return kIo;
    } catch (const settle::Error& e) {
        std::cerr << "settle " << command << ": " << e.what() << '\n';
        return kComputation;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "settle " << command << ": I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "settle " << command << ": " << e.what() << '\n';
        return kComputation;
    }
}
