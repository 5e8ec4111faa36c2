#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "runner.hpp"

int main(int argc, char** argv) {
    namespace dc = delaycomp::cli;

    CLI::App app{"Delay-compensated control experiments"};
    std::string config_path;
    std::string out_dir;
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::string preset;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    auto* out_opt = app.add_option("--out", out_dir, "output directory (default ./out)");
    auto* workers_opt =
        app.add_option("--workers", workers, "worker threads (default: logical cores)")
            ->check(CLI::PositiveNumber);
    auto* preset_opt = app.add_option("--preset", preset, "preset name, overrides the config");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        std::optional<std::string> preset_override;
        if (preset_opt->count()) preset_override = preset;
        const dc::RunConfig cfg = dc::load_config(config_path, preset_override);
        std::filesystem::path out = "out";
        if (out_opt->count()) {
            out = out_dir;
        } else if (cfg.out) {
            out = *cfg.out;
        }
        if (!workers_opt->count() && cfg.workers) workers = *cfg.workers;

        const dc::DispatchResult r = dc::dispatch(cfg, out, workers);
        if (r.exit_code != 0) {
            std::cerr << r.error.dump() << '\n';
            return r.exit_code;
        }
        for (const auto& f : r.outputs) std::cout << (out / f).string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        const dc::DispatchResult r = dc::error_result(e);
        std::cerr << r.error.dump() << '\n';
        return r.exit_code;
    }
}
