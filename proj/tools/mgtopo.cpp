#include "mgtopo/app/driver.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

using namespace mgtopo;
using namespace mgtopo::app;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

int report(const std::exception& e, int code) {
    std::cerr << "mgtopo: " << e.what() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"SIMP topology optimization with a multigrid-preconditioned solver"};
    cli.require_subcommand(1);

    auto* run = cli.add_subcommand("run", "optimize one preset");
    std::string config_path;
    run->add_option("--config", config_path, "key=value file; flags override its entries");
    std::map<std::string, std::string> flags;
    for (const auto& key : config_keys()) {
        run->add_option_function<std::string>(
            std::string("--") + key.name, [&flags, name = std::string(key.name)](const std::string& v) { flags[name] = v; },
            key.help);
    }
    bool quiet = false;
    run->add_flag("--quiet", quiet, "suppress the per-iteration log");

    auto* bench = cli.add_subcommand("bench", "run a matrix of configurations and compare schemes");
    std::string matrix, bench_out = "bench";
    bench->add_option("--matrix", matrix, "one cell per line, each a list of key=value settings")->required();
    bench->add_option("--out", bench_out, "output directory");
    bench->add_flag("--quiet", quiet, "suppress the per-iteration log");

    auto* list = cli.add_subcommand("presets", "list the available presets");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    std::ostream* log = quiet ? nullptr : &std::cout;
    try {
        if (*list) {
            for (const auto& p : presets())
                std::cout << p.name << "  " << p.domain[0] << " x " << p.domain[1] << " x " << p.domain[2] << ", default "
                          << format_resolution(p.default_resolution) << ", volfrac " << p.volfrac << "\n    "
                          << p.summary << "\n";
            return kOk;
        }
        if (*run) {
            RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config_file(config_path);
            for (const auto& [k, v] : flags) apply_setting(cfg, k, v);
            const RunOutcome o = run_design(cfg, log);
            std::cout << "final compliance " << (o.result.history.empty() ? 0.0 : o.result.history.back().compliance)
                      << ", results in " << o.out_dir.string() << "\n";
            return kOk;
        }
        const auto rows = run_benchmark(parse_bench_matrix_file(matrix), bench_out, log);
        int failed = 0;
        for (const auto& r : rows) failed += !r.ok;
        std::cout << rows.size() - failed << " of " << rows.size() << " cells succeeded, table in "
                  << (std::filesystem::path(bench_out) / "bench.csv").string() << "\n";
        return kOk;
    } catch (const ConfigError& e) {
        return report(e, kConfigError);
    } catch (const CheckpointError& e) {
        return report(e, kConfigError);
    } catch (const NumericalBreakdown& e) {
        return report(e, kNumericalError);
    } catch (const InfeasibleVolume& e) {
        return report(e, kNumericalError);
    } catch (const SetupError& e) {
        return report(e, kNumericalError);
    } catch (const std::exception& e) {
        return report(e, 1);
    }
}
