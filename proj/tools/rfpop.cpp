#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "rfpop/cli.hpp"

namespace {

// Opens --output if given; otherwise writes to stdout.
std::ostream& open_output(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
    if (path.empty() || path == "-") {
        return std::cout;
    }
    holder = std::make_unique<std::ofstream>(path);
    if (!*holder) {
        throw rfpop::cli::ConfigError("cannot open output file '" + path + "'");
    }
    return *holder;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace rfpop;

    CLI::App app{"Robust penalized changepoint detection"};
    app.require_subcommand(1);

    cli::RunConfig run;
    std::string loss_name = "biweight";
    std::string format = "json";
    std::string output;
    bool online = false;
    std::uint64_t unused_seed = 0;
    auto* detect = app.add_subcommand("detect", "Segment a series (one value per line)");
    detect->add_option("--loss", loss_name, "l2|l1|huber|biweight|quantile")->capture_default_str();
    detect->add_option("--k", run.k, "Absolute K");
    detect->add_option("--k-sigma", run.k_sigma, "K as a multiple of the MAD scale estimate");
    detect->add_option("--beta", run.beta, "Absolute penalty");
    detect->add_option("--beta-multiplier", run.beta_multiplier, "Multiplier of the default penalty");
    detect->add_option("--quantile", run.quantile, "u for the quantile loss (default 0.5)");
    detect->add_option("--sigma", run.sigma, "Noise scale; replaces the MAD estimate");
    detect->add_flag("--online", online, "Emit one record per input point");
    detect->add_option("--input", run.input, "Input file (default stdin)");
    detect->add_option("--output", output, "Output file (default stdout)");
    detect->add_option("--format", format, "json|tsv")->capture_default_str();
    detect->add_option("--column", run.column, "Column index or header name for comma-separated input");
    detect->add_option("--seed", unused_seed, "Accepted for symmetry; detection is deterministic");

    cli::SimulateConfig sim;
    std::string sim_format = "tsv";
    std::string sim_methods = "biweight,l2";
    std::string sim_output;
    auto* simulate = app.add_subcommand("simulate", "Accuracy study on a synthetic scenario");
    simulate->add_option("--scenario", sim.scenario, "bundled-150, bundled-2048 or a JSON file")->capture_default_str();
    simulate->add_option("--df", sim.df, "Student-t degrees of freedom (replaces the scenario noise)");
    simulate->add_option("--reps", sim.reps)->capture_default_str();
    simulate->add_option("--methods", sim_methods, "Comma list of l2,l1,huber,biweight,quantile,cusum")
        ->capture_default_str();
    simulate->add_option("--seed", sim.seed)->capture_default_str();
    simulate->add_option("--threads", sim.threads)->capture_default_str();
    simulate->add_option("--beta-multiplier", sim.beta_multiplier)->capture_default_str();
    simulate->add_option("--format", sim_format, "json|tsv")->capture_default_str();
    simulate->add_option("--output", sim_output);

    cli::BenchConfig bench;
    std::string bench_loss = "biweight";
    std::string bench_n = "2000..128000";
    std::string bench_changes = "every100";
    std::string bench_format = "tsv";
    std::string bench_output;
    auto* benchmark = app.add_subcommand("bench", "Runtime scaling study");
    benchmark->add_option("--loss", bench_loss)->capture_default_str();
    benchmark->add_option("--n", bench_n, "lo..hi (doubling) or a comma list")->capture_default_str();
    benchmark->add_option("--changes", bench_changes, "none|every100")->capture_default_str();
    benchmark->add_option("--seed", bench.seed)->capture_default_str();
    benchmark->add_option("--format", bench_format, "json|tsv")->capture_default_str();
    benchmark->add_option("--output", bench_output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kInvalidConfig;
    }

    std::unique_ptr<std::ofstream> out_file;
    try {
        if (*detect) {
            run.loss = loss::parse_kind(loss_name);
            run.format = cli::parse_format(format);
            run.mode = online ? cli::Mode::Online : cli::Mode::Batch;
            std::ostream& out = open_output(output, out_file);
            if (run.input.empty() || run.input == "-") {
                run.input.clear();
                return cli::detect(run, std::cin, out, std::cerr);
            }
            std::ifstream in(run.input);
            if (!in) {
                std::cerr << "error: cannot open input file '" << run.input << "'\n";
                return cli::kMalformedInput;
            }
            return cli::detect(run, in, out, std::cerr);
        }
        if (*simulate) {
            sim.methods = cli::parse_methods(sim_methods);
            sim.format = cli::parse_format(sim_format);
            return cli::simulate(sim, open_output(sim_output, out_file), std::cerr);
        }
        bench.loss = loss::parse_kind(bench_loss);
        bench.n_grid = cli::parse_n_grid(bench_n);
        if (bench_changes == "none") {
            bench.changes = simbench::ChangeRegime::None;
        } else if (bench_changes == "every100") {
            bench.changes = simbench::ChangeRegime::Every100;
        } else {
            throw cli::ConfigError("--changes must be none or every100");
        }
        bench.format = cli::parse_format(bench_format);
        return cli::bench(bench, open_output(bench_output, out_file), std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kInvalidConfig;
    }
}
