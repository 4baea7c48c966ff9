// Command line front end: resolves a config from a preset, a file and
// dotted overrides, then drives the experiment stages.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedfair/config.hpp"
#include "fedfair/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 0;
    bool workers_set = false;
};

void add_config_options(CLI::App& cmd, CommonArgs& args) {
    auto* config = cmd.add_option("-c,--config", args.config_path, "config JSON file");
    auto* preset =
        cmd.add_option("-p,--preset", args.preset,
                       "built-in base config: " + CLI::detail::join(fedfair::preset_names()));
    config->excludes(preset);
    cmd.add_option("--set", args.overrides, "override a config key, e.g. --set federated.rounds=50")
        ->type_name("KEY=VALUE");
    cmd.add_option("--seed", args.seed, "shorthand for --set seed=N")
        ->trigger_on_parse()
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd.add_option("--workers", args.workers, "shorthand for --set federated.workers=N")
        ->trigger_on_parse()
        ->each([&args](const std::string&) { args.workers_set = true; });
}

std::string slurp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw fedfair::ConfigError("cannot open config file " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

fedfair::ExperimentConfig resolve_config(const CommonArgs& args) {
    nlohmann::json doc;
    if (!args.preset.empty()) {
        doc = fedfair::preset_config(args.preset);
    } else if (!args.config_path.empty()) {
        try {
            doc = nlohmann::json::parse(slurp_file(args.config_path));
        } catch (const nlohmann::json::parse_error& e) {
            throw fedfair::ConfigError(args.config_path + ": " + e.what());
        }
    } else {
        doc = nlohmann::json::object();
    }
    for (const std::string& entry : args.overrides) {
        const size_t eq = entry.find('=');
        if (eq == std::string::npos || eq == 0)
            throw fedfair::ConfigError("--set expects KEY=VALUE, got '" + entry + "'");
        fedfair::set_config_key(doc, entry.substr(0, eq), entry.substr(eq + 1));
    }
    if (args.seed_set) fedfair::set_config_key(doc, "seed", std::to_string(args.seed));
    if (args.workers_set)
        fedfair::set_config_key(doc, "federated.workers", std::to_string(args.workers));
    return fedfair::parse_config_json(doc);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedfair: a deterministic federated learning simulator"};
    app.set_version_flag("--version", fedfair::kFedfairVersion);
    app.require_subcommand(1);
    app.footer("Set FEDFAIR_LOG=quiet|warn|info|debug to control stderr logging.");

    CommonArgs args;
    std::string clients_csv;

    CLI::App* run = app.add_subcommand(
        "run", "train every objective, adapt each client and write the reports");
    add_config_options(*run, args);
    run->add_option("-o,--out", args.out_dir, "output directory")->required();

    CLI::App* train =
        app.add_subcommand("train", "federated training only: checkpoints and history");
    add_config_options(*train, args);
    train->add_option("-o,--out", args.out_dir, "output directory")->required();

    CLI::App* adapt = app.add_subcommand(
        "adapt", "per-client adaptation against the checkpoints a train stage left in --out");
    add_config_options(*adapt, args);
    adapt->add_option("-o,--out", args.out_dir, "train stage directory")->required();

    CLI::App* report =
        app.add_subcommand("report", "fairness report from an existing clients.csv");
    report->add_option("--clients", clients_csv, "clients.csv to summarise")->required();
    report->add_option("-o,--out", args.out_dir, "output directory")->required();

    CLI::App* partition = app.add_subcommand(
        "partition", "write the configured dataset as per-client CSV files");
    add_config_options(*partition, args);
    partition->add_option("-o,--out", args.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*run) {
            fedfair::run_experiment(resolve_config(args), args.out_dir);
            std::cout << "run complete: artifacts in " << args.out_dir << "\n";
        } else if (*train) {
            fedfair::run_train_stage(resolve_config(args), args.out_dir);
            std::cout << "training complete: checkpoints and history in " << args.out_dir << "\n";
        } else if (*adapt) {
            fedfair::run_adapt_stage(resolve_config(args), args.out_dir);
            std::cout << "adaptation complete: clients.csv in " << args.out_dir << "\n";
        } else if (*report) {
            fedfair::run_report_stage(clients_csv, args.out_dir);
            std::cout << "report written to " << args.out_dir << "\n";
        } else if (*partition) {
            const fedfair::ExperimentConfig cfg = resolve_config(args);
            const fedfair::RawClients raw = fedfair::build_raw_clients(cfg.dataset, cfg.seed);
            fedfair::write_client_csv_dir(raw, args.out_dir);
            std::cout << "wrote " << raw.clients.size() << " client files to " << args.out_dir
                      << "\n";
        }
    } catch (const fedfair::ConfigError& e) {
        std::cerr << "fedfair: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "fedfair: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "fedfair: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
