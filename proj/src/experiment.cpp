#include "fedfair/experiment.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <utility>

#include "fedfair/adaptation.hpp"
#include "fedfair/log.hpp"

namespace fs = std::filesystem;

namespace fedfair {

namespace {

// Fixed six decimals for the loss-scale history columns; negative zero
// collapses like format_fixed3 does.
std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (!s.empty() && s[0] == '-' && s.find_first_not_of("0.", 1) == std::string::npos)
        s.erase(0, 1);
    return s;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

struct Workspace {
    FederatedDataset dataset;
    ModelSpec spec;
};

Workspace make_workspace(const ExperimentConfig& cfg) {
    cfg.validate();
    Workspace ws;
    ws.dataset = build_dataset(cfg.dataset, cfg.seed);
    if (ws.dataset.clients.empty())
        throw std::runtime_error("experiment: dataset has no clients");
    size_t input_dim = 0;
    for (const auto& client : ws.dataset.clients) {
        if (!client.train.empty()) {
            input_dim = client.train.features.cols;
            break;
        }
    }
    if (input_dim == 0) throw std::runtime_error("experiment: no client has training data");
    ws.spec = cfg.model.to_spec(static_cast<int>(input_dim), ws.dataset.class_count);
    return ws;
}

// Indices of the clients that take part in adaptation and the report:
// ascending id order, capped by max_adapt_clients, restricted to clients
// that can both train and be scored on a local test split.
std::vector<size_t> adaptation_cohort(const FederatedDataset& dataset, int cap) {
    std::vector<size_t> picked;
    for (size_t i = 0; i < dataset.clients.size(); ++i) {
        if (cap > 0 && picked.size() == static_cast<size_t>(cap)) break;
        const ClientDataset& client = dataset.clients[i];
        if (client.n_k() == 0 || !client.has_local_eval()) {
            log::warn("client " + std::to_string(client.client_id) + " has no " +
                      (client.n_k() == 0 ? "training rows" : "local test rows") +
                      " and is left out of the adaptation report");
            continue;
        }
        picked.push_back(i);
    }
    if (picked.empty())
        throw std::runtime_error(
            "no client has both training data and a local test split; nothing to adapt");
    return picked;
}

std::map<int, double> local_baseline_accs(const Workspace& ws, const ExperimentConfig& cfg,
                                          const std::vector<size_t>& cohort) {
    std::vector<double> accs(cohort.size(), 0.0);
    parallel_for(cohort.size(), cfg.federated.workers, [&](size_t i) {
        const ClientDataset& client = ws.dataset.clients[cohort[i]];
        ParamVector params;
        try {
            params = train_local_only(client, ws.spec, cfg.adapt.sgd, cfg.seed);
        } catch (const TrainingDiverged& e) {
            log::warn("local baseline for client " + std::to_string(client.client_id) +
                      " diverged, scoring its untrained start instead: " + e.what());
            params = init_params(ws.spec, cfg.seed ^ static_cast<std::uint64_t>(client.client_id));
        }
        accs[i] = *accuracy(params, ws.spec, client.local_test);
    });
    std::map<int, double> out;
    for (size_t i = 0; i < cohort.size(); ++i)
        out[ws.dataset.clients[cohort[i]].client_id] = accs[i];
    return out;
}

std::vector<ClientRow> evaluate_objective(const Workspace& ws, const ExperimentConfig& cfg,
                                          const ObjectiveSpec& objective,
                                          const ParamVector& global,
                                          const std::vector<size_t>& cohort,
                                          const std::map<int, double>& local_accs) {
    const size_t n_methods = cfg.adapt_methods.size();
    std::vector<double> fed(cohort.size(), 0.0);
    std::vector<std::vector<double>> adapted(n_methods, std::vector<double>(cohort.size(), 0.0));
    parallel_for(cohort.size(), cfg.federated.workers, [&](size_t i) {
        const ClientDataset& client = ws.dataset.clients[cohort[i]];
        fed[i] = *accuracy(global, ws.spec, client.local_test);
        for (size_t m = 0; m < n_methods; ++m) {
            ParamVector params;
            try {
                params = run_adaptation(client, global, ws.spec, cfg.adapt_methods[m], cfg.adapt,
                                        cfg.seed);
            } catch (const TrainingDiverged& e) {
                log::warn(adapt_method_name(cfg.adapt_methods[m]) + " adaptation for client " +
                          std::to_string(client.client_id) +
                          " diverged, keeping the federated parameters: " + e.what());
                params = global;
            }
            adapted[m][i] = *accuracy(params, ws.spec, client.local_test);
        }
    });
    std::map<int, size_t> n_train;
    std::map<int, double> fed_map;
    for (size_t i = 0; i < cohort.size(); ++i) {
        const ClientDataset& client = ws.dataset.clients[cohort[i]];
        n_train[client.client_id] = client.n_k();
        fed_map[client.client_id] = fed[i];
    }
    std::vector<MethodAccuracies> per_method(n_methods);
    for (size_t m = 0; m < n_methods; ++m) {
        per_method[m].method = adapt_method_name(cfg.adapt_methods[m]);
        for (size_t i = 0; i < cohort.size(); ++i)
            per_method[m].acc[ws.dataset.clients[cohort[i]].client_id] = adapted[m][i];
    }
    return merge_client_rows(objective.label(), n_train, fed_map, local_accs, per_method);
}

ObjectiveRun train_objective(const Workspace& ws, const ExperimentConfig& cfg,
                             const ObjectiveSpec& objective,
                             const std::string& checkpoint_path) {
    FedConfig fed = cfg.federated;
    fed.objective = objective;
    fed.seed = cfg.seed;
    fed.checkpoint_path = checkpoint_path;
    fed.validate(ws.dataset.clients.size());
    return ObjectiveRun{objective, run_training(ws.dataset, ws.spec, fed)};
}

std::vector<ObjectiveRun> train_all(ArtifactStager& stager, const Workspace& ws,
                                    const ExperimentConfig& cfg) {
    std::vector<ObjectiveRun> runs;
    runs.reserve(cfg.objectives.size());
    for (const auto& objective : cfg.objectives)
        runs.push_back(
            train_objective(ws, cfg, objective, stager.stage(checkpoint_name(cfg, objective))));
    return runs;
}

void write_manifest(const std::string& path, const ExperimentConfig& cfg) {
    nlohmann::json echo = config_to_json(cfg);
    // the worker count is a machine knob, not part of the experiment
    // identity, so the recorded config leaves it out
    echo["federated"].erase("workers");
    nlohmann::json doc;
    doc["config"] = std::move(echo);
    doc["seed"] = cfg.seed;
    doc["versions"] = {{"fedfair", kFedfairVersion}, {"manifest", 1}};
    std::ofstream out = open_for_write(path);
    out << doc.dump(2) << '\n';
    finish_write(out, path);
}

void write_history_csv(const std::string& path, const std::vector<ObjectiveRun>& runs) {
    std::ofstream out = open_for_write(path);
    out << "objective,round,centralised_acc,objective_value,weight_entropy\n";
    for (const auto& run : runs) {
        const std::string label = run.objective.label();
        for (const RoundRecord& rec : run.training.history) {
            out << label << ',' << rec.round << ',';
            if (rec.centralised_acc) out << format_fixed3(*rec.centralised_acc);
            out << ',' << fixed6(rec.objective_value) << ',' << fixed6(weight_entropy(rec.weights))
                << '\n';
        }
    }
    finish_write(out, path);
}

ClientsTable build_clients_table(const Workspace& ws, const ExperimentConfig& cfg,
                                 const std::vector<std::pair<ObjectiveSpec, ParamVector>>& globals,
                                 const std::vector<size_t>& cohort,
                                 const std::map<int, double>& local_accs) {
    ClientsTable table;
    table.methods.reserve(cfg.adapt_methods.size());
    for (AdaptMethod m : cfg.adapt_methods) table.methods.push_back(adapt_method_name(m));
    for (const auto& [objective, global] : globals) {
        std::vector<ClientRow> rows =
            evaluate_objective(ws, cfg, objective, global, cohort, local_accs);
        table.rows.insert(table.rows.end(), std::make_move_iterator(rows.begin()),
                          std::make_move_iterator(rows.end()));
    }
    return table;
}

void stage_reports(ArtifactStager& stager, const ClientsTable& table) {
    write_report_csv(stager.stage("report.csv"), build_report(table, ReportMode::relative));
    write_report_csv(stager.stage("report_absolute.csv"),
                     build_report(table, ReportMode::absolute));
}

}  // namespace

ArtifactStager::ArtifactStager(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec)
        throw std::runtime_error("cannot create output directory '" + dir_ +
                                 "': " + ec.message());
}

std::string ArtifactStager::stage(const std::string& name) {
    staged_.push_back(name);
    return (fs::path(dir_) / (name + ".partial")).string();
}

void ArtifactStager::commit() {
    for (const std::string& name : staged_) {
        const fs::path partial = fs::path(dir_) / (name + ".partial");
        if (!fs::exists(partial))
            throw std::runtime_error("staged artifact was never written: " + partial.string());
        fs::rename(partial, fs::path(dir_) / name);
    }
    staged_.clear();
}

std::string checkpoint_name(const ExperimentConfig& cfg, const ObjectiveSpec& objective) {
    if (cfg.objectives.size() <= 1) return "checkpoint.bin";
    return "checkpoint_" + objective.label() + ".bin";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    const Workspace ws = make_workspace(cfg);
    const std::vector<size_t> cohort = adaptation_cohort(ws.dataset, cfg.max_adapt_clients);
    ArtifactStager stager(out_dir);
    write_manifest(stager.stage("manifest.json"), cfg);
    std::vector<ObjectiveRun> runs = train_all(stager, ws, cfg);
    write_history_csv(stager.stage("history.csv"), runs);

    const std::map<int, double> local_accs = local_baseline_accs(ws, cfg, cohort);
    std::vector<std::pair<ObjectiveSpec, ParamVector>> globals;
    globals.reserve(runs.size());
    for (const ObjectiveRun& run : runs) globals.emplace_back(run.objective, run.training.params);
    ClientsTable table = build_clients_table(ws, cfg, globals, cohort, local_accs);

    const std::string clients_partial = stager.stage("clients.csv");
    write_clients_csv(clients_partial, table);
    // the reports are built from the file just written, so a later report
    // pass over clients.csv reproduces them byte for byte
    stage_reports(stager, read_clients_csv(clients_partial));
    stager.commit();
    return ExperimentResult{std::move(runs), std::move(table)};
}

std::vector<ObjectiveRun> run_train_stage(const ExperimentConfig& cfg,
                                          const std::string& out_dir) {
    const Workspace ws = make_workspace(cfg);
    ArtifactStager stager(out_dir);
    write_manifest(stager.stage("manifest.json"), cfg);
    std::vector<ObjectiveRun> runs = train_all(stager, ws, cfg);
    write_history_csv(stager.stage("history.csv"), runs);
    stager.commit();
    return runs;
}

ClientsTable run_adapt_stage(const ExperimentConfig& cfg, const std::string& out_dir) {
    const Workspace ws = make_workspace(cfg);
    const std::vector<size_t> cohort = adaptation_cohort(ws.dataset, cfg.max_adapt_clients);
    std::vector<std::pair<ObjectiveSpec, ParamVector>> globals;
    globals.reserve(cfg.objectives.size());
    for (const auto& objective : cfg.objectives) {
        const std::string path = (fs::path(out_dir) / checkpoint_name(cfg, objective)).string();
        Checkpoint ckpt = load_checkpoint(path);
        if (ckpt.layer_sizes != ws.spec.layer_sizes)
            throw std::runtime_error("checkpoint '" + path +
                                     "' does not match the configured model");
        if (ckpt.seed != cfg.seed)
            log::warn("checkpoint '" + path + "' was trained with seed " +
                      std::to_string(ckpt.seed) + "; adaptation streams use the configured seed " +
                      std::to_string(cfg.seed));
        globals.emplace_back(objective, std::move(ckpt.params));
    }
    ArtifactStager stager(out_dir);
    const std::map<int, double> local_accs = local_baseline_accs(ws, cfg, cohort);
    ClientsTable table = build_clients_table(ws, cfg, globals, cohort, local_accs);
    write_clients_csv(stager.stage("clients.csv"), table);
    stager.commit();
    return table;
}

void run_report_stage(const std::string& clients_csv, const std::string& out_dir) {
    const ClientsTable table = read_clients_csv(clients_csv);
    ArtifactStager stager(out_dir);
    stage_reports(stager, table);
    stager.commit();
}

}  // namespace fedfair
