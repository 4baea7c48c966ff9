#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedfair/adaptation.hpp"
#include "fedfair/data.hpp"
#include "fedfair/runtime.hpp"

namespace fedfair {

// Raised for anything wrong with a config file or an override: bad syntax,
// unknown keys, values out of range. The CLI maps it to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DatasetKind { synth, dirichlet, csv };

std::string dataset_kind_name(DatasetKind kind);

struct DatasetConfig {
    DatasetKind kind = DatasetKind::synth;
    // synth: per-client label mixtures; dirichlet: one pooled sample set
    // carved up by Dirichlet(alpha) draws. Both read the shape knobs below.
    SynthConfig synth;
    double alpha = 0.9;
    // csv: a directory of client_<id>.csv files
    std::string dir;
    int min_client_samples = 0;
    bool shuffle_split = false;
    SplitSpec split;

    void validate(const std::string& key_path = "dataset") const;
};

// Client count when it is fixed by the config, 0 for csv datasets whose
// population is only known after loading.
size_t population_hint(const DatasetConfig& cfg);

FederatedDataset build_dataset(const DatasetConfig& cfg, std::uint64_t seed);

// Unsplit per-client samples for the partition subcommand; rejects csv kind.
RawClients build_raw_clients(const DatasetConfig& cfg, std::uint64_t seed);

struct ModelConfig {
    std::vector<int> hidden = {32};

    ModelSpec to_spec(int input_dim, int class_count) const;
    void validate(const std::string& key_path = "model") const;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    DatasetConfig dataset;
    ModelConfig model;
    // federated.objective holds the first entry of `objectives`; sweeps
    // reassign it per run
    FedConfig federated;
    std::vector<ObjectiveSpec> objectives = {ObjectiveSpec{}};
    std::vector<AdaptMethod> adapt_methods = {AdaptMethod::ft, AdaptMethod::fb, AdaptMethod::ewc,
                                              AdaptMethod::kd};
    AdaptConfig adapt;
    int max_adapt_clients = 0;  // 0 adapts everyone

    void validate() const;
};

// Parses and fully validates a config document. Unknown keys are rejected
// with their dotted path; nested range checks fire at parse time.
ExperimentConfig parse_config_json(const nlohmann::json& root);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig parse_config_file(const std::string& path);

// The effective config as a canonical document with every default filled
// in. parse_config_json(config_to_json(cfg)) reproduces cfg.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Sets a dotted key ("objective.q") in a config document. The value text is
// parsed as JSON when possible, otherwise taken as a string.
void set_config_key(nlohmann::json& root, const std::string& dotted_key, const std::string& value);

// Built-in desk-scale experiment profiles.
std::vector<std::string> preset_names();
nlohmann::json preset_config(const std::string& name);

}  // namespace fedfair
