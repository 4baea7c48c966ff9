#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedfair/matrix.hpp"

namespace fedfair {

// Train / local-test / federated-test fractions applied to each client's data.
struct SplitSpec {
    double train_frac = 0.7;
    double local_test_frac = 0.1;
    double fed_test_frac = 0.2;

    void validate(const std::string& key_path = "split") const;
};

struct ClientDataset {
    int client_id = 0;
    Batch train;
    Batch local_test;

    size_t n_k() const { return train.size(); }
    bool has_local_eval() const { return !local_test.empty(); }
};

struct FederatedDataset {
    std::vector<ClientDataset> clients;
    Batch fed_test;
    int class_count = 0;

    size_t total_train() const;
    // n_k / n per client, in clients order
    std::vector<double> proportions() const;
    const ClientDataset& by_id(int client_id) const;
};

// Largest-remainder rounding of total into integer parts proportional to
// weights. Ties on the fractional part go to the lower index.
std::vector<size_t> apportion(size_t total, const std::vector<double>& weights);

// Non-IID assignment: each client draws a class-proportion vector from
// Dirichlet(alpha * 1) and receives samples matching it as closely as the
// fixed class pools allow. Returns ascending index lists, one per client,
// covering every input index exactly once.
std::vector<std::vector<size_t>> dirichlet_partition(const std::vector<int>& labels,
                                                     int class_count, int num_clients,
                                                     double alpha, std::uint64_t seed);

struct ClientSplit {
    Batch train;
    Batch local_test;
    Batch fed_test;
};

// Floor-based three-way split with the remainder going to train. Ordered
// splits cut the rows as given; otherwise a shuffle seeded by `seed`
// precedes the cut.
ClientSplit split_client(const Batch& samples, const SplitSpec& spec, bool ordered,
                         std::uint64_t seed);

struct RawClient {
    int client_id = 0;
    Batch data;
};

// Per-client data before any train/test split.
struct RawClients {
    std::vector<RawClient> clients;
    int class_count = 0;
};

struct SynthConfig {
    int num_clients = 10;
    int classes = 5;
    int dims = 10;
    int min_samples = 80;
    int max_samples = 150;
    double heterogeneity = 0.5;
    double mean_scale = 1.0;
    double noise = 1.0;

    void validate(const std::string& key_path = "dataset") const;
};

// Gaussian class clusters with a per-client label mixture interpolating
// between uniform (heterogeneity 0) and single-class (heterogeneity 1).
RawClients synth_generate_raw(const SynthConfig& cfg, std::uint64_t seed);

// A single pooled sample set with near-balanced classes, for partitioning.
Batch synth_pool(int classes, int dims, size_t total_samples, double mean_scale,
                 double noise, std::uint64_t seed);

RawClients dirichlet_clients(const Batch& pool, int class_count, int num_clients,
                             double alpha, std::uint64_t seed);

FederatedDataset assemble_dataset(const RawClients& raw, const SplitSpec& spec,
                                  bool ordered, std::uint64_t seed);

FederatedDataset synth_generate(const SynthConfig& cfg, const SplitSpec& spec,
                                std::uint64_t seed);

// Reads client_<id>.csv files (header f0,...,f{d-1},label) plus an optional
// fed_test.csv from dir_path. Clients with fewer than min_samples rows are
// dropped. Rows keep file order, so ordered splits cut each file as written.
FederatedDataset load_csv_clients(const std::string& dir_path, const SplitSpec& spec,
                                  int min_samples, bool ordered = true,
                                  std::uint64_t seed = 0);

void write_client_csv_dir(const RawClients& raw, const std::string& dir_path);

}  // namespace fedfair
