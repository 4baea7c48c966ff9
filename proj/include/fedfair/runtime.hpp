#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedfair/data.hpp"
#include "fedfair/losses.hpp"
#include "fedfair/model.hpp"
#include "fedfair/objectives.hpp"

namespace fedfair {

struct FedConfig {
    int rounds = 1;
    int clients_per_round = 1;
    ObjectiveSpec objective;
    SgdConfig local;
    PaflSchedule schedule = fedavg_schedule();
    std::uint64_t seed = 0;
    int eval_every = 10;
    // fraction of fed_test scored per centralised eval (seeded subsample)
    double eval_fraction = 1.0;
    int fisher_max_samples = 256;
    int workers = 1;
    std::string checkpoint_path;  // empty disables checkpointing
    int checkpoint_every = 100;

    void validate(size_t population, const std::string& key_path = "federated") const;
};

struct RoundRecord {
    int round = 0;
    std::vector<int> sampled_ids;
    // client ids whose local training diverged this round; they are dropped
    // from the aggregate
    std::vector<int> failed_ids;
    // the entries below follow the surviving clients in sampled_ids order
    std::vector<double> probe_losses;
    std::vector<double> weights;
    bool fell_back = false;
    double objective_value = 0.0;
    std::optional<double> centralised_acc;
};

// Uniform without replacement over [0, population_size), ascending. The
// stream depends only on (seed, round).
std::vector<int> sample_clients(size_t population_size, int k, std::uint64_t seed, int round);

struct LocalOutcome {
    ClientUpdate update;
    bool failed = false;
};

// One client's round: probe the loss, minimise the scheduled blend from the
// received parameters, return the delta. Failure (non-finite loss) is an
// outcome, not an exception, so one client cannot sink the round.
LocalOutcome local_train(const ClientDataset& client, const ParamVector& global,
                         const ModelSpec& spec, const FedConfig& cfg, int round);

struct TrainResult {
    ParamVector params;
    std::vector<RoundRecord> history;
};

TrainResult run_training(const FederatedDataset& dataset, const ModelSpec& spec,
                         const FedConfig& cfg);

// Runs fn(0..count-1) across up to `workers` threads and blocks until done.
// Calls must write only to disjoint, preallocated slots.
void parallel_for(size_t count, int workers, const std::function<void(size_t)>& fn);

struct Checkpoint {
    std::uint64_t seed = 0;
    int round = 0;  // rounds completed when the snapshot was taken
    std::vector<int> layer_sizes;
    ParamVector params;
};

// Binary, magic "FEDSIM1", written atomically via a temp file. Every random
// stream is derived from (seed, round, purpose), so seed plus round is the
// complete RNG state.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fedfair
