#include "fedfair/runtime.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include "fedfair/log.hpp"
#include "fedfair/metrics.hpp"

namespace fedfair {
namespace {

// Checkpoint layout, little-endian on every platform this targets:
//   char[8]  "FEDSIM1\0"
//   u32      format version (1)
//   u64      seed
//   u64      rounds completed
//   u32      layer count, then i32 layer sizes
//   u64      parameter count, then f64 parameters
// Streams are derived from (seed, round, purpose), so no engine state is
// stored.
constexpr char kMagic[8] = "FEDSIM1";
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return value;
}

bool needs_fisher(const ScheduleSegment& seg) {
    return seg.kind == PersonalisationKind::ewc && (1.0 - seg.mu) != 0.0 &&
           seg.lambda != 0.0;
}

std::optional<double> centralised_accuracy(const ParamVector& params, const ModelSpec& spec,
                                           const Batch& fed_test, double fraction,
                                           std::uint64_t seed, int round) {
    if (fed_test.empty()) return std::nullopt;
    if (fraction >= 1.0) return accuracy(params, spec, fed_test);
    const size_t want = std::max<size_t>(
        1, static_cast<size_t>(std::floor(fraction * static_cast<double>(fed_test.size()))));
    Rng rng(substream(seed, stream::eval_subset, static_cast<std::uint64_t>(round)));
    const auto picked =
        rng.sample_without_replacement(static_cast<int>(fed_test.size()), static_cast<int>(want));
    std::vector<size_t> idx(picked.begin(), picked.end());
    const Batch subset = gather_rows(fed_test, idx);
    return accuracy(params, spec, subset);
}

}  // namespace

void FedConfig::validate(size_t population, const std::string& key_path) const {
    if (rounds < 1) throw std::invalid_argument(key_path + ".rounds must be at least 1");
    // population 0 means the dataset is not realised yet; the bound is then
    // rechecked before training
    if (clients_per_round < 1 ||
        (population > 0 && static_cast<size_t>(clients_per_round) > population))
        throw std::invalid_argument(key_path +
                                    ".clients_per_round must be between 1 and the population size");
    if (eval_every < 1) throw std::invalid_argument(key_path + ".eval_every must be at least 1");
    if (!(eval_fraction > 0.0 && eval_fraction <= 1.0))
        throw std::invalid_argument(key_path + ".eval_fraction must be in (0, 1]");
    if (fisher_max_samples < 0)
        throw std::invalid_argument(key_path + ".fisher_max_samples must be non-negative");
    if (workers < 1) throw std::invalid_argument(key_path + ".workers must be at least 1");
    if (checkpoint_every < 1)
        throw std::invalid_argument(key_path + ".checkpoint_every must be at least 1");
    objective.validate();
    local.validate("local");
    schedule.validate();
}

std::vector<int> sample_clients(size_t population_size, int k, std::uint64_t seed, int round) {
    if (k < 1 || static_cast<size_t>(k) > population_size)
        throw std::invalid_argument("sample_clients: k out of range");
    Rng rng(substream(seed, stream::sampling, static_cast<std::uint64_t>(round)));
    return rng.sample_without_replacement(static_cast<int>(population_size), k);
}

LocalOutcome local_train(const ClientDataset& client, const ParamVector& global,
                         const ModelSpec& spec, const FedConfig& cfg, int round) {
    if (client.train.empty())
        throw std::invalid_argument("local_train: client " + std::to_string(client.client_id) +
                                    " has no training data");
    const ScheduleSegment& seg = schedule_lookup(cfg.schedule, round);

    LocalOutcome out;
    out.update.client_id = client.client_id;
    out.update.n_k = client.n_k();

    ParamVector params = global;
    Rng rng(substream(cfg.seed, stream::batches, static_cast<std::uint64_t>(round),
                      static_cast<std::uint64_t>(client.client_id)));
    try {
        out.update.probe_loss = loss_value(global, spec, client.train, plain_cross_entropy());

        FisherDiag fisher;
        const FisherDiag* fisher_ptr = nullptr;
        if (needs_fisher(seg)) {
            fisher = fisher_diagonal(global, spec, client.train, cfg.fisher_max_samples,
                                     substream(cfg.seed, stream::fisher,
                                               static_cast<std::uint64_t>(round),
                                               static_cast<std::uint64_t>(client.client_id)));
            fisher_ptr = &fisher;
        }
        run_sgd(params, spec, client.train, cfg.local, rng,
                make_segment_loss(seg, spec, global, &global, fisher_ptr));
        if (cfg.objective.probe == LossProbe::post)
            out.update.probe_loss = loss_value(params, spec, client.train, plain_cross_entropy());
    } catch (const TrainingDiverged& e) {
        log::warn("round " + std::to_string(round) + " client " +
                  std::to_string(client.client_id) + ": " + e.what());
        out.failed = true;
        return out;
    }

    out.update.delta.values.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i)
        out.update.delta.values[i] = params.values[i] - global.values[i];
    return out;
}

void parallel_for(size_t count, int workers, const std::function<void(size_t)>& fn) {
    if (workers < 1) throw std::invalid_argument("parallel_for: workers must be at least 1");
    const size_t pool = std::min(static_cast<size_t>(workers), count);
    if (pool <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::exception_ptr> errors(pool);
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (size_t w = 0; w < pool; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (;;) {
                    const size_t i = next.fetch_add(1);
                    if (i >= count) return;
                    fn(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

TrainResult run_training(const FederatedDataset& dataset, const ModelSpec& spec,
                         const FedConfig& cfg) {
    spec.validate();
    if (dataset.clients.empty())
        throw std::invalid_argument("run_training: dataset has no clients");
    if (spec.class_count() != dataset.class_count)
        throw std::invalid_argument("run_training: model expects " +
                                    std::to_string(spec.class_count()) + " classes, dataset has " +
                                    std::to_string(dataset.class_count));
    if (dataset.clients[0].train.features.cols != static_cast<size_t>(spec.input_dim()))
        throw std::invalid_argument("run_training: model expects " +
                                    std::to_string(spec.input_dim()) + " features, dataset has " +
                                    std::to_string(dataset.clients[0].train.features.cols));
    if (cfg.rounds < 0) throw std::invalid_argument("run_training: rounds must be non-negative");
    if (cfg.rounds > 0 && (cfg.clients_per_round < 1 ||
                           static_cast<size_t>(cfg.clients_per_round) > dataset.clients.size()))
        throw std::invalid_argument("run_training: clients_per_round out of range");
    if (!(cfg.eval_fraction > 0.0 && cfg.eval_fraction <= 1.0))
        throw std::invalid_argument("run_training: eval_fraction must be in (0, 1]");
    cfg.objective.validate();
    cfg.schedule.validate();

    TrainResult result;
    result.params = init_params(spec, cfg.seed);
    result.history.reserve(static_cast<size_t>(cfg.rounds));

    for (int round = 0; round < cfg.rounds; ++round) {
        const auto sampled =
            sample_clients(dataset.clients.size(), cfg.clients_per_round, cfg.seed, round);

        std::vector<LocalOutcome> outcomes(sampled.size());
        const ParamVector& global = result.params;
        parallel_for(sampled.size(), cfg.workers, [&](size_t i) {
            outcomes[i] = local_train(dataset.clients[static_cast<size_t>(sampled[i])], global,
                                      spec, cfg, round);
        });

        RoundRecord rec;
        rec.round = round;
        std::vector<ClientUpdate> updates;
        for (size_t i = 0; i < sampled.size(); ++i) {
            const int id = dataset.clients[static_cast<size_t>(sampled[i])].client_id;
            rec.sampled_ids.push_back(id);
            if (outcomes[i].failed)
                rec.failed_ids.push_back(id);
            else
                updates.push_back(std::move(outcomes[i].update));
        }
        if (updates.empty())
            throw std::runtime_error("round " + std::to_string(round) +
                                     ": every sampled client failed");

        rec.weights = aggregation_weights(updates, cfg.objective, &rec.fell_back);
        result.params = aggregate(result.params, updates, rec.weights, cfg.objective.eta);

        size_t cohort_n = 0;
        for (const auto& u : updates) cohort_n += u.n_k;
        std::vector<double> losses, props;
        for (const auto& u : updates) {
            rec.probe_losses.push_back(u.probe_loss);
            losses.push_back(u.probe_loss);
            props.push_back(static_cast<double>(u.n_k) / static_cast<double>(cohort_n));
        }
        rec.objective_value = objective_value(losses, props, cfg.objective);

        const bool last = round + 1 == cfg.rounds;
        if (last || (cfg.eval_every > 0 && (round + 1) % cfg.eval_every == 0))
            rec.centralised_acc = centralised_accuracy(result.params, spec, dataset.fed_test,
                                                       cfg.eval_fraction, cfg.seed, round);
        if (!cfg.checkpoint_path.empty() &&
            (last || (cfg.checkpoint_every > 0 && (round + 1) % cfg.checkpoint_every == 0)))
            save_checkpoint(cfg.checkpoint_path,
                            {cfg.seed, round + 1, spec.layer_sizes, result.params});

        result.history.push_back(std::move(rec));
    }
    return result;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out.write(kMagic, sizeof kMagic);
        write_raw(out, kVersion);
        write_raw(out, ckpt.seed);
        write_raw(out, static_cast<std::uint64_t>(ckpt.round));
        write_raw(out, static_cast<std::uint32_t>(ckpt.layer_sizes.size()));
        for (int s : ckpt.layer_sizes) write_raw(out, static_cast<std::int32_t>(s));
        write_raw(out, static_cast<std::uint64_t>(ckpt.params.size()));
        for (double v : ckpt.params.values) write_raw(out, v);
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);

    char magic[8] = {};
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    const auto version = read_raw<std::uint32_t>(in, path);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                                 ": " + path);

    Checkpoint ckpt;
    ckpt.seed = read_raw<std::uint64_t>(in, path);
    ckpt.round = static_cast<int>(read_raw<std::uint64_t>(in, path));
    const auto layers = read_raw<std::uint32_t>(in, path);
    if (layers < 2 || layers > 64)
        throw std::runtime_error("corrupt checkpoint layer count: " + path);
    for (std::uint32_t i = 0; i < layers; ++i)
        ckpt.layer_sizes.push_back(read_raw<std::int32_t>(in, path));

    ModelSpec spec{ckpt.layer_sizes};
    spec.validate();
    const auto count = read_raw<std::uint64_t>(in, path);
    if (count != param_count(spec))
        throw std::runtime_error("checkpoint parameter count does not match its layers: " + path);
    ckpt.params.values.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i)
        ckpt.params.values.push_back(read_raw<double>(in, path));
    return ckpt;
}

}  // namespace fedfair
