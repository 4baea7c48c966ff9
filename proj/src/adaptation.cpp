#include "fedfair/adaptation.hpp"

#include <stdexcept>

#include "fedfair/rng.hpp"

namespace fedfair {
namespace {

void check_client(const ClientDataset& client, const char* who) {
    if (client.train.empty())
        throw std::invalid_argument(std::string(who) + ": client " +
                                    std::to_string(client.client_id) + " has no training data");
}

Rng batch_stream(std::uint64_t seed, int client_id) {
    return Rng(substream(seed, stream::adapt, static_cast<std::uint64_t>(client_id)));
}

}  // namespace

std::string adapt_method_name(AdaptMethod method) {
    switch (method) {
        case AdaptMethod::ft: return "ft";
        case AdaptMethod::fb: return "fb";
        case AdaptMethod::ewc: return "ewc";
        case AdaptMethod::kd: return "kd";
    }
    throw std::logic_error("adapt_method_name: bad enum");
}

AdaptMethod adapt_method_from(const std::string& name) {
    if (name == "ft") return AdaptMethod::ft;
    if (name == "fb") return AdaptMethod::fb;
    if (name == "ewc") return AdaptMethod::ewc;
    if (name == "kd") return AdaptMethod::kd;
    throw std::invalid_argument("unknown adapt method '" + name + "'");
}

void AdaptConfig::validate(const std::string& key_path) const {
    sgd.validate(key_path);
    if (lambda < 0.0) throw std::invalid_argument(key_path + ".lambda must be non-negative");
    if (fisher_max_samples < 0)
        throw std::invalid_argument(key_path + ".fisher_max_samples must be non-negative");
    kd.validate(key_path + ".kd");
}

ParamVector adapt_finetune(const ClientDataset& client, const ParamVector& start,
                           const ModelSpec& spec, const SgdConfig& cfg, std::uint64_t seed) {
    check_client(client, "adapt_finetune");
    ParamVector params = start;
    Rng rng = batch_stream(seed, client.client_id);
    run_sgd(params, spec, client.train, cfg, rng, make_finetune_loss());
    return params;
}

ParamVector adapt_freezebase(const ClientDataset& client, const ParamVector& start,
                             const ModelSpec& spec, const SgdConfig& cfg, std::uint64_t seed) {
    check_client(client, "adapt_freezebase");
    ParamVector params = start;
    Rng rng = batch_stream(seed, client.client_id);
    const IndexRange top = final_layer_range(spec);
    run_sgd(params, spec, client.train, cfg, rng, make_finetune_loss(), &top);
    return params;
}

ParamVector adapt_ewc(const ClientDataset& client, const ParamVector& start,
                      const ModelSpec& spec, const SgdConfig& cfg, double lambda,
                      int fisher_max_samples, std::uint64_t seed) {
    check_client(client, "adapt_ewc");
    if (lambda < 0.0) throw std::invalid_argument("adapt_ewc: lambda must be non-negative");

    FisherDiag fisher;
    if (lambda != 0.0)
        fisher = fisher_diagonal(start, spec, client.train, fisher_max_samples,
                                 substream(seed, stream::fisher, stream::adapt,
                                           static_cast<std::uint64_t>(client.client_id)));

    ParamVector params = start;
    Rng rng = batch_stream(seed, client.client_id);
    run_sgd(params, spec, client.train, cfg, rng, make_ewc_adapt_loss(start, fisher, lambda));
    return params;
}

ParamVector adapt_kd(const ClientDataset& client, const ParamVector& start, const ModelSpec& spec,
                     const SgdConfig& cfg, const KdConfig& kd, std::uint64_t seed) {
    check_client(client, "adapt_kd");
    kd.validate("adapt_kd");
    ParamVector params = start;
    Rng rng = batch_stream(seed, client.client_id);
    run_sgd(params, spec, client.train, cfg, rng, make_kd_adapt_loss(spec, start, kd));
    return params;
}

ParamVector run_adaptation(const ClientDataset& client, const ParamVector& start,
                           const ModelSpec& spec, AdaptMethod method, const AdaptConfig& cfg,
                           std::uint64_t seed) {
    switch (method) {
        case AdaptMethod::ft: return adapt_finetune(client, start, spec, cfg.sgd, seed);
        case AdaptMethod::fb: return adapt_freezebase(client, start, spec, cfg.sgd, seed);
        case AdaptMethod::ewc:
            return adapt_ewc(client, start, spec, cfg.sgd, cfg.lambda, cfg.fisher_max_samples,
                             seed);
        case AdaptMethod::kd: return adapt_kd(client, start, spec, cfg.sgd, cfg.kd, seed);
    }
    throw std::logic_error("run_adaptation: bad enum");
}

ParamVector train_local_only(const ClientDataset& client, const ModelSpec& spec,
                             const SgdConfig& cfg, std::uint64_t seed) {
    check_client(client, "train_local_only");
    ParamVector params = init_params(spec, seed ^ static_cast<std::uint64_t>(client.client_id));
    Rng rng(substream(seed, stream::local_only, static_cast<std::uint64_t>(client.client_id)));
    run_sgd(params, spec, client.train, cfg, rng, make_finetune_loss());
    return params;
}

}  // namespace fedfair
