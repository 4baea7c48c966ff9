#pragma once

#include <cstdint>
#include <string>

#include "fedfair/data.hpp"
#include "fedfair/losses.hpp"
#include "fedfair/model.hpp"

namespace fedfair {

enum class AdaptMethod { ft, fb, ewc, kd };

std::string adapt_method_name(AdaptMethod method);
AdaptMethod adapt_method_from(const std::string& name);

// Hyperparameters for the post-training phase. One sgd block drives every
// method; lambda applies to ewc only and kd to the distillation method.
struct AdaptConfig {
    SgdConfig sgd;
    double lambda = 5000.0;
    KdConfig kd;
    int fisher_max_samples = 256;

    void validate(const std::string& key_path = "adapt") const;
};

// Every method minimises its objective from `start` over the client's
// training data, drawing batches from the same (seed, client_id) stream, so
// the degenerate settings (lambda = 0, or alpha = 1 with T = 1) reproduce
// plain fine-tuning bit for bit. Divergence propagates as TrainingDiverged.

// Plain cross-entropy on the client's data.
ParamVector adapt_finetune(const ClientDataset& client, const ParamVector& start,
                           const ModelSpec& spec, const SgdConfig& cfg, std::uint64_t seed);

// Like finetune, but only the output layer's weights and bias move.
ParamVector adapt_freezebase(const ClientDataset& client, const ParamVector& start,
                             const ModelSpec& spec, const SgdConfig& cfg, std::uint64_t seed);

// Cross-entropy plus a Fisher-weighted quadratic anchor at `start`; the
// Fisher diagonal is estimated once, at the start, on the client's data.
ParamVector adapt_ewc(const ClientDataset& client, const ParamVector& start,
                      const ModelSpec& spec, const SgdConfig& cfg, double lambda,
                      int fisher_max_samples, std::uint64_t seed);

// Distillation against the frozen start acting as the teacher.
ParamVector adapt_kd(const ClientDataset& client, const ParamVector& start, const ModelSpec& spec,
                     const SgdConfig& cfg, const KdConfig& kd, std::uint64_t seed);

// Dispatches on `method` with the hyperparameters from `cfg`.
ParamVector run_adaptation(const ClientDataset& client, const ParamVector& start,
                           const ModelSpec& spec, AdaptMethod method, const AdaptConfig& cfg,
                           std::uint64_t seed);

// Baseline trained from a fresh per-client initialisation on the client's
// data alone, never touching the federated model.
ParamVector train_local_only(const ClientDataset& client, const ModelSpec& spec,
                             const SgdConfig& cfg, std::uint64_t seed);

}  // namespace fedfair
