#pragma once
// Personalisation losses and the per-round blending schedule: quadratic
// anchors (plain and Fisher-weighted), distillation against a frozen
// teacher, and the blend l = mu * task loss + (1 - mu) * personalisation
// term that the federated trainer follows over rounds.

#include <cstdint>
#include <string>
#include <vector>

#include "fedfair/model.hpp"

namespace fedfair {

// Diagonal empirical Fisher: per-coordinate mean of the squared gradient of
// the true-label log-likelihood.
struct FisherDiag {
    std::vector<double> values;
    int sample_count = 0;
};

struct KdConfig {
    double temperature = 6.0;
    double alpha = 0.95;
    void validate(const std::string& key_path) const;
};

enum class PersonalisationKind { none, ewc, prox, kd };

std::string kind_name(PersonalisationKind kind);

struct ScheduleSegment {
    int from_round = 0;
    double mu = 1.0;
    PersonalisationKind kind = PersonalisationKind::none;
    double lambda = 0.0;  // ewc / prox strength
    KdConfig kd{};        // kd parameters
};

struct PaflSchedule {
    std::vector<ScheduleSegment> segments;
    void validate() const;
};

// Plain federated averaging: a single segment with mu = 1 and no
// personalisation term.
PaflSchedule fedavg_schedule();

// Segment whose from_round <= round, latest such segment winning.
const ScheduleSegment& schedule_lookup(const PaflSchedule& schedule, int round);

// Subsamples up to max_samples rows (seeded, without replacement) when the
// batch is larger; max_samples <= 0 means use everything.
FisherDiag fisher_diagonal(const ParamVector& params, const ModelSpec& spec, const Batch& data,
                           int max_samples, uint64_t seed);

// sum_i (lambda/2) * M_i * (c_i - anchor_i)^2. Writes the gradient with
// respect to c when grad is non-null.
double ewc_penalty(const ParamVector& c, const ParamVector& anchor, const FisherDiag& fisher,
                   double lambda, std::vector<double>* grad);

// sum_i (lambda/2) * (c_i - anchor_i)^2, the unweighted quadratic anchor.
double prox_penalty(const ParamVector& c, const ParamVector& anchor, double lambda,
                    std::vector<double>* grad);

// alpha * T^2 * CE(student, labels) + (1 - alpha) * KL(teacher || student),
// both distributions taken at temperature T, mean over the batch. Writes the
// gradient with respect to the student logits when grad_logits is non-null.
double kd_loss(const Matrix& student_logits, const Matrix& teacher_logits,
               const std::vector<int>& labels, const KdConfig& cfg, Matrix* grad_logits);

// Precomputed quantities the active segment may need.
struct PaflContext {
    const FisherDiag* fisher = nullptr;     // ewc segments
    const Matrix* teacher_logits = nullptr;  // kd segments, rows match the batch
};

// The blended objective at the given round. For ewc/prox the
// personalisation term is the quadratic anchor against `global`; for kd it
// is the full distillation composite (which carries its own data term), so
// kd segments are usually scheduled with mu = 0. Writes the full parameter
// gradient when grad_out is non-null.
double pafl_loss(int round, const ParamVector& params, const ParamVector& global,
                 const ModelSpec& spec, const Batch& batch, const PaflSchedule& schedule,
                 const PaflContext& ctx, ParamVector* grad_out);

// Mini-batch objective factory for the trainer: same composition as
// pafl_loss, with teacher logits recomputed per batch from frozen teacher
// parameters. `global`, `teacher_params` and `fisher` must outlive the
// returned callable.
MinibatchLoss make_segment_loss(const ScheduleSegment& segment, const ModelSpec& spec,
                                const ParamVector& global, const ParamVector* teacher_params,
                                const FisherDiag* fisher);

// Adaptation-time objectives (no blend): task loss plus the full-strength
// personalisation term.
MinibatchLoss make_finetune_loss();
MinibatchLoss make_ewc_adapt_loss(const ParamVector& anchor, const FisherDiag& fisher,
                                  double lambda);
MinibatchLoss make_kd_adapt_loss(const ModelSpec& spec, const ParamVector& teacher_params,
                                 const KdConfig& cfg);

}  // namespace fedfair
