#pragma once

#include <string>
#include <vector>

#include "fedfair/model.hpp"

namespace fedfair {

enum class ObjectiveKind { fedavg, qffl, term };

std::string objective_kind_name(ObjectiveKind kind);
ObjectiveKind objective_kind_from(const std::string& name);

// Which loss feeds the fairness weighting: the received global model on the
// client's train set (pre) or the locally trained model (post).
enum class LossProbe { pre, post };

struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::fedavg;
    double q = 0.0;
    double t = 1.0;
    double eta = 1.0;
    LossProbe probe = LossProbe::pre;

    void validate(const std::string& key_path = "objective") const;
    // e.g. "fedavg", "qffl_q5", "term_t0.1"
    std::string label() const;
};

struct ClientUpdate {
    int client_id = 0;
    // post-training parameters minus the received global parameters
    ParamVector delta;
    double probe_loss = 0.0;
    size_t n_k = 0;
};

// Normalized aggregation weights over the sampled cohort, in updates order.
// When every unnormalized weight is zero (all probe losses zero under
// q > 0) the fedavg weights are used instead and *fell_back is set.
std::vector<double> aggregation_weights(const std::vector<ClientUpdate>& updates,
                                        const ObjectiveSpec& spec,
                                        bool* fell_back = nullptr);

// G' = G + eta * sum of weighted deltas, summed in ascending client id order.
ParamVector aggregate(const ParamVector& global, const std::vector<ClientUpdate>& updates,
                      const std::vector<double>& weights, double eta);

double objective_value(const std::vector<double>& losses, const std::vector<double>& props,
                       const ObjectiveSpec& spec);

// Shannon entropy in nats; 0 log 0 counts as 0.
double weight_entropy(const std::vector<double>& weights);

}  // namespace fedfair
