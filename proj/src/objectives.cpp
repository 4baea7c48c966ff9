#include "fedfair/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "fedfair/log.hpp"

namespace fedfair {
namespace {

std::string trimmed_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::vector<double> cohort_proportions(const std::vector<ClientUpdate>& updates) {
    size_t total = 0;
    for (const auto& u : updates) {
        if (u.n_k == 0)
            throw std::invalid_argument("aggregation_weights: client " +
                                        std::to_string(u.client_id) + " has n_k = 0");
        total += u.n_k;
    }
    std::vector<double> p;
    p.reserve(updates.size());
    for (const auto& u : updates)
        p.push_back(static_cast<double>(u.n_k) / static_cast<double>(total));
    return p;
}

std::vector<double> normalized(std::vector<double> raw) {
    const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
    for (double& w : raw) w /= sum;
    return raw;
}

}  // namespace

std::string objective_kind_name(ObjectiveKind kind) {
    switch (kind) {
        case ObjectiveKind::fedavg: return "fedavg";
        case ObjectiveKind::qffl: return "qffl";
        case ObjectiveKind::term: return "term";
    }
    throw std::logic_error("objective_kind_name: bad enum");
}

ObjectiveKind objective_kind_from(const std::string& name) {
    if (name == "fedavg") return ObjectiveKind::fedavg;
    if (name == "qffl") return ObjectiveKind::qffl;
    if (name == "term") return ObjectiveKind::term;
    throw std::invalid_argument("unknown objective '" + name + "'");
}

void ObjectiveSpec::validate(const std::string& key_path) const {
    if (!(q >= 0.0) || !std::isfinite(q))
        throw std::invalid_argument(key_path + ".q must be ≥ 0");
    if (!(t > 0.0) || !std::isfinite(t))
        throw std::invalid_argument(key_path + ".t must be positive");
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw std::invalid_argument(key_path + ".eta must be positive");
}

std::string ObjectiveSpec::label() const {
    switch (kind) {
        case ObjectiveKind::fedavg: return "fedavg";
        case ObjectiveKind::qffl: return "qffl_q" + trimmed_number(q);
        case ObjectiveKind::term: return "term_t" + trimmed_number(t);
    }
    throw std::logic_error("ObjectiveSpec::label: bad enum");
}

std::vector<double> aggregation_weights(const std::vector<ClientUpdate>& updates,
                                        const ObjectiveSpec& spec, bool* fell_back) {
    if (fell_back != nullptr) *fell_back = false;
    if (updates.empty()) throw std::invalid_argument("aggregation_weights: no updates");
    spec.validate();
    for (const auto& u : updates)
        if (!std::isfinite(u.probe_loss))
            throw std::invalid_argument("aggregation_weights: client " +
                                        std::to_string(u.client_id) +
                                        " reported a non-finite loss");

    const std::vector<double> p = cohort_proportions(updates);
    std::vector<double> raw = p;
    switch (spec.kind) {
        case ObjectiveKind::fedavg:
            break;
        case ObjectiveKind::qffl:
            for (size_t i = 0; i < raw.size(); ++i) {
                if (updates[i].probe_loss < 0.0)
                    throw std::invalid_argument(
                        "aggregation_weights: negative loss under qffl");
                // pow(F, 0) is exactly 1, so q = 0 reproduces fedavg bit for bit
                raw[i] *= std::pow(updates[i].probe_loss, spec.q);
            }
            break;
        case ObjectiveKind::term: {
            double max_loss = updates[0].probe_loss;
            for (const auto& u : updates) max_loss = std::max(max_loss, u.probe_loss);
            for (size_t i = 0; i < raw.size(); ++i)
                raw[i] *= std::exp(spec.t * (updates[i].probe_loss - max_loss));
            break;
        }
    }

    const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
    if (sum <= 0.0) {
        log::warn("all " + spec.label() + " weights are zero; falling back to fedavg");
        if (fell_back != nullptr) *fell_back = true;
        return normalized(p);
    }
    for (double& w : raw) w /= sum;
    return raw;
}

ParamVector aggregate(const ParamVector& global, const std::vector<ClientUpdate>& updates,
                      const std::vector<double>& weights, double eta) {
    if (updates.size() != weights.size())
        throw std::invalid_argument("aggregate: weights do not match updates");
    if (updates.empty()) throw std::invalid_argument("aggregate: no updates");
    if (!(eta > 0.0)) throw std::invalid_argument("aggregate: eta must be positive");
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("aggregate: weights must sum to 1");

    std::vector<size_t> order(updates.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return updates[a].client_id < updates[b].client_id;
    });

    std::vector<double> acc(global.size(), 0.0);
    for (size_t i : order) {
        const ParamVector& delta = updates[i].delta;
        if (delta.size() != global.size())
            throw std::invalid_argument("aggregate: delta layout mismatch for client " +
                                        std::to_string(updates[i].client_id));
        const double w = weights[i];
        for (size_t j = 0; j < acc.size(); ++j) acc[j] += w * delta.values[j];
    }

    ParamVector out = global;
    for (size_t j = 0; j < out.size(); ++j) out.values[j] += eta * acc[j];
    return out;
}

double objective_value(const std::vector<double>& losses, const std::vector<double>& props,
                       const ObjectiveSpec& spec) {
    if (losses.empty() || losses.size() != props.size())
        throw std::invalid_argument("objective_value: losses and props must match");
    spec.validate();
    switch (spec.kind) {
        case ObjectiveKind::fedavg: {
            double total = 0.0;
            for (size_t i = 0; i < losses.size(); ++i) total += props[i] * losses[i];
            return total;
        }
        case ObjectiveKind::qffl: {
            double total = 0.0;
            for (size_t i = 0; i < losses.size(); ++i)
                total += props[i] / (spec.q + 1.0) * std::pow(losses[i], spec.q + 1.0);
            return total;
        }
        case ObjectiveKind::term: {
            const double max_loss = *std::max_element(losses.begin(), losses.end());
            double total = 0.0;
            for (size_t i = 0; i < losses.size(); ++i)
                total += props[i] * std::exp(spec.t * (losses[i] - max_loss));
            if (total <= 0.0)
                throw std::invalid_argument("objective_value: proportions sum to zero");
            return max_loss + std::log(total) / spec.t;
        }
    }
    throw std::logic_error("objective_value: bad enum");
}

double weight_entropy(const std::vector<double>& weights) {
    double h = 0.0;
    for (double w : weights)
        if (w > 0.0) h -= w * std::log(w);
    return h;
}

}  // namespace fedfair
