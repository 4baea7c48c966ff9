#include "fedfair/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace fedfair {

void ModelSpec::validate() const {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("ModelSpec: need at least input and output sizes");
    for (int s : layer_sizes)
        if (s < 1) throw std::invalid_argument("ModelSpec: layer sizes must be positive");
    if (layer_sizes.back() < 2)
        throw std::invalid_argument("ModelSpec: class count must be at least 2");
}

size_t param_count(const ModelSpec& spec) {
    size_t n = 0;
    for (size_t l = 1; l < spec.layer_sizes.size(); ++l) {
        const size_t fan_in = static_cast<size_t>(spec.layer_sizes[l - 1]);
        const size_t fan_out = static_cast<size_t>(spec.layer_sizes[l]);
        n += (fan_in + 1) * fan_out;
    }
    return n;
}

std::vector<LayerRange> layer_ranges(const ModelSpec& spec) {
    std::vector<LayerRange> out;
    size_t off = 0;
    for (size_t l = 1; l < spec.layer_sizes.size(); ++l) {
        LayerRange r;
        r.fan_in = spec.layer_sizes[l - 1];
        r.fan_out = spec.layer_sizes[l];
        r.w_begin = off;
        r.b_begin = off + static_cast<size_t>(r.fan_in) * static_cast<size_t>(r.fan_out);
        r.end = r.b_begin + static_cast<size_t>(r.fan_out);
        off = r.end;
        out.push_back(r);
    }
    return out;
}

IndexRange final_layer_range(const ModelSpec& spec) {
    const auto ranges = layer_ranges(spec);
    const LayerRange& last = ranges.back();
    return IndexRange{last.w_begin, last.end};
}

ParamVector init_params(const ModelSpec& spec, uint64_t seed) {
    spec.validate();
    ParamVector p;
    p.values.assign(param_count(spec), 0.0);
    Rng rng(substream(seed, stream::init));
    for (const LayerRange& r : layer_ranges(spec)) {
        const double limit = std::sqrt(6.0 / (r.fan_in + r.fan_out));
        for (size_t i = r.w_begin; i < r.b_begin; ++i) p.values[i] = rng.uniform(-limit, limit);
        // biases stay zero
    }
    return p;
}

namespace {

void check_params(const ParamVector& params, const ModelSpec& spec, const char* who) {
    if (params.size() != param_count(spec))
        throw std::invalid_argument(std::string(who) + ": parameter count does not match spec");
}

void check_features(const Matrix& features, const ModelSpec& spec, const char* who) {
    if (features.cols != static_cast<size_t>(spec.input_dim()))
        throw std::invalid_argument(std::string(who) + ": feature width does not match input dim");
}

void affine(const ParamVector& p, const LayerRange& r, const Matrix& in, Matrix& out) {
    out = Matrix(in.rows, static_cast<size_t>(r.fan_out));
    const size_t fi = static_cast<size_t>(r.fan_in);
    const size_t fo = static_cast<size_t>(r.fan_out);
    for (size_t row = 0; row < in.rows; ++row) {
        const double* a = in.row(row);
        double* z = out.row(row);
        for (size_t o = 0; o < fo; ++o) z[o] = p.values[r.b_begin + o];
        for (size_t k = 0; k < fi; ++k) {
            const double ak = a[k];
            if (ak == 0.0) continue;
            const double* w = &p.values[r.w_begin + k * fo];
            for (size_t o = 0; o < fo; ++o) z[o] += ak * w[o];
        }
    }
}

void tanh_inplace(Matrix& m) {
    for (double& v : m.data) v = std::tanh(v);
}

}  // namespace

ForwardTrace forward_trace(const ParamVector& params, const ModelSpec& spec,
                           const Matrix& features) {
    check_params(params, spec, "forward");
    check_features(features, spec, "forward");
    ForwardTrace trace;
    trace.activations.push_back(features);
    const auto ranges = layer_ranges(spec);
    for (size_t l = 0; l < ranges.size(); ++l) {
        Matrix z;
        affine(params, ranges[l], trace.activations.back(), z);
        if (l + 1 < ranges.size()) tanh_inplace(z);  // output layer keeps raw logits
        trace.activations.push_back(std::move(z));
    }
    return trace;
}

Matrix forward(const ParamVector& params, const ModelSpec& spec, const Matrix& features) {
    ForwardTrace t = forward_trace(params, spec, features);
    return std::move(t.activations.back());
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    if (!(temperature > 0.0)) throw std::invalid_argument("softmax: temperature must be positive");
    double m = logits[0];
    for (double v : logits) {
        if (!std::isfinite(v)) throw TrainingDiverged("softmax: non-finite logit");
        m = std::max(m, v);
    }
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - m) / temperature);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

void softmax_rows(const Matrix& logits, double temperature, Matrix& out) {
    out = Matrix(logits.rows, logits.cols);
    for (size_t r = 0; r < logits.rows; ++r) {
        const auto p = softmax(std::span<const double>(logits.row(r), logits.cols), temperature);
        std::copy(p.begin(), p.end(), out.row(r));
    }
}

namespace {

void check_labels(const Matrix& logits, const std::vector<int>& labels, const char* who) {
    if (labels.size() != logits.rows)
        throw std::invalid_argument(std::string(who) + ": label count does not match batch");
    for (int y : labels)
        if (y < 0 || static_cast<size_t>(y) >= logits.cols)
            throw std::out_of_range(std::string(who) + ": label outside class range");
}

}  // namespace

double cross_entropy_accumulate(const Matrix& logits, const std::vector<int>& labels, double coeff,
                                Matrix* grad_logits) {
    check_labels(logits, labels, "cross_entropy");
    if (logits.rows == 0) throw std::invalid_argument("cross_entropy: empty batch");
    const double inv_b = 1.0 / static_cast<double>(logits.rows);
    double total = 0.0;
    for (size_t r = 0; r < logits.rows; ++r) {
        const double* z = logits.row(r);
        double m = z[0];
        for (size_t j = 0; j < logits.cols; ++j) {
            if (!std::isfinite(z[j])) throw TrainingDiverged("cross_entropy: non-finite logit");
            m = std::max(m, z[j]);
        }
        double se = 0.0;
        for (size_t j = 0; j < logits.cols; ++j) se += std::exp(z[j] - m);
        const double lse = m + std::log(se);
        total += lse - z[static_cast<size_t>(labels[r])];
        if (grad_logits != nullptr) {
            double* g = grad_logits->row(r);
            for (size_t j = 0; j < logits.cols; ++j) {
                const double p = std::exp(z[j] - m) / se;
                const double ind = (static_cast<size_t>(labels[r]) == j) ? 1.0 : 0.0;
                g[j] += coeff * ((p - ind) * inv_b);
            }
        }
    }
    return total * inv_b;
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    return cross_entropy_accumulate(logits, labels, 0.0, nullptr);
}

CompositeLoss plain_cross_entropy() {
    CompositeLoss loss;
    loss.data = [](const Matrix& logits, const std::vector<int>& labels, Matrix& grad_logits) {
        return cross_entropy_accumulate(logits, labels, 1.0, &grad_logits);
    };
    return loss;
}

double loss_value(const ParamVector& params, const ModelSpec& spec, const Batch& batch,
                  const CompositeLoss& loss) {
    Matrix logits = forward(params, spec, batch.features);
    Matrix scratch(logits.rows, logits.cols);
    double total = loss.data(logits, batch.labels, scratch);
    if (loss.param) {
        std::vector<double> unused(params.size(), 0.0);
        total += loss.param(params, unused);
    }
    return total;
}

namespace {

// Pushes d(loss)/d(logits) back through the network.
void backprop(const ParamVector& params, const ModelSpec& spec, const ForwardTrace& trace,
              Matrix& delta, ParamVector& grad_out) {
    const auto ranges = layer_ranges(spec);
    for (size_t l = ranges.size(); l-- > 0;) {
        const LayerRange& r = ranges[l];
        const Matrix& a_prev = trace.activations[l];
        const size_t fi = static_cast<size_t>(r.fan_in);
        const size_t fo = static_cast<size_t>(r.fan_out);
        for (size_t row = 0; row < delta.rows; ++row) {
            const double* a = a_prev.row(row);
            const double* d = delta.row(row);
            for (size_t k = 0; k < fi; ++k) {
                const double ak = a[k];
                if (ak == 0.0) continue;
                double* gw = &grad_out.values[r.w_begin + k * fo];
                for (size_t o = 0; o < fo; ++o) gw[o] += ak * d[o];
            }
            double* gb = &grad_out.values[r.b_begin];
            for (size_t o = 0; o < fo; ++o) gb[o] += d[o];
        }
        if (l == 0) break;
        Matrix next(delta.rows, fi);
        for (size_t row = 0; row < delta.rows; ++row) {
            const double* d = delta.row(row);
            const double* a = a_prev.row(row);
            double* nd = next.row(row);
            for (size_t k = 0; k < fi; ++k) {
                double acc = 0.0;
                const double* w = &params.values[r.w_begin + k * fo];
                for (size_t o = 0; o < fo; ++o) acc += d[o] * w[o];
                nd[k] = acc * (1.0 - a[k] * a[k]);  // through tanh
            }
        }
        delta = std::move(next);
    }
}

}  // namespace

double loss_and_grad(const ParamVector& params, const ModelSpec& spec, const Batch& batch,
                     const CompositeLoss& loss, ParamVector& grad_out) {
    ForwardTrace trace = forward_trace(params, spec, batch.features);
    grad_out.values.assign(params.size(), 0.0);
    Matrix delta(trace.logits().rows, trace.logits().cols);
    double total = loss.data(trace.logits(), batch.labels, delta);
    backprop(params, spec, trace, delta, grad_out);
    if (loss.param) total += loss.param(params, grad_out.values);
    return total;
}

ParamVector grad(const ParamVector& params, const ModelSpec& spec, const Batch& batch,
                 const CompositeLoss& loss) {
    ParamVector g;
    loss_and_grad(params, spec, batch, loss, g);
    return g;
}

void SgdConfig::validate(const std::string& key_path) const {
    if (!(lr > 0.0)) throw std::invalid_argument(key_path + ".lr must be positive");
    if (momentum < 0.0 || momentum >= 1.0)
        throw std::invalid_argument(key_path + ".momentum must be in [0, 1)");
    if (weight_decay < 0.0)
        throw std::invalid_argument(key_path + ".weight_decay must be non-negative");
    if (batch_size < 1) throw std::invalid_argument(key_path + ".batch_size must be positive");
    if (epochs < 1) throw std::invalid_argument(key_path + ".epochs must be positive");
}

void sgd_step(ParamVector& params, const ParamVector& grads, const SgdConfig& cfg, SgdState& state,
              const IndexRange* active) {
    if (grads.size() != params.size())
        throw std::invalid_argument("sgd_step: gradient layout does not match parameters");
    if (state.velocity.empty()) state.velocity.assign(params.size(), 0.0);
    if (state.velocity.size() != params.size())
        throw std::invalid_argument("sgd_step: momentum state layout does not match parameters");
    const size_t begin = active != nullptr ? active->begin : 0;
    const size_t end = active != nullptr ? active->end : params.size();
    if (begin > end || end > params.size())
        throw std::invalid_argument("sgd_step: active range out of bounds");
    for (size_t i = begin; i < end; ++i) {
        const double v =
            cfg.momentum * state.velocity[i] + grads[i] + cfg.weight_decay * params[i];
        state.velocity[i] = v;
        params[i] -= cfg.lr * v;
    }
}

void run_sgd(ParamVector& params, const ModelSpec& spec, const Batch& train, const SgdConfig& cfg,
             Rng& rng, const MinibatchLoss& make_loss, const IndexRange* active) {
    if (train.empty()) throw std::invalid_argument("run_sgd: empty training set");
    if (cfg.batch_size < 1) throw std::invalid_argument("run_sgd: batch_size must be positive");
    if (cfg.lr < 0.0 || cfg.epochs < 0)
        throw std::invalid_argument("run_sgd: negative lr or epochs");
    check_params(params, spec, "run_sgd");

    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), size_t{0});
    SgdState state;
    ParamVector g;
    const size_t bs = static_cast<size_t>(cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += bs) {
            const size_t stop = std::min(order.size(), start + bs);
            const std::vector<size_t> idx(order.begin() + static_cast<long>(start),
                                          order.begin() + static_cast<long>(stop));
            const Batch mb = gather_rows(train, idx);
            const CompositeLoss loss = make_loss(mb);
            const double value = loss_and_grad(params, spec, mb, loss, g);
            if (!std::isfinite(value))
                throw TrainingDiverged("run_sgd: non-finite loss at epoch " +
                                       std::to_string(epoch));
            sgd_step(params, g, cfg, state, active);
        }
    }
}

}  // namespace fedfair
