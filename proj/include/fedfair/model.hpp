#pragma once
// Fully connected network with a softmax/cross-entropy head, exact
// backpropagation, and SGD with classical momentum. Parameters live in a
// flat vector; the per-layer layout is derived from the ModelSpec. All
// arithmetic is double precision.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fedfair/matrix.hpp"
#include "fedfair/rng.hpp"

namespace fedfair {

enum class Activation { tanh };

struct ModelSpec {
    // input dim, hidden dims..., class count
    std::vector<int> layer_sizes;
    Activation activation = Activation::tanh;

    int input_dim() const { return layer_sizes.front(); }
    int class_count() const { return layer_sizes.back(); }
    void validate() const;
};

struct ParamVector {
    std::vector<double> values;

    size_t size() const { return values.size(); }
    double& operator[](size_t i) { return values[i]; }
    double operator[](size_t i) const { return values[i]; }
};

// Half-open slice of the flat parameter vector.
struct IndexRange {
    size_t begin = 0;
    size_t end = 0;
};

struct LayerRange {
    size_t w_begin = 0;  // weights occupy [w_begin, b_begin)
    size_t b_begin = 0;  // biases occupy [b_begin, end)
    size_t end = 0;
    int fan_in = 0;
    int fan_out = 0;
};

size_t param_count(const ModelSpec& spec);
std::vector<LayerRange> layer_ranges(const ModelSpec& spec);
// Weights and bias of the output layer, as one contiguous slice.
IndexRange final_layer_range(const ModelSpec& spec);

// Uniform init in +-sqrt(6/(fan_in+fan_out)) per weight matrix, biases zero.
// Deterministic in (spec, seed).
ParamVector init_params(const ModelSpec& spec, uint64_t seed);

Matrix forward(const ParamVector& params, const ModelSpec& spec, const Matrix& features);

struct ForwardTrace {
    // activations[0] is the input, activations.back() holds the logits
    std::vector<Matrix> activations;
    const Matrix& logits() const { return activations.back(); }
};
ForwardTrace forward_trace(const ParamVector& params, const ModelSpec& spec,
                           const Matrix& features);

// Max-shifted softmax at the given temperature.
std::vector<double> softmax(std::span<const double> logits, double temperature);
void softmax_rows(const Matrix& logits, double temperature, Matrix& out);

// Mean negative log-likelihood of the true labels.
double cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// Same, but also accumulates coeff * d(mean CE)/d(logits) into grad_logits
// when it is non-null. Returns the unscaled loss. Composite objectives share
// this one code path so an identity coefficient stays bit-exact.
double cross_entropy_accumulate(const Matrix& logits, const std::vector<int>& labels, double coeff,
                                Matrix* grad_logits);

// A composite objective is a data term differentiated through the logits
// plus an optional term acting directly on the parameters. The data term
// accumulates into grad_logits and returns its loss value; the parameter
// term accumulates into the flat gradient and returns its loss value.
using DataLossFn =
    std::function<double(const Matrix& logits, const std::vector<int>& labels, Matrix& grad_logits)>;
using ParamLossFn = std::function<double(const ParamVector& params, std::vector<double>& grad)>;

struct CompositeLoss {
    DataLossFn data;
    ParamLossFn param;  // may be empty
};

CompositeLoss plain_cross_entropy();

double loss_value(const ParamVector& params, const ModelSpec& spec, const Batch& batch,
                  const CompositeLoss& loss);
// Returns the loss and writes the full gradient (same layout as params).
double loss_and_grad(const ParamVector& params, const ModelSpec& spec, const Batch& batch,
                     const CompositeLoss& loss, ParamVector& grad_out);
ParamVector grad(const ParamVector& params, const ModelSpec& spec, const Batch& batch,
                 const CompositeLoss& loss);

struct SgdConfig {
    double lr = 0.1;
    double momentum = 0.0;
    double weight_decay = 0.0;
    int batch_size = 32;
    int epochs = 1;

    // Strict form used when parsing configs; the training loops themselves
    // accept the degenerate lr = 0 / epochs = 0 cases.
    void validate(const std::string& key_path) const;
};

struct SgdState {
    std::vector<double> velocity;
};

// v' = momentum*v + g + weight_decay*p ; p' = p - lr*v'.
// When active is given only that slice is touched; everything else keeps
// its exact bit pattern.
void sgd_step(ParamVector& params, const ParamVector& grads, const SgdConfig& cfg, SgdState& state,
              const IndexRange* active = nullptr);

struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Builds the objective for one mini-batch (teacher logits and friends are
// produced here so they always match the rows being trained on).
using MinibatchLoss = std::function<CompositeLoss(const Batch& minibatch)>;

// Epochs of shuffled mini-batch SGD over train. Batch order is drawn from
// rng and nothing else, so equal seeds give bit-identical trajectories.
// Throws TrainingDiverged when a mini-batch loss turns non-finite.
void run_sgd(ParamVector& params, const ModelSpec& spec, const Batch& train, const SgdConfig& cfg,
             Rng& rng, const MinibatchLoss& make_loss, const IndexRange* active = nullptr);

}  // namespace fedfair
