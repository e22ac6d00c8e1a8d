#ifndef BMNN_NNCORE_HPP
#define BMNN_NNCORE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bmnn/dataset.hpp"
#include "bmnn/rng.hpp"

namespace bmnn {

// One dense connection: activation x = W y_in + b.
struct LayerParams {
    Matrix W;  // [n_out x n_in]
    Vector b;  // [n_out]
};

struct LossConfig {
    double beta = 0.01;     // sparsity weight
    double lambda = 1e-4;   // weight decay coefficient
    double rho = 0.05;      // target mean activation
};

// Mean activations are clamped to this range before the KL terms so the
// penalty stays defined for unbounded ReLU outputs and for dead units.
constexpr double kRhoHatClampLo = 1e-6;
constexpr double kRhoHatClampHi = 1.0 - 1e-6;

struct LossBreakdown {
    double j_total = 0.0;
    double j1_nll = 0.0;
    double j2_sparsity = 0.0;
    double j3_weights = 0.0;
    std::vector<Vector> rho_hat;  // clamped per-neuron batch means, per hidden layer
};

// Forward intermediates for one batch; columns are samples.
struct ActivationTrace {
    Matrix input;
    std::vector<Matrix> x;  // pre-activations per layer, classifier last
    std::vector<Matrix> y;  // ReLU outputs per hidden layer
    Matrix z;               // classifier softmax outputs [2 x batch]
};

double relu(double x);
Matrix relu(const Matrix& x);

// Numerically stabilized two-way softmax.
Eigen::Vector2d softmax2(const Eigen::Vector2d& x);
Matrix softmax2_cols(const Matrix& x);  // column-wise over a [2 x batch] matrix

// Weights uniform in +-sqrt(6/(n_in+n_out)), biases zero.
LayerParams init_params(int n_in, int n_out, Rng& rng);

// Dense stack: ReLU hidden layers, two-way softmax classifier last.
ActivationTrace forward(std::span<const LayerParams> stack, const Matrix& input);

// Three-term cost J = J1 + beta*J2 + lambda*J3 over the given stack.
// J1: mean NLL of the correct class; J2: KL sparsity over hidden neurons;
// J3: sum of squared weights (biases excluded, classifier included).
LossBreakdown loss(const ActivationTrace& trace, std::span<const uint8_t> labels,
                   std::span<const LayerParams> stack, const LossConfig& cfg);

// Exact gradient of J for every weight and bias in the stack, including the
// sparsity term's dependence on the batch means and the decay term.
std::vector<LayerParams> backward(const ActivationTrace& trace, std::span<const uint8_t> labels,
                                  std::span<const LayerParams> stack, const LossConfig& cfg);

// Percent misclassified under argmax; ties predict class 0. The closure maps
// an input batch to classifier outputs [2 x batch].
using ForwardFn = std::function<Matrix(const Matrix&)>;
double error_rate(const ForwardFn& net, const Dataset& ds, int eval_batch = 512);

}  // namespace bmnn

#endif
