#include "bmnn/nncore.hpp"

#include <cmath>

#include "bmnn/errors.hpp"

namespace bmnn {

double relu(double x) { return x > 0.0 ? x : 0.0; }

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Eigen::Vector2d softmax2(const Eigen::Vector2d& x) {
    double m = x.maxCoeff();
    Eigen::Vector2d e = (x.array() - m).exp();
    return e / e.sum();
}

Matrix softmax2_cols(const Matrix& x) {
    Matrix z(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        double m = x.col(c).maxCoeff();
        Eigen::ArrayXd e = (x.col(c).array() - m).exp();
        z.col(c) = e / e.sum();
    }
    return z;
}

LayerParams init_params(int n_in, int n_out, Rng& rng) {
    if (n_in < 1 || n_out < 1) throw InvalidInput("init_params: sizes must be >= 1");
    const double bound = std::sqrt(6.0 / (n_in + n_out));
    LayerParams p;
    p.W.resize(n_out, n_in);
    // Row-major fill so the draw sequence matches the stored layout.
    for (int r = 0; r < n_out; ++r)
        for (int c = 0; c < n_in; ++c) p.W(r, c) = rng.uniform(-bound, bound);
    p.b = Vector::Zero(n_out);
    return p;
}

ActivationTrace forward(std::span<const LayerParams> stack, const Matrix& input) {
    if (stack.empty()) throw InvalidInput("forward: empty stack");
    if (input.rows() != stack.front().W.cols())
        throw InvalidInput("forward: input width does not match first layer fan-in");
    ActivationTrace t;
    t.input = input;
    t.x.reserve(stack.size());
    t.y.reserve(stack.size() - 1);
    const Matrix* prev = &t.input;
    for (size_t k = 0; k < stack.size(); ++k) {
        if (prev->rows() != stack[k].W.cols())
            throw InvalidInput("forward: layer fan-in mismatch");
        Matrix xk = stack[k].W * (*prev);
        xk.colwise() += stack[k].b;
        t.x.push_back(std::move(xk));
        if (k + 1 < stack.size()) {
            t.y.push_back(relu(t.x.back()));
            prev = &t.y.back();
        }
    }
    t.z = softmax2_cols(t.x.back());
    return t;
}

namespace {

// Mean NLL of the correct class, computed from classifier pre-activations
// via log-sum-exp so tiny probabilities do not underflow.
double nll_from_logits(const Matrix& logits, std::span<const uint8_t> labels) {
    const auto n = logits.cols();
    double acc = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
        double m = logits.col(c).maxCoeff();
        double lse = m + std::log((logits.col(c).array() - m).exp().sum());
        acc += lse - logits(labels[c], c);
    }
    return acc / static_cast<double>(n);
}

double kl_bernoulli(double rho, double rho_hat) {
    return rho * std::log(rho / rho_hat) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rho_hat));
}

}  // namespace

LossBreakdown loss(const ActivationTrace& trace, std::span<const uint8_t> labels,
                   std::span<const LayerParams> stack, const LossConfig& cfg) {
    if (labels.size() != static_cast<size_t>(trace.z.cols()))
        throw InvalidInput("loss: label count does not match batch");
    if (labels.empty()) throw InvalidInput("loss: empty batch");

    LossBreakdown lb;
    lb.j1_nll = nll_from_logits(trace.x.back(), labels);
    for (const auto& y : trace.y) {
        Vector mu = y.rowwise().mean();
        Vector rho_hat(mu.size());
        for (Eigen::Index j = 0; j < mu.size(); ++j) {
            rho_hat[j] = std::clamp(mu[j], kRhoHatClampLo, kRhoHatClampHi);
            lb.j2_sparsity += kl_bernoulli(cfg.rho, rho_hat[j]);
        }
        lb.rho_hat.push_back(std::move(rho_hat));
    }
    for (const auto& p : stack) lb.j3_weights += p.W.squaredNorm();
    lb.j_total = lb.j1_nll + cfg.beta * lb.j2_sparsity + cfg.lambda * lb.j3_weights;
    return lb;
}

std::vector<LayerParams> backward(const ActivationTrace& trace, std::span<const uint8_t> labels,
                                  std::span<const LayerParams> stack, const LossConfig& cfg) {
    const auto n_layers = stack.size();
    const auto batch = trace.z.cols();
    if (labels.size() != static_cast<size_t>(batch))
        throw InvalidInput("backward: label count does not match batch");
    const double inv_n = 1.0 / static_cast<double>(batch);

    std::vector<LayerParams> grads(n_layers);

    // Softmax-NLL gradient at the classifier pre-activation.
    Matrix delta = trace.z;
    for (Eigen::Index c = 0; c < batch; ++c) delta(labels[c], c) -= 1.0;
    delta *= inv_n;

    for (size_t k = n_layers; k-- > 0;) {
        const Matrix& inputs = (k == 0) ? trace.input : trace.y[k - 1];
        grads[k].W.noalias() = delta * inputs.transpose();
        grads[k].W += 2.0 * cfg.lambda * stack[k].W;
        grads[k].b = delta.rowwise().sum();
        if (k == 0) break;

        // Propagate to the previous hidden layer's outputs, add the sparsity
        // term, and gate through the ReLU.
        Matrix dy = stack[k].W.transpose() * delta;
        const Matrix& y = trace.y[k - 1];
        Vector mu = y.rowwise().mean();
        for (Eigen::Index j = 0; j < mu.size(); ++j) {
            if (mu[j] <= kRhoHatClampLo || mu[j] >= kRhoHatClampHi) continue;  // clamp active
            double dkl = -cfg.rho / mu[j] + (1.0 - cfg.rho) / (1.0 - mu[j]);
            dy.row(j).array() += cfg.beta * dkl * inv_n;
        }
        delta = dy.cwiseProduct((trace.x[k - 1].array() > 0.0).cast<double>().matrix());
    }
    return grads;
}

double error_rate(const ForwardFn& net, const Dataset& ds, int eval_batch) {
    if (ds.size() == 0) throw InvalidInput("error_rate: empty dataset");
    size_t wrong = 0;
    Matrix X;
    std::vector<uint32_t> idx(eval_batch);
    for (size_t start = 0; start < ds.size(); start += eval_batch) {
        size_t b = std::min(static_cast<size_t>(eval_batch), ds.size() - start);
        idx.resize(b);
        for (size_t k = 0; k < b; ++k) idx[k] = static_cast<uint32_t>(start + k);
        ds.gather(idx, X);
        Matrix z = net(X);
        for (size_t k = 0; k < b; ++k) {
            int pred = z(1, static_cast<Eigen::Index>(k)) > z(0, static_cast<Eigen::Index>(k)) ? 1 : 0;
            wrong += pred != ds.label(start + k);
        }
    }
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(ds.size());
}

}  // namespace bmnn
