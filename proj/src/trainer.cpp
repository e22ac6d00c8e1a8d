#include "bmnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "bmnn/errors.hpp"

namespace bmnn {

double lr_at(int epoch, const TrainConfig& cfg) {
    if (epoch < 0) throw InvalidInput("lr_at: epoch must be >= 0");
    return cfg.lr0 * std::pow(cfg.lr_decay, epoch);
}

bool EarlyStopper::observe(double valid_error) {
    ++epoch_;
    if (valid_error < best_) {
        best_ = valid_error;
        best_epoch_ = epoch_;
        stale_ = 0;
        return true;
    }
    ++stale_;
    return false;
}

double evaluate(const CompositeNetwork& net, const Dataset& ds) {
    size_t pos = 0;
    for (size_t c = 0; c < net.classifiers.size(); ++c)
        if (net.classifiers[c] == net.active_classifier) pos = c;
    return classifier_error(net, pos, ds);
}

TrainReport train(CompositeNetwork& net, const Dataset& train_set, const Dataset& valid_set,
                  const Dataset& test_set, const TrainConfig& cfg) {
    if (train_set.size() == 0 || valid_set.size() == 0 || test_set.size() == 0)
        throw InvalidInput("train: datasets must be nonempty");
    if (cfg.batch_size < 1 || cfg.patience < 1 || cfg.max_epochs < 1 || cfg.lr0 < 0.0)
        throw InvalidInput("train: invalid config");
    const auto view = trainable_view(net);
    if (view.empty()) throw InvalidInput("train: network has no trainable layers");

    const auto t_start = std::chrono::steady_clock::now();
    const uint64_t frozen_before = frozen_params_hash(net);

    TrainReport report;
    EarlyStopper stopper(cfg.patience);
    std::vector<LayerParams> best_snapshot;

    Matrix X;
    std::vector<uint8_t> y;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = lr_at(epoch, cfg);
        BatchIterator batches(train_set, cfg.batch_size, mix_seed(cfg.seed, 1000 + epoch));
        LossBreakdown epoch_loss;
        size_t n_batches = 0;
        while (batches.next(X, y)) {
            CompositeTrace trace = forward_composite(net, X);
            LossBreakdown lb = composite_loss(net, trace, y, cfg.loss);
            if (!std::isfinite(lb.j_total))
                throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(n_batches));
            auto grads = backward_composite(net, trace, y, cfg.loss);
            for (size_t v = 0; v < view.size(); ++v) {
                Node& node = net.nodes[view[v]];
                node.params.W.noalias() -= lr * grads[v].W;
                node.params.b.noalias() -= lr * grads[v].b;
            }
            epoch_loss.j_total += lb.j_total;
            epoch_loss.j1_nll += lb.j1_nll;
            epoch_loss.j2_sparsity += lb.j2_sparsity;
            epoch_loss.j3_weights += lb.j3_weights;
            ++n_batches;
        }
        if (frozen_params_hash(net) != frozen_before)
            throw Error("train: frozen parameters were modified");

        epoch_loss.j_total /= static_cast<double>(n_batches);
        epoch_loss.j1_nll /= static_cast<double>(n_batches);
        epoch_loss.j2_sparsity /= static_cast<double>(n_batches);
        epoch_loss.j3_weights /= static_cast<double>(n_batches);

        EpochStats stats;
        stats.train_loss = epoch_loss;
        stats.valid_error_pct = evaluate(net, valid_set);
        stats.lr = lr;
        report.epochs.push_back(stats);

        if (stopper.observe(stats.valid_error_pct)) {
            best_snapshot.clear();
            for (int id : view) best_snapshot.push_back(net.nodes[id].params);
        }
        if (stopper.stop()) break;
    }

    // Restore the best-validation snapshot and score it on the test set.
    for (size_t v = 0; v < view.size(); ++v) net.nodes[view[v]].params = best_snapshot[v];
    report.best_epoch = stopper.best_epoch();
    report.best_valid_error_pct = stopper.best_error();
    report.test_error_pct = evaluate(net, test_set);
    report.best_params_hash = trainable_params_hash(net);
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("median_of: empty input");
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ReplicateSummary run_replicates(const std::function<CompositeNetwork(uint64_t)>& make_net,
                                const Dataset& train_set, const Dataset& valid_set,
                                const Dataset& test_set, const TrainConfig& base_cfg, int k) {
    if (k < 1) throw InvalidInput("run_replicates: k must be >= 1");
    ReplicateSummary summary;
    for (int r = 0; r < k; ++r) {
        const uint64_t seed = base_cfg.seed + static_cast<uint64_t>(r);
        try {
            CompositeNetwork net = make_net(seed);
            TrainConfig cfg = base_cfg;
            cfg.seed = seed;
            TrainReport rep = train(net, train_set, valid_set, test_set, cfg);
            summary.test_errors.push_back(rep.test_error_pct);
            summary.reports.push_back(std::move(rep));
        } catch (const std::exception& e) {
            summary.partial = true;
            summary.failures.push_back("replicate " + std::to_string(r) + ": " + e.what());
        }
    }
    if (!summary.test_errors.empty()) {
        summary.median = median_of(summary.test_errors);
        summary.min = *std::min_element(summary.test_errors.begin(), summary.test_errors.end());
        summary.max = *std::max_element(summary.test_errors.begin(), summary.test_errors.end());
    }
    return summary;
}

}  // namespace bmnn
