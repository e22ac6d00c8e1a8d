#ifndef BMNN_TRAINER_HPP
#define BMNN_TRAINER_HPP

#include <functional>
#include <limits>

#include "bmnn/blockgraph.hpp"

namespace bmnn {

struct TrainConfig {
    int batch_size = 20;
    double lr0 = 0.01;
    double lr_decay = 0.985;  // multiplicative, applied after every epoch
    int patience = 5;         // consecutive non-improving epochs before stopping
    int max_epochs = 200;     // safety cap
    uint64_t seed = 0;
    LossConfig loss;
};

// lr0 * decay^epoch (epoch counted from 0).
double lr_at(int epoch, const TrainConfig& cfg);

// Tracks the best validation error; stop() turns true after `patience`
// consecutive epochs without a strict improvement.
class EarlyStopper {
  public:
    explicit EarlyStopper(int patience) : patience_(patience) {}

    // Returns true when this epoch strictly improved on the best so far.
    bool observe(double valid_error);
    bool stop() const { return stale_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best_error() const { return best_; }

  private:
    int patience_;
    double best_ = std::numeric_limits<double>::infinity();
    int best_epoch_ = -1;
    int epoch_ = -1;
    int stale_ = 0;
};

struct EpochStats {
    LossBreakdown train_loss;  // batch-mean components over the epoch
    double valid_error_pct = 0.0;
    double lr = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_valid_error_pct = 0.0;
    double test_error_pct = 0.0;
    double wall_time_s = 0.0;
    uint64_t best_params_hash = 0;  // trainable-parameter identity at the best epoch
};

// Minibatch SGD over the trainable view: per-epoch seeded shuffle, p -=
// lr * dJ/dp, validation after every epoch, best-validation snapshot
// retained and restored, early stopping on stalled validation error.
// Frozen parameters are checksummed every epoch. Throws DivergenceError
// when the loss becomes non-finite.
TrainReport train(CompositeNetwork& net, const Dataset& train_set, const Dataset& valid_set,
                  const Dataset& test_set, const TrainConfig& cfg);

// Error of the active classifier over a dataset, in percent.
double evaluate(const CompositeNetwork& net, const Dataset& ds);

struct ReplicateSummary {
    std::vector<double> test_errors;  // in replicate order; failed runs omitted
    std::vector<TrainReport> reports;
    double median = 0.0, min = 0.0, max = 0.0;
    bool partial = false;  // some replicate failed
    std::vector<std::string> failures;
};

// Even-count median is the mean of the two central values.
double median_of(std::vector<double> values);

// k independent runs with seeds base_seed+0..k-1 on fixed data: fresh
// parameters per run via make_net(seed). Failures are recorded and the
// remaining replicates continue.
ReplicateSummary run_replicates(const std::function<CompositeNetwork(uint64_t)>& make_net,
                                const Dataset& train_set, const Dataset& valid_set,
                                const Dataset& test_set, const TrainConfig& base_cfg, int k);

}  // namespace bmnn

#endif
