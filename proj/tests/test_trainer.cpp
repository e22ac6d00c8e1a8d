#include <doctest.h>

#include <cmath>

#include "bmnn/errors.hpp"
#include "bmnn/trainer.hpp"

using namespace bmnn;

namespace {

// Two well-separated Gaussian blobs in the plane; linearly separable.
Dataset blob_dataset(size_t n, uint64_t seed) {
    Dataset ds(std::nullopt, 2, seed);
    Rng rng(seed);
    for (size_t i = 0; i < n; ++i) {
        uint8_t label = static_cast<uint8_t>(i % 2);
        double cx = label == 0 ? -2.0 : 2.0;
        double cy = label == 0 ? -2.0 : 2.0;
        // Box-Muller from the portable uniform stream.
        double u1 = rng.uniform(1e-12, 1.0), u2 = rng.uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        float px[2] = {static_cast<float>(cx + 0.5 * r * std::cos(2 * M_PI * u2)),
                       static_cast<float>(cy + 0.5 * r * std::sin(2 * M_PI * u2))};
        ds.append(px, label);
    }
    return ds;
}

TrainConfig quick_config(uint64_t seed, int max_epochs = 50) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.max_epochs = max_epochs;
    return cfg;
}

}  // namespace

TEST_CASE("lr_at follows the decay schedule") {
    TrainConfig cfg;
    CHECK(lr_at(0, cfg) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(lr_at(1, cfg) == doctest::Approx(0.00985).epsilon(1e-12));
    // 0.01 * 0.985^10, frozen from evaluating the schedule directly.
    CHECK(lr_at(10, cfg) == doctest::Approx(0.0085973044).epsilon(1e-7));
    CHECK(lr_at(10, cfg) == doctest::Approx(0.01 * std::pow(0.985, 10)).epsilon(1e-15));
    CHECK_THROWS_AS(lr_at(-1, cfg), InvalidInput);
}

TEST_CASE("early stopping waits out the patience window") {
    // Validation errors 5,4,4,4,4,4,4: best at epoch 1, stop after epoch 6.
    EarlyStopper stopper(5);
    std::vector<double> errs = {5, 4, 4, 4, 4, 4, 4};
    std::vector<bool> stops;
    for (double e : errs) {
        stopper.observe(e);
        stops.push_back(stopper.stop());
    }
    CHECK(stops == std::vector<bool>{false, false, false, false, false, false, true});
    CHECK(stopper.best_epoch() == 1);
    CHECK(stopper.best_error() == 4.0);
}

TEST_CASE("early stopping resets on improvement") {
    EarlyStopper stopper(2);
    stopper.observe(5.0);
    stopper.observe(6.0);
    CHECK_FALSE(stopper.stop());
    stopper.observe(4.0);  // improvement clears the stale count
    CHECK_FALSE(stopper.stop());
    stopper.observe(4.0);
    stopper.observe(4.5);
    CHECK(stopper.stop());
    CHECK(stopper.best_epoch() == 2);
}

TEST_CASE("training with lr 0 leaves parameters unchanged") {
    Dataset train_set = blob_dataset(120, 1);
    Dataset valid_set = blob_dataset(40, 2);
    Dataset test_set = blob_dataset(40, 3);
    Rng rng(4);
    CompositeNetwork net = make_scratch({2, {6, 4}}, rng);
    uint64_t before = trainable_params_hash(net);

    TrainConfig cfg = quick_config(9, 20);
    cfg.lr0 = 0.0;
    // The sparsity statistic is a per-minibatch mean, so its epoch average
    // depends on the shuffle; with beta = 0 the remaining terms are
    // shuffle-free and must repeat exactly.
    cfg.loss.beta = 0.0;
    TrainReport rep = train(net, train_set, valid_set, test_set, cfg);
    CHECK(trainable_params_hash(net) == before);
    // Batch regrouping across shuffles perturbs the epoch mean only in the
    // last ulps.
    for (const auto& e : rep.epochs) {
        CHECK(e.train_loss.j_total ==
              doctest::Approx(rep.epochs[0].train_loss.j_total).epsilon(1e-12));
        CHECK(e.valid_error_pct == rep.epochs[0].valid_error_pct);
    }
    // One improving epoch, then `patience` stale ones.
    CHECK(rep.epochs.size() == 1 + static_cast<size_t>(cfg.patience));
    CHECK(rep.best_epoch == 0);
}

TEST_CASE("max_epochs caps the run") {
    Dataset train_set = blob_dataset(60, 5);
    Dataset valid_set = blob_dataset(20, 6);
    Dataset test_set = blob_dataset(20, 7);
    Rng rng(8);
    CompositeNetwork net = make_scratch({2, {4}}, rng);
    TrainReport rep = train(net, train_set, valid_set, test_set, quick_config(10, 1));
    CHECK(rep.epochs.size() == 1);
    CHECK(rep.best_epoch == 0);
}

TEST_CASE("training is deterministic given the config") {
    Dataset train_set = blob_dataset(120, 11);
    Dataset valid_set = blob_dataset(40, 12);
    Dataset test_set = blob_dataset(40, 13);
    auto run = [&]() {
        Rng rng(mix_seed(14, 0));
        CompositeNetwork net = make_scratch({2, {6, 4}}, rng);
        return train(net, train_set, valid_set, test_set, quick_config(15, 8));
    };
    TrainReport a = run(), b = run();
    REQUIRE(a.epochs.size() == b.epochs.size());
    for (size_t e = 0; e < a.epochs.size(); ++e) {
        CHECK(a.epochs[e].train_loss.j_total == b.epochs[e].train_loss.j_total);
        CHECK(a.epochs[e].valid_error_pct == b.epochs[e].valid_error_pct);
    }
    CHECK(a.best_epoch == b.best_epoch);
    CHECK(a.test_error_pct == b.test_error_pct);
    CHECK(a.best_params_hash == b.best_params_hash);
}

TEST_CASE("the retained snapshot has the minimal validation error") {
    Dataset train_set = blob_dataset(200, 16);
    Dataset valid_set = blob_dataset(60, 17);
    Dataset test_set = blob_dataset(60, 18);
    Rng rng(19);
    CompositeNetwork net = make_scratch({2, {6, 4}}, rng);
    TrainReport rep = train(net, train_set, valid_set, test_set, quick_config(20, 30));
    double min_err = rep.epochs[0].valid_error_pct;
    for (const auto& e : rep.epochs) min_err = std::min(min_err, e.valid_error_pct);
    CHECK(rep.best_valid_error_pct == min_err);
    CHECK(rep.best_epoch <= static_cast<int>(rep.epochs.size()) - 1);
    // The restored network reproduces the reported test error.
    CHECK(evaluate(net, test_set) == rep.test_error_pct);
}

TEST_CASE("two-blob smoke test reaches zero validation error quickly") {
    Dataset train_set = blob_dataset(400, 21);
    Dataset valid_set = blob_dataset(100, 22);
    Dataset test_set = blob_dataset(100, 23);
    Rng rng(24);
    CompositeNetwork net = make_scratch({2, {8, 4}}, rng);
    TrainReport rep = train(net, train_set, valid_set, test_set, quick_config(25, 50));
    CHECK(rep.best_valid_error_pct == 0.0);
    CHECK(rep.best_epoch < 50);
    CHECK(rep.test_error_pct <= 2.0);
}

TEST_CASE("block training never touches frozen parameters") {
    Dataset train_set = blob_dataset(200, 26);
    Dataset valid_set = blob_dataset(60, 27);
    Dataset test_set = blob_dataset(60, 28);
    Rng rng(29);
    CompositeNetwork original = make_scratch({2, {6, 4}}, rng);
    train(original, train_set, valid_set, test_set, quick_config(30, 10));

    CompositeNetwork net = compose({original}, BlockSpec::parse("0-3"), rng);
    uint64_t frozen_before = frozen_params_hash(net);
    double orig_err_before = classifier_error(net, 0, valid_set);

    TrainConfig cfg = quick_config(31, 5);
    train(net, train_set, valid_set, test_set, cfg);

    CHECK(frozen_params_hash(net) == frozen_before);
    CHECK(classifier_error(net, 0, valid_set) == orig_err_before);
}

TEST_CASE("divergence is reported, not silently propagated") {
    Dataset train_set = blob_dataset(100, 32);
    Dataset valid_set = blob_dataset(30, 33);
    Dataset test_set = blob_dataset(30, 34);
    Rng rng(35);
    CompositeNetwork net = make_scratch({2, {6, 4}}, rng);
    TrainConfig cfg = quick_config(36, 10);
    cfg.lr0 = 1e9;
    CHECK_THROWS_AS(train(net, train_set, valid_set, test_set, cfg), DivergenceError);
}

TEST_CASE("median convention") {
    CHECK(median_of({3.1, 2.4, 3.6, 3.0, 3.3}) == doctest::Approx(3.1));
    CHECK(median_of({2.0}) == doctest::Approx(2.0));
    CHECK(median_of({1.0, 2.0}) == doctest::Approx(1.5));
    CHECK_THROWS_AS(median_of({}), InvalidInput);
}

TEST_CASE("run_replicates aggregates independent runs") {
    Dataset train_set = blob_dataset(200, 37);
    Dataset valid_set = blob_dataset(60, 38);
    Dataset test_set = blob_dataset(60, 39);
    TrainConfig cfg = quick_config(40, 6);
    auto make_net = [&](uint64_t seed) {
        Rng rng(mix_seed(seed, 0xA111));
        return make_scratch({2, {6, 4}}, rng);
    };
    ReplicateSummary sum = run_replicates(make_net, train_set, valid_set, test_set, cfg, 3);
    REQUIRE(sum.test_errors.size() == 3);
    CHECK_FALSE(sum.partial);
    CHECK(sum.median == median_of(sum.test_errors));
    CHECK(sum.min == *std::min_element(sum.test_errors.begin(), sum.test_errors.end()));
    CHECK(sum.max == *std::max_element(sum.test_errors.begin(), sum.test_errors.end()));

    // Same seeds, same data: the summary reproduces exactly.
    ReplicateSummary again = run_replicates(make_net, train_set, valid_set, test_set, cfg, 3);
    CHECK(again.test_errors == sum.test_errors);

    ReplicateSummary one = run_replicates(make_net, train_set, valid_set, test_set, cfg, 1);
    CHECK(one.median == one.test_errors[0]);
}

TEST_CASE("run_replicates survives a failing replicate") {
    Dataset train_set = blob_dataset(100, 41);
    Dataset valid_set = blob_dataset(30, 42);
    Dataset test_set = blob_dataset(30, 43);
    TrainConfig cfg = quick_config(44, 4);
    int calls = 0;
    auto make_net = [&](uint64_t seed) {
        if (++calls == 2) throw Error("synthetic failure");
        Rng rng(mix_seed(seed, 0xA111));
        return make_scratch({2, {4}}, rng);
    };
    ReplicateSummary sum = run_replicates(make_net, train_set, valid_set, test_set, cfg, 3);
    CHECK(sum.partial);
    CHECK(sum.test_errors.size() == 2);
    REQUIRE(sum.failures.size() == 1);
    CHECK(sum.failures[0].find("replicate 1") != std::string::npos);
}
