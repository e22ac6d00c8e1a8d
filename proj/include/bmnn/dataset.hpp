#ifndef BMNN_DATASET_HPP
#define BMNN_DATASET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmnn/geometry.hpp"

namespace bmnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr uint16_t kDatasetFormatVersion = 1;
constexpr uint32_t kGeneratorVersion = 1;
constexpr int kPixelCount = kFinalSize * kFinalSize;  // 1024

// Labeled sample collection. Pixels are float32 in [0,1], stored
// contiguously (sample-major); labels are 0/1. Task datasets are
// 1024-wide; other widths (e.g. toy problems) live in memory only.
class Dataset {
  public:
    Dataset() = default;
    Dataset(std::optional<Task> task, int width, uint64_t seed)
        : task_(task), width_(width), seed_(seed) {}

    void append(std::span<const float> pixels, uint8_t label);

    size_t size() const { return labels_.size(); }
    int width() const { return width_; }
    std::optional<Task> task() const { return task_; }
    uint64_t seed() const { return seed_; }

    uint8_t label(size_t i) const { return labels_[i]; }
    std::span<const float> sample(size_t i) const {
        return {pixels_.data() + i * width_, static_cast<size_t>(width_)};
    }
    const std::vector<float>& raw_pixels() const { return pixels_; }
    const std::vector<uint8_t>& raw_labels() const { return labels_; }

    // Column `k` of the output gets sample indices[k].
    void gather(std::span<const uint32_t> indices, Matrix& out) const;

    bool operator==(const Dataset& other) const;

  private:
    std::optional<Task> task_;
    int width_ = 0;
    uint64_t seed_ = 0;
    std::vector<float> pixels_;
    std::vector<uint8_t> labels_;
};

struct SplitSpec {
    size_t n_train = 0, n_valid = 0, n_test = 0;
};

struct GenStats {
    size_t class_counts[2] = {0, 0};
    size_t scenes_validated = 0;  // scenes that passed the constraint validator
};

// n samples of the given task condition. Sample i is generated from the
// independent stream mix_seed(seed, i): scene, background step, background
// nodes, epsilon, negation, in that order. Labels alternate 0,1,0,1,... for
// exact class balance. Generation is parallel over samples.
Dataset generate_dataset(Task task, uint32_t n, uint64_t seed, GenStats* stats = nullptr);

// The scenes sample i of generate_dataset(task, n, seed) is rendered from.
std::vector<SceneSpec> generate_scenes(Task task, uint32_t n, uint64_t seed);

// Deterministic partition: seeded shuffle, then contiguous train/valid/test
// ranges. Spec sizes must sum to the dataset size.
struct SplitResult {
    Dataset train, valid, test;
};
SplitResult split(const Dataset& ds, const SplitSpec& spec, uint64_t seed);

// Binary persistence; round-trip is byte-exact. Little-endian layout:
// magic "BMND", version u16, task u16, count u32, width u16, height u16,
// seed u64, then per sample a label byte and 1024 float32 pixels.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// Seeded-shuffle minibatch sequence over a dataset. The final short batch
// is emitted; one full pass visits every sample exactly once.
class BatchIterator {
  public:
    BatchIterator(const Dataset& ds, int batch_size, uint64_t epoch_seed);

    // Fills X ([width x b]) and y; returns false when the epoch is done.
    bool next(Matrix& X, std::vector<uint8_t>& y);
    size_t num_batches() const;

  private:
    const Dataset* ds_;
    int batch_size_;
    std::vector<uint32_t> order_;
    size_t pos_ = 0;
};

}  // namespace bmnn

#endif
