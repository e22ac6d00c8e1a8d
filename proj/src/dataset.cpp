#include "bmnn/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "bmnn/errors.hpp"
#include "bmnn/render.hpp"

namespace bmnn {

void Dataset::append(std::span<const float> pixels, uint8_t label) {
    if (static_cast<int>(pixels.size()) != width_)
        throw InvalidInput("Dataset::append: sample width mismatch");
    if (label > 1) throw InvalidInput("Dataset::append: label must be 0 or 1");
    pixels_.insert(pixels_.end(), pixels.begin(), pixels.end());
    labels_.push_back(label);
}

void Dataset::gather(std::span<const uint32_t> indices, Matrix& out) const {
    out.resize(width_, static_cast<Eigen::Index>(indices.size()));
    for (size_t k = 0; k < indices.size(); ++k) {
        const float* src = pixels_.data() + static_cast<size_t>(indices[k]) * width_;
        for (int j = 0; j < width_; ++j) out(j, static_cast<Eigen::Index>(k)) = src[j];
    }
}

bool Dataset::operator==(const Dataset& other) const {
    return task_ == other.task_ && width_ == other.width_ && seed_ == other.seed_ &&
           labels_ == other.labels_ &&
           pixels_.size() == other.pixels_.size() &&
           std::memcmp(pixels_.data(), other.pixels_.data(), pixels_.size() * sizeof(float)) == 0;
}

namespace {

// Renders sample i of the (task, seed) stream. Draw order within the
// per-sample stream is fixed: scene, background step, background nodes,
// epsilon, negation.
void render_sample(Task task, uint64_t seed, uint32_t i, float* out_pixels, uint8_t* out_label,
                   SceneSpec* out_scene, bool* out_validated) {
    Rng rng(mix_seed(seed, i));
    const uint8_t label = static_cast<uint8_t>(i % 2);
    SceneSpec scene = sample_scene(task, label, rng);
    if (out_validated) *out_validated = validate_scene(scene).ok();
    if (out_scene) *out_scene = scene;
    if (!out_pixels) {
        *out_label = label;
        return;
    }
    int step = kBackgroundSteps[rng.uniform_below(4)];
    Image bg = make_background(step, rng);
    MixParams mix;
    mix.epsilon = rng.uniform(kMixEpsLo, kMixEpsHi);
    mix.negate = rng.bernoulli(0.5);
    Image stim = render_scene(scene);
    Image final_img = compose_stimulus(stim, bg, mix);
    for (int p = 0; p < kPixelCount; ++p) out_pixels[p] = static_cast<float>(final_img.pixels[p]);
    *out_label = label;
}

void parallel_for(uint32_t n, const std::function<void(uint32_t)>& body) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw <= 1 || n < 64) {
        for (uint32_t i = 0; i < n; ++i) body(i);
        return;
    }
    unsigned workers = std::min(hw, 8u);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (uint32_t i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

Dataset generate_dataset(Task task, uint32_t n, uint64_t seed, GenStats* stats) {
    if (n < 2) throw InvalidInput("generate_dataset: need at least 2 samples");
    std::vector<float> pixels(static_cast<size_t>(n) * kPixelCount);
    std::vector<uint8_t> labels(n);
    std::vector<uint8_t> validated(stats ? n : 0);

    std::exception_ptr first_error;
    std::mutex err_mutex;
    parallel_for(n, [&](uint32_t i) {
        try {
            bool ok = false;
            render_sample(task, seed, i, pixels.data() + static_cast<size_t>(i) * kPixelCount,
                          &labels[i], nullptr, stats ? &ok : nullptr);
            if (stats) validated[i] = ok ? 1 : 0;
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    });
    if (first_error) std::rethrow_exception(first_error);

    Dataset ds(task, kPixelCount, seed);
    for (uint32_t i = 0; i < n; ++i)
        ds.append({pixels.data() + static_cast<size_t>(i) * kPixelCount,
                   static_cast<size_t>(kPixelCount)},
                  labels[i]);
    if (stats) {
        for (uint32_t i = 0; i < n; ++i) {
            stats->class_counts[labels[i]]++;
            stats->scenes_validated += validated[i];
        }
    }
    return ds;
}

std::vector<SceneSpec> generate_scenes(Task task, uint32_t n, uint64_t seed) {
    std::vector<SceneSpec> scenes(n);
    std::exception_ptr first_error;
    std::mutex err_mutex;
    parallel_for(n, [&](uint32_t i) {
        try {
            uint8_t label;
            render_sample(task, seed, i, nullptr, &label, &scenes[i], nullptr);
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    });
    if (first_error) std::rethrow_exception(first_error);
    return scenes;
}

SplitResult split(const Dataset& ds, const SplitSpec& spec, uint64_t seed) {
    if (spec.n_train == 0 || spec.n_valid == 0 || spec.n_test == 0)
        throw InvalidInput("split: all parts must be nonempty");
    if (spec.n_train + spec.n_valid + spec.n_test != ds.size())
        throw InvalidInput("split: sizes must sum to the dataset size");

    std::vector<uint32_t> idx(ds.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<uint32_t>(i);
    Rng rng(mix_seed(seed, 0x5FEED));
    shuffle_indices(idx, rng);

    SplitResult out{Dataset(ds.task(), ds.width(), ds.seed()),
                    Dataset(ds.task(), ds.width(), ds.seed()),
                    Dataset(ds.task(), ds.width(), ds.seed())};
    size_t p = 0;
    for (size_t i = 0; i < spec.n_train; ++i, ++p) out.train.append(ds.sample(idx[p]), ds.label(idx[p]));
    for (size_t i = 0; i < spec.n_valid; ++i, ++p) out.valid.append(ds.sample(idx[p]), ds.label(idx[p]));
    for (size_t i = 0; i < spec.n_test; ++i, ++p) out.test.append(ds.sample(idx[p]), ds.label(idx[p]));
    return out;
}

namespace {

constexpr char kDatasetMagic[4] = {'B', 'M', 'N', 'D'};

template <typename T>
void write_le(std::ofstream& f, T v) {
    static_assert(std::is_unsigned_v<T>);
    for (size_t i = 0; i < sizeof(T); ++i) f.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T read_le(std::ifstream& f) {
    static_assert(std::is_unsigned_v<T>);
    unsigned char buf[sizeof(T)];
    f.read(reinterpret_cast<char*>(buf), sizeof(T));
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    if (!ds.task() || ds.width() != kPixelCount)
        throw InvalidInput("save_dataset: only 32x32 task datasets are persistable");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_dataset: cannot open " + path);
    f.write(kDatasetMagic, 4);
    write_le<uint16_t>(f, kDatasetFormatVersion);
    write_le<uint16_t>(f, static_cast<uint16_t>(*ds.task()));
    write_le<uint32_t>(f, static_cast<uint32_t>(ds.size()));
    write_le<uint16_t>(f, kFinalSize);
    write_le<uint16_t>(f, kFinalSize);
    write_le<uint64_t>(f, ds.seed());
    for (size_t i = 0; i < ds.size(); ++i) {
        f.put(static_cast<char>(ds.label(i)));
        auto px = ds.sample(i);
        for (float v : px) write_le<uint32_t>(f, std::bit_cast<uint32_t>(v));
    }
    if (!f) throw IoError("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_dataset: cannot open " + path);
    f.seekg(0, std::ios::end);
    const auto file_size = static_cast<uint64_t>(f.tellg());
    f.seekg(0);
    if (file_size < 24) throw TruncationError("load_dataset: file shorter than header");

    char magic[4];
    f.read(magic, 4);
    if (std::memcmp(magic, kDatasetMagic, 4) != 0)
        throw FormatError("load_dataset: bad magic in " + path);
    uint16_t version = read_le<uint16_t>(f);
    if (version != kDatasetFormatVersion)
        throw FormatError("load_dataset: unsupported format version " + std::to_string(version));
    uint16_t task_id = read_le<uint16_t>(f);
    if (task_id >= kNumTasks)
        throw FormatError("load_dataset: unknown task id " + std::to_string(task_id));
    uint32_t count = read_le<uint32_t>(f);
    uint16_t width = read_le<uint16_t>(f);
    uint16_t height = read_le<uint16_t>(f);
    if (width != kFinalSize || height != kFinalSize)
        throw FormatError("load_dataset: unexpected image dimensions");
    uint64_t seed = read_le<uint64_t>(f);

    const uint64_t expected = 24ull + static_cast<uint64_t>(count) * (1 + 4ull * kPixelCount);
    if (file_size < expected) throw TruncationError("load_dataset: truncated payload");
    if (file_size > expected) throw FormatError("load_dataset: trailing bytes after payload");

    Dataset ds(static_cast<Task>(task_id), kPixelCount, seed);
    std::vector<float> px(kPixelCount);
    for (uint32_t i = 0; i < count; ++i) {
        uint8_t label = static_cast<uint8_t>(f.get());
        if (label > 1) throw FormatError("load_dataset: label out of range");
        for (int p = 0; p < kPixelCount; ++p)
            px[p] = std::bit_cast<float>(read_le<uint32_t>(f));
        ds.append(px, label);
    }
    if (!f) throw IoError("load_dataset: read failed for " + path);
    return ds;
}

BatchIterator::BatchIterator(const Dataset& ds, int batch_size, uint64_t epoch_seed)
    : ds_(&ds), batch_size_(batch_size) {
    if (batch_size < 1) throw InvalidInput("BatchIterator: batch size must be >= 1");
    order_.resize(ds.size());
    for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<uint32_t>(i);
    Rng rng(epoch_seed);
    shuffle_indices(order_, rng);
}

bool BatchIterator::next(Matrix& X, std::vector<uint8_t>& y) {
    if (pos_ >= order_.size()) return false;
    size_t b = std::min(static_cast<size_t>(batch_size_), order_.size() - pos_);
    ds_->gather({order_.data() + pos_, b}, X);
    y.resize(b);
    for (size_t k = 0; k < b; ++k) y[k] = ds_->label(order_[pos_ + k]);
    pos_ += b;
    return true;
}

size_t BatchIterator::num_batches() const {
    return (order_.size() + batch_size_ - 1) / batch_size_;
}

}  // namespace bmnn
