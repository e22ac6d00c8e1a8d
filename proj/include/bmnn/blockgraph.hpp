#ifndef BMNN_BLOCKGRAPH_HPP
#define BMNN_BLOCKGRAPH_HPP

#include <map>
#include <string>
#include <vector>

#include "bmnn/nncore.hpp"

namespace bmnn {

constexpr uint16_t kCheckpointFormatVersion = 1;

// Plain feedforward topology: ReLU hidden layers plus a 2-way classifier.
struct NetworkSpec {
    int input_width = kPixelCount;
    std::vector<int> hidden = {200, 100, 50};
};

// Neuron counts added per hidden depth, e.g. {0,50,50} for a 0-50-50 block.
// Zeros may only lead or trail the nonzero run; an interior zero would
// disconnect the earlier block layers from the classifier.
struct BlockSpec {
    std::vector<int> added;

    static BlockSpec parse(const std::string& text);  // "A-B-C"
    std::string to_string() const;
    bool valid() const;
};

enum class OriginKind : uint8_t { Original = 0, Block = 1 };

struct Origin {
    OriginKind kind = OriginKind::Original;
    int index = 0;  // which original column; 0 for the block
};

constexpr int kInputSource = -1;

// One layer group. Incoming connections are concatenated in `sources`
// order; W has one column block per source.
struct Node {
    Origin origin;
    int depth = 1;  // 1-based; classifiers sit at hidden depth + 1
    bool is_classifier = false;
    std::vector<int> sources;  // node ids, or kInputSource for the raw input
    LayerParams params;
    bool frozen = false;
};

// DAG of layer groups: zero or more frozen original columns plus one
// trainable column. A scratch network is the single-column special case.
struct CompositeNetwork {
    int input_width = 0;
    std::vector<Node> nodes;        // topological order
    std::vector<int> classifiers;   // classifier node ids, originals first
    int active_classifier = -1;     // the trainable classifier
    std::vector<uint64_t> original_hashes;  // identity of each embedded original
    std::map<std::string, std::string> provenance;

    int node_width(int id) const { return static_cast<int>(nodes[id].params.W.rows()); }
};

// Fully trainable single column with freshly initialized parameters.
CompositeNetwork make_scratch(const NetworkSpec& spec, Rng& rng);

// Grafts a trainable block column onto 1-3 trained originals. Original
// parameters are embedded by value and frozen; new connections are
// initialized with the concatenated fan-in. Block layer 1 (when present)
// sees the raw input only; deeper block layers see every original's
// previous layer plus the block's own; the block classifier sees every
// original's last hidden layer plus the block's deepest layer.
CompositeNetwork compose(const std::vector<CompositeNetwork>& originals, const BlockSpec& block,
                         Rng& rng);

struct ParamCount {
    size_t total = 0;
    size_t trainable = 0;
};
ParamCount param_count(const CompositeNetwork& net);

// Ids of trainable nodes in topological order; gradients and updates align
// with this order.
std::vector<int> trainable_view(const CompositeNetwork& net);

struct CompositeTrace {
    Matrix input;
    std::vector<Matrix> x;  // per node
    std::vector<Matrix> y;  // per node; empty for classifiers
    std::vector<Matrix> z;  // per classifier, aligned with net.classifiers
};

CompositeTrace forward_composite(const CompositeNetwork& net, const Matrix& input);

// Cost of the trainable scope: J1 on the active classifier, J2 over
// trainable hidden neurons, J3 over trainable weights. Frozen parameters
// contribute constants and are omitted.
LossBreakdown composite_loss(const CompositeNetwork& net, const CompositeTrace& trace,
                             std::span<const uint8_t> labels, const LossConfig& cfg);

// Gradients aligned with trainable_view(net).
std::vector<LayerParams> backward_composite(const CompositeNetwork& net,
                                            const CompositeTrace& trace,
                                            std::span<const uint8_t> labels,
                                            const LossConfig& cfg);

// Error of one classifier (by position in net.classifiers) over a dataset.
double classifier_error(const CompositeNetwork& net, size_t classifier_pos, const Dataset& ds);

// Identity hashes over the little-endian parameter bytes.
uint64_t params_hash(const LayerParams& p, uint64_t h = 0xCBF29CE484222325ull);
uint64_t frozen_params_hash(const CompositeNetwork& net);
uint64_t trainable_params_hash(const CompositeNetwork& net);

// Checkpoint persistence: magic "BMNC", version, length-prefixed JSON
// manifest (topology, freeze flags, origin tags, provenance, content
// hashes), then per node the raw row-major f64 weights and biases.
// Round-trips are bitwise; content hashes are verified on load.
void save_checkpoint(const CompositeNetwork& net, const std::string& path);
CompositeNetwork load_checkpoint(const std::string& path);

}  // namespace bmnn

#endif
