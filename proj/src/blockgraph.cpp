#include "bmnn/blockgraph.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "bmnn/errors.hpp"

namespace bmnn {

using json = nlohmann::json;

BlockSpec BlockSpec::parse(const std::string& text) {
    BlockSpec spec;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, '-')) {
        size_t used = 0;
        int v;
        try {
            v = std::stoi(part, &used);
        } catch (const std::exception&) {
            throw InvalidInput("BlockSpec: cannot parse '" + text + "'");
        }
        if (used != part.size() || v < 0) throw InvalidInput("BlockSpec: cannot parse '" + text + "'");
        spec.added.push_back(v);
    }
    if (!spec.valid()) throw InvalidInput("BlockSpec: invalid shape '" + text + "'");
    return spec;
}

std::string BlockSpec::to_string() const {
    std::string out;
    for (size_t i = 0; i < added.size(); ++i) {
        if (i) out += '-';
        out += std::to_string(added[i]);
    }
    return out;
}

bool BlockSpec::valid() const {
    if (added.empty()) return false;
    bool any = false, ended = false;
    for (int v : added) {
        if (v < 0) return false;
        if (v > 0) {
            if (ended) return false;  // interior zero
            any = true;
        } else if (any) {
            ended = true;
        }
    }
    return any;
}

namespace {

void append_f64_bytes(std::vector<uint8_t>& out, double v) {
    uint64_t bits = std::bit_cast<uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(bits >> (8 * i)));
}

std::vector<uint8_t> param_bytes(const LayerParams& p) {
    std::vector<uint8_t> out;
    out.reserve(static_cast<size_t>(p.W.size() + p.b.size()) * 8);
    for (Eigen::Index r = 0; r < p.W.rows(); ++r)
        for (Eigen::Index c = 0; c < p.W.cols(); ++c) append_f64_bytes(out, p.W(r, c));
    for (Eigen::Index i = 0; i < p.b.size(); ++i) append_f64_bytes(out, p.b[i]);
    return out;
}

// Chain layout of a plain single-column network, or throws.
std::vector<int> chain_of(const CompositeNetwork& net) {
    std::vector<int> chain;
    int expect_src = kInputSource;
    for (size_t id = 0; id < net.nodes.size(); ++id) {
        const Node& n = net.nodes[id];
        if (n.sources.size() != 1 || n.sources[0] != expect_src)
            throw InvalidInput("compose: original is not a plain single-column network");
        chain.push_back(static_cast<int>(id));
        expect_src = static_cast<int>(id);
    }
    if (chain.empty() || !net.nodes[chain.back()].is_classifier ||
        net.classifiers.size() != 1)
        throw InvalidInput("compose: original is not a plain single-column network");
    return chain;
}

uint64_t column_hash(const CompositeNetwork& net, OriginKind kind, int index) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (const Node& n : net.nodes)
        if (n.origin.kind == kind && n.origin.index == index) {
            auto bytes = param_bytes(n.params);
            h = fnv1a64(bytes.data(), bytes.size(), h);
        }
    return h;
}

}  // namespace

uint64_t params_hash(const LayerParams& p, uint64_t h) {
    auto bytes = param_bytes(p);
    return fnv1a64(bytes.data(), bytes.size(), h);
}

uint64_t frozen_params_hash(const CompositeNetwork& net) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (const Node& n : net.nodes)
        if (n.frozen) h = params_hash(n.params, h);
    return h;
}

uint64_t trainable_params_hash(const CompositeNetwork& net) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (const Node& n : net.nodes)
        if (!n.frozen) h = params_hash(n.params, h);
    return h;
}

CompositeNetwork make_scratch(const NetworkSpec& spec, Rng& rng) {
    if (spec.input_width < 1 || spec.hidden.empty())
        throw InvalidInput("make_scratch: need input width and at least one hidden layer");
    for (int w : spec.hidden)
        if (w < 1) throw InvalidInput("make_scratch: hidden sizes must be >= 1");

    CompositeNetwork net;
    net.input_width = spec.input_width;
    int prev_id = kInputSource;
    int prev_width = spec.input_width;
    for (size_t k = 0; k < spec.hidden.size(); ++k) {
        Node n;
        n.origin = {OriginKind::Original, 0};
        n.depth = static_cast<int>(k) + 1;
        n.sources = {prev_id};
        n.params = init_params(prev_width, spec.hidden[k], rng);
        prev_id = static_cast<int>(net.nodes.size());
        prev_width = spec.hidden[k];
        net.nodes.push_back(std::move(n));
    }
    Node cls;
    cls.origin = {OriginKind::Original, 0};
    cls.depth = static_cast<int>(spec.hidden.size()) + 1;
    cls.is_classifier = true;
    cls.sources = {prev_id};
    cls.params = init_params(prev_width, 2, rng);
    net.classifiers = {static_cast<int>(net.nodes.size())};
    net.active_classifier = static_cast<int>(net.nodes.size());
    net.nodes.push_back(std::move(cls));
    return net;
}

CompositeNetwork compose(const std::vector<CompositeNetwork>& originals, const BlockSpec& block,
                         Rng& rng) {
    if (originals.empty()) throw InvalidInput("compose: need at least one original network");
    if (originals.size() > 3) throw InvalidInput("compose: at most three original networks");
    if (!block.valid()) throw InvalidInput("compose: invalid block spec");

    const int input_width = originals[0].input_width;
    const size_t depth = block.added.size();
    for (const auto& o : originals) {
        if (o.input_width != input_width) throw InvalidInput("compose: input width mismatch");
        if (chain_of(o).size() != depth + 1)
            throw InvalidInput("compose: block depth must match the originals' hidden depth");
    }

    CompositeNetwork net;
    net.input_width = input_width;

    // Embed each original column by value, frozen.
    std::vector<std::vector<int>> orig_ids(originals.size());  // per original, hidden node ids by depth
    for (size_t o = 0; o < originals.size(); ++o) {
        int prev_id = kInputSource;
        for (int src : chain_of(originals[o])) {
            Node n = originals[o].nodes[src];
            n.origin = {OriginKind::Original, static_cast<int>(o)};
            n.frozen = true;
            n.sources = {prev_id};
            prev_id = static_cast<int>(net.nodes.size());
            if (n.is_classifier)
                net.classifiers.push_back(prev_id);
            else
                orig_ids[o].push_back(prev_id);
            net.nodes.push_back(std::move(n));
        }
        net.original_hashes.push_back(column_hash(originals[o], OriginKind::Original, 0));
    }

    // Block column.
    int prev_block = kInputSource;
    bool have_block_prev = false;
    int deepest_block = kInputSource;
    for (size_t k = 0; k < depth; ++k) {
        if (block.added[k] == 0) continue;
        Node n;
        n.origin = {OriginKind::Block, 0};
        n.depth = static_cast<int>(k) + 1;
        int fan_in = 0;
        if (k == 0) {
            n.sources = {kInputSource};  // raw input only
            fan_in = input_width;
        } else {
            for (size_t o = 0; o < originals.size(); ++o) {
                int src = orig_ids[o][k - 1];
                n.sources.push_back(src);
                fan_in += net.node_width(src);
            }
            if (have_block_prev) {
                n.sources.push_back(prev_block);
                fan_in += net.node_width(prev_block);
            }
        }
        n.params = init_params(fan_in, block.added[k], rng);
        prev_block = static_cast<int>(net.nodes.size());
        have_block_prev = true;
        deepest_block = prev_block;
        net.nodes.push_back(std::move(n));
    }

    Node cls;
    cls.origin = {OriginKind::Block, 0};
    cls.depth = static_cast<int>(depth) + 1;
    cls.is_classifier = true;
    int fan_in = 0;
    for (size_t o = 0; o < originals.size(); ++o) {
        int src = orig_ids[o].back();
        cls.sources.push_back(src);
        fan_in += net.node_width(src);
    }
    if (deepest_block != kInputSource) {
        cls.sources.push_back(deepest_block);
        fan_in += net.node_width(deepest_block);
    }
    cls.params = init_params(fan_in, 2, rng);
    net.active_classifier = static_cast<int>(net.nodes.size());
    net.classifiers.push_back(net.active_classifier);
    net.nodes.push_back(std::move(cls));
    return net;
}

ParamCount param_count(const CompositeNetwork& net) {
    ParamCount pc;
    for (const Node& n : net.nodes) {
        size_t k = static_cast<size_t>(n.params.W.size()) + static_cast<size_t>(n.params.b.size());
        pc.total += k;
        if (!n.frozen) pc.trainable += k;
    }
    return pc;
}

std::vector<int> trainable_view(const CompositeNetwork& net) {
    std::vector<int> ids;
    for (size_t i = 0; i < net.nodes.size(); ++i)
        if (!net.nodes[i].frozen) ids.push_back(static_cast<int>(i));
    return ids;
}

namespace {

const Matrix& source_output(const CompositeTrace& t, int src) {
    return src == kInputSource ? t.input : t.y[src];
}

}  // namespace

CompositeTrace forward_composite(const CompositeNetwork& net, const Matrix& input) {
    if (input.rows() != net.input_width)
        throw InvalidInput("forward_composite: input width mismatch");
    CompositeTrace t;
    t.input = input;
    t.x.resize(net.nodes.size());
    t.y.resize(net.nodes.size());
    t.z.resize(net.classifiers.size());
    for (size_t id = 0; id < net.nodes.size(); ++id) {
        const Node& n = net.nodes[id];
        Matrix& x = t.x[id];
        if (n.sources.size() == 1) {
            x.noalias() = n.params.W * source_output(t, n.sources[0]);
        } else {
            x.resize(n.params.W.rows(), input.cols());
            x.setZero();
            int off = 0;
            for (int src : n.sources) {
                const Matrix& y = source_output(t, src);
                x.noalias() += n.params.W.middleCols(off, y.rows()) * y;
                off += static_cast<int>(y.rows());
            }
        }
        x.colwise() += n.params.b;
        if (!n.is_classifier) t.y[id] = relu(x);
    }
    for (size_t c = 0; c < net.classifiers.size(); ++c)
        t.z[c] = softmax2_cols(t.x[net.classifiers[c]]);
    return t;
}

namespace {

double nll_from_logits(const Matrix& logits, std::span<const uint8_t> labels) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        double m = logits.col(c).maxCoeff();
        double lse = m + std::log((logits.col(c).array() - m).exp().sum());
        acc += lse - logits(labels[c], c);
    }
    return acc / static_cast<double>(logits.cols());
}

}  // namespace

LossBreakdown composite_loss(const CompositeNetwork& net, const CompositeTrace& trace,
                             std::span<const uint8_t> labels, const LossConfig& cfg) {
    if (labels.empty()) throw InvalidInput("composite_loss: empty batch");
    if (labels.size() != static_cast<size_t>(trace.input.cols()))
        throw InvalidInput("composite_loss: label count does not match batch");

    LossBreakdown lb;
    lb.j1_nll = nll_from_logits(trace.x[net.active_classifier], labels);
    for (size_t id = 0; id < net.nodes.size(); ++id) {
        const Node& n = net.nodes[id];
        if (n.frozen) continue;
        lb.j3_weights += n.params.W.squaredNorm();
        if (n.is_classifier) continue;
        Vector mu = trace.y[id].rowwise().mean();
        Vector rho_hat(mu.size());
        for (Eigen::Index j = 0; j < mu.size(); ++j) {
            rho_hat[j] = std::clamp(mu[j], kRhoHatClampLo, kRhoHatClampHi);
            lb.j2_sparsity += cfg.rho * std::log(cfg.rho / rho_hat[j]) +
                              (1.0 - cfg.rho) * std::log((1.0 - cfg.rho) / (1.0 - rho_hat[j]));
        }
        lb.rho_hat.push_back(std::move(rho_hat));
    }
    lb.j_total = lb.j1_nll + cfg.beta * lb.j2_sparsity + cfg.lambda * lb.j3_weights;
    return lb;
}

std::vector<LayerParams> backward_composite(const CompositeNetwork& net,
                                            const CompositeTrace& trace,
                                            std::span<const uint8_t> labels,
                                            const LossConfig& cfg) {
    const auto batch = trace.input.cols();
    if (labels.size() != static_cast<size_t>(batch))
        throw InvalidInput("backward_composite: label count does not match batch");
    const double inv_n = 1.0 / static_cast<double>(batch);

    const auto view = trainable_view(net);
    std::vector<int> view_pos(net.nodes.size(), -1);
    for (size_t v = 0; v < view.size(); ++v) view_pos[view[v]] = static_cast<int>(v);
    std::vector<LayerParams> grads(view.size());

    // dy_acc[id] collects dJ/dy for trainable hidden nodes as their
    // consumers are processed (reverse topological order).
    std::vector<Matrix> dy_acc(net.nodes.size());

    auto active_z_pos = [&]() -> size_t {
        for (size_t c = 0; c < net.classifiers.size(); ++c)
            if (net.classifiers[c] == net.active_classifier) return c;
        throw InvalidInput("backward_composite: no active classifier");
    }();

    for (size_t i = net.nodes.size(); i-- > 0;) {
        const Node& n = net.nodes[i];
        if (n.frozen) continue;  // nothing trainable upstream of frozen columns

        Matrix delta;
        if (n.is_classifier) {
            if (static_cast<int>(i) != net.active_classifier) continue;  // inert classifier
            delta = trace.z[active_z_pos];
            for (Eigen::Index c = 0; c < batch; ++c) delta(labels[c], c) -= 1.0;
            delta *= inv_n;
        } else {
            Matrix dy;
            if (dy_acc[i].size() > 0)
                dy = std::move(dy_acc[i]);
            else
                dy = Matrix::Zero(n.params.W.rows(), batch);
            const Matrix& y = trace.y[i];
            Vector mu = y.rowwise().mean();
            for (Eigen::Index j = 0; j < mu.size(); ++j) {
                if (mu[j] <= kRhoHatClampLo || mu[j] >= kRhoHatClampHi) continue;
                double dkl = -cfg.rho / mu[j] + (1.0 - cfg.rho) / (1.0 - mu[j]);
                dy.row(j).array() += cfg.beta * dkl * inv_n;
            }
            delta = dy.cwiseProduct((trace.x[i].array() > 0.0).cast<double>().matrix());
        }

        LayerParams& g = grads[view_pos[i]];
        g.W.resize(n.params.W.rows(), n.params.W.cols());
        g.b = delta.rowwise().sum();
        int off = 0;
        for (int src : n.sources) {
            const Matrix& y = source_output(trace, src);
            g.W.middleCols(off, y.rows()).noalias() = delta * y.transpose();
            if (src != kInputSource && !net.nodes[src].frozen) {
                Matrix& acc = dy_acc[src];
                if (acc.size() == 0) acc = Matrix::Zero(y.rows(), batch);
                acc.noalias() += n.params.W.middleCols(off, y.rows()).transpose() * delta;
            }
            off += static_cast<int>(y.rows());
        }
        g.W += 2.0 * cfg.lambda * n.params.W;
    }
    return grads;
}

double classifier_error(const CompositeNetwork& net, size_t classifier_pos, const Dataset& ds) {
    if (classifier_pos >= net.classifiers.size())
        throw InvalidInput("classifier_error: classifier index out of range");
    return error_rate(
        [&](const Matrix& X) { return forward_composite(net, X).z[classifier_pos]; }, ds);
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {

constexpr char kCheckpointMagic[4] = {'B', 'M', 'N', 'C'};

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

uint64_t parse_hex64(const std::string& s) {
    return std::stoull(s, nullptr, 16);
}

template <typename T>
void write_le(std::ofstream& f, T v) {
    for (size_t i = 0; i < sizeof(T); ++i) f.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T read_le(std::ifstream& f) {
    unsigned char buf[sizeof(T)];
    f.read(reinterpret_cast<char*>(buf), sizeof(T));
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const CompositeNetwork& net, const std::string& path) {
    json manifest;
    manifest["format_version"] = kCheckpointFormatVersion;
    manifest["generator_version"] = kGeneratorVersion;
    manifest["input_width"] = net.input_width;
    manifest["active_classifier"] = net.active_classifier;
    manifest["classifiers"] = net.classifiers;
    json nodes = json::array();
    for (const Node& n : net.nodes) {
        json jn;
        jn["origin"] = {{"kind", n.origin.kind == OriginKind::Block ? "block" : "original"},
                        {"index", n.origin.index}};
        jn["depth"] = n.depth;
        jn["classifier"] = n.is_classifier;
        jn["width"] = n.params.W.rows();
        jn["fan_in"] = n.params.W.cols();
        jn["sources"] = n.sources;
        jn["frozen"] = n.frozen;
        jn["hash"] = hex64(params_hash(n.params));
        nodes.push_back(std::move(jn));
    }
    manifest["nodes"] = std::move(nodes);
    json oh = json::array();
    for (uint64_t h : net.original_hashes) oh.push_back(hex64(h));
    manifest["original_hashes"] = std::move(oh);
    manifest["provenance"] = net.provenance;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_checkpoint: cannot open " + path);
    f.write(kCheckpointMagic, 4);
    write_le<uint16_t>(f, kCheckpointFormatVersion);
    const std::string m = manifest.dump();
    write_le<uint32_t>(f, static_cast<uint32_t>(m.size()));
    f.write(m.data(), static_cast<std::streamsize>(m.size()));
    for (const Node& n : net.nodes) {
        auto bytes = param_bytes(n.params);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    }
    if (!f) throw IoError("save_checkpoint: write failed for " + path);
}

CompositeNetwork load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_checkpoint: cannot open " + path);
    f.seekg(0, std::ios::end);
    const auto file_size = static_cast<uint64_t>(f.tellg());
    f.seekg(0);
    if (file_size < 10) throw TruncationError("load_checkpoint: file shorter than header");

    char magic[4];
    f.read(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw FormatError("load_checkpoint: bad magic in " + path);
    uint16_t version = read_le<uint16_t>(f);
    if (version != kCheckpointFormatVersion)
        throw FormatError("load_checkpoint: unsupported version " + std::to_string(version));
    uint32_t mlen = read_le<uint32_t>(f);
    if (10ull + mlen > file_size) throw TruncationError("load_checkpoint: truncated manifest");
    std::string mtext(mlen, '\0');
    f.read(mtext.data(), mlen);

    json manifest;
    try {
        manifest = json::parse(mtext);
    } catch (const json::exception& e) {
        throw FormatError(std::string("load_checkpoint: bad manifest: ") + e.what());
    }

    CompositeNetwork net;
    uint64_t payload = 0;
    try {
        net.input_width = manifest.at("input_width").get<int>();
        net.active_classifier = manifest.at("active_classifier").get<int>();
        net.classifiers = manifest.at("classifiers").get<std::vector<int>>();
        for (const auto& jn : manifest.at("nodes")) {
            Node n;
            n.origin.kind = jn.at("origin").at("kind").get<std::string>() == "block"
                                ? OriginKind::Block
                                : OriginKind::Original;
            n.origin.index = jn.at("origin").at("index").get<int>();
            n.depth = jn.at("depth").get<int>();
            n.is_classifier = jn.at("classifier").get<bool>();
            n.sources = jn.at("sources").get<std::vector<int>>();
            n.frozen = jn.at("frozen").get<bool>();
            int width = jn.at("width").get<int>();
            int fan_in = jn.at("fan_in").get<int>();
            n.params.W.resize(width, fan_in);
            n.params.b.resize(width);
            payload += (static_cast<uint64_t>(width) * fan_in + width) * 8;
            net.nodes.push_back(std::move(n));
        }
        for (const auto& h : manifest.at("original_hashes"))
            net.original_hashes.push_back(parse_hex64(h.get<std::string>()));
        if (manifest.contains("provenance"))
            net.provenance = manifest.at("provenance").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("load_checkpoint: bad manifest: ") + e.what());
    }

    if (10ull + mlen + payload != file_size)
        throw TruncationError("load_checkpoint: parameter payload size mismatch");

    for (size_t id = 0; id < net.nodes.size(); ++id) {
        Node& n = net.nodes[id];
        for (Eigen::Index r = 0; r < n.params.W.rows(); ++r)
            for (Eigen::Index c = 0; c < n.params.W.cols(); ++c)
                n.params.W(r, c) = std::bit_cast<double>(read_le<uint64_t>(f));
        for (Eigen::Index i = 0; i < n.params.b.size(); ++i)
            n.params.b[i] = std::bit_cast<double>(read_le<uint64_t>(f));
        uint64_t want = parse_hex64(manifest["nodes"][id]["hash"].get<std::string>());
        uint64_t got = params_hash(n.params);
        if (want != got)
            throw IntegrityError("load_checkpoint: node " + std::to_string(id) +
                                 " hash mismatch (stored " + hex64(want) + ", computed " +
                                 hex64(got) + ")");
    }
    if (!f) throw IoError("load_checkpoint: read failed for " + path);

    // Re-derive each embedded original's identity and compare.
    for (size_t o = 0; o < net.original_hashes.size(); ++o) {
        uint64_t got = column_hash(net, OriginKind::Original, static_cast<int>(o));
        if (got != net.original_hashes[o])
            throw IntegrityError("load_checkpoint: embedded original " + std::to_string(o) +
                                 " hash mismatch");
    }
    return net;
}

}  // namespace bmnn
