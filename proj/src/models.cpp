#include "trackid/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace trackid {

namespace {

Tensor pack_frames(const std::vector<Tensor>& frames, size_t start, size_t count) {
    const Tensor& f0 = frames[start];
    if (f0.rank() != 3) throw ShapeError("frame must be [C,H,W], got " + f0.shape_str());
    Tensor out({static_cast<int>(count), f0.dim(0), f0.dim(1), f0.dim(2)});
    const int64_t sz = f0.numel();
    for (size_t i = 0; i < count; ++i) {
        const Tensor& f = frames[start + i];
        if (!f.same_shape(f0)) throw ShapeError("tracklet frames must share one shape");
        std::memcpy(out.data() + static_cast<int64_t>(i) * sz, f.data(), static_cast<size_t>(sz) * sizeof(float));
    }
    return out;
}

Tensor eval_preprocess(const Tensor& frame, const ModelConfig& cfg) {
    Tensor r = resize_bilinear(frame, cfg.pre_crop_h, cfg.pre_crop_w);
    return center_crop(r, cfg.input_h, cfg.input_w);
}

void copy_rows(const Tensor& probs, ScoreMatrix& out, int row0) {
    const int n = probs.dim(0), m = probs.dim(1);
    for (int i = 0; i < n; ++i)
        std::memcpy(out.row(row0 + i), probs.data() + static_cast<int64_t>(i) * m,
                    static_cast<size_t>(m) * sizeof(float));
}

const ModelConfig& validated(const ModelConfig& cfg) {
    cfg.validate();
    return cfg;
}

}  // namespace

int ModelConfig::stage_width(int stage) const {
    static const int base[4] = {64, 128, 256, 512};
    return std::max(1, static_cast<int>(std::lround(base[stage] * width_factor)));
}

int ModelConfig::lstm_hidden() const {
    return std::max(1, static_cast<int>(std::lround(lstm_hidden_base * width_factor)));
}

void ModelConfig::validate() const {
    if (width_factor <= 0.0f) throw ConfigError("width_factor must be > 0");
    if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (window < 1) throw ConfigError("window must be >= 1");
    if (channels < 1) throw ConfigError("channels must be >= 1");
    if (input_h < 8 || input_w < 8) throw ConfigError("input size must be at least 8x8");
    if (pre_crop_h < input_h || pre_crop_w < input_w)
        throw ConfigError("pre-crop size must be at least the input size");
    if (dropout_rate < 0.0f || dropout_rate >= 1.0f) throw ConfigError("dropout must be in [0,1)");
}

Tensor ModelConfig::to_meta() const {
    Tensor t({10});
    t[0] = static_cast<float>(input_h);
    t[1] = static_cast<float>(input_w);
    t[2] = static_cast<float>(pre_crop_h);
    t[3] = static_cast<float>(pre_crop_w);
    t[4] = static_cast<float>(channels);
    t[5] = width_factor;
    t[6] = static_cast<float>(num_classes);
    t[7] = static_cast<float>(lstm_hidden_base);
    t[8] = static_cast<float>(window);
    t[9] = dropout_rate;
    return t;
}

ModelConfig ModelConfig::from_meta(const Tensor& t) {
    if (t.numel() != 10) throw FormatError("meta.config tensor must have 10 entries");
    ModelConfig c;
    c.input_h = static_cast<int>(t[0]);
    c.input_w = static_cast<int>(t[1]);
    c.pre_crop_h = static_cast<int>(t[2]);
    c.pre_crop_w = static_cast<int>(t[3]);
    c.channels = static_cast<int>(t[4]);
    c.width_factor = t[5];
    c.num_classes = static_cast<int>(t[6]);
    c.lstm_hidden_base = static_cast<int>(t[7]);
    c.window = static_cast<int>(t[8]);
    c.dropout_rate = t[9];
    return c;
}

ResNetBase::ResNetBase(const ModelConfig& cfg, Prng& prng)
    : bn0(cfg.channels),
      conv1(cfg.channels, cfg.stage_width(0), 7, 2, 3, prng),
      bn1(cfg.stage_width(0)) {
    stacks.emplace_back(cfg.stage_width(0), cfg.stage_width(0), 1, prng);
    stacks.emplace_back(cfg.stage_width(0), cfg.stage_width(1), 2, prng);
    stacks.emplace_back(cfg.stage_width(1), cfg.stage_width(2), 2, prng);
    stacks.emplace_back(cfg.stage_width(2), cfg.stage_width(3), 2, prng);
}

NodeRef ResNetBase::features(const NodeRef& frames, Mode mode) const {
    NodeRef x = bn0.forward(frames, mode);
    x = conv1.forward(x);
    x = ops::relu(bn1.forward(x, mode));
    x = ops::maxpool2d(x, 3, 2);
    for (const auto& s : stacks) x = s.forward(x, mode);
    return ops::global_avgpool(x);
}

void ResNetBase::register_params(const std::string& prefix, ParamRegistry& reg) {
    bn0.register_params(prefix + ".bn0", reg);
    conv1.register_params(prefix + ".conv1", reg);
    bn1.register_params(prefix + ".bn1", reg);
    for (size_t i = 0; i < stacks.size(); ++i)
        stacks[i].register_params(prefix + ".stack" + std::to_string(i + 1), reg);
}

FrameClassifier::FrameClassifier(const ModelConfig& cfg_, uint64_t seed)
    : cfg(validated(cfg_)),
      init_prng_(seed),
      base(cfg_, init_prng_),
      head(cfg_.stage_width(3), cfg_.num_classes, init_prng_) {
    base.register_params("base", registry_);
    head.register_params("head.fc", registry_);
}

NodeRef FrameClassifier::probs(const NodeRef& frames, Mode mode) const {
    return ops::softmax(head.forward(base.features(frames, mode)));
}

ScoreMatrix FrameClassifier::score(const std::vector<Tensor>& frames) {
    if (frames.empty()) throw ShapeError("score: empty tracklet");
    const int n = static_cast<int>(frames.size());
    ScoreMatrix out(n, cfg.num_classes);
    std::vector<Tensor> prep(frames.size());
    for (size_t i = 0; i < frames.size(); ++i) prep[i] = eval_preprocess(frames[i], cfg);
    const int chunk = 32;
    for (int start = 0; start < n; start += chunk) {
        const int count = std::min(chunk, n - start);
        NodeRef x = make_leaf(pack_frames(prep, static_cast<size_t>(start), static_cast<size_t>(count)), false);
        copy_rows(probs(x, Mode::Infer)->value, out, start);
    }
    return out;
}

SequenceClassifier::SequenceClassifier(const ModelConfig& cfg_, uint64_t seed)
    : cfg(validated(cfg_)),
      init_prng_(seed),
      base(cfg_, init_prng_),
      lstm(cfg_.stage_width(3), cfg_.lstm_hidden(), init_prng_),
      head(cfg_.lstm_hidden(), cfg_.num_classes, init_prng_) {
    base.register_params("base", registry_);
    lstm.register_params("lstm", registry_);
    head.register_params("head.fc", registry_);
}

NodeRef SequenceClassifier::probs_from_features(const NodeRef& feats, int t_len, int batch, Mode mode,
                                                Prng& dropout_prng) const {
    if (feats->value.rank() != 2 || feats->value.dim(0) != t_len * batch)
        throw ShapeError("probs_from_features: expected [" + std::to_string(t_len * batch) + ",F] time-major rows");
    LstmLayer::State s = lstm.zero_state(batch);
    std::vector<NodeRef> hs;
    hs.reserve(static_cast<size_t>(t_len));
    for (int t = 0; t < t_len; ++t) {
        s = lstm.step(ops::slice_rows(feats, t * batch, batch), s);
        hs.push_back(s.h);
    }
    NodeRef h = ops::concat_rows(hs);
    h = ops::dropout(h, cfg.dropout_rate, mode, dropout_prng);
    return ops::softmax(head.forward(h));
}

Tensor SequenceClassifier::score_window(const std::vector<Tensor>& frames) const {
    const int t_len = static_cast<int>(frames.size());
    NodeRef x = make_leaf(pack_frames(frames, 0, frames.size()), false);
    NodeRef feats = base.features(x, Mode::Infer);
    Prng unused(0);
    return probs_from_features(feats, t_len, 1, Mode::Infer, unused)->value;
}

ScoreMatrix SequenceClassifier::score(const std::vector<Tensor>& frames) {
    if (frames.empty()) throw ShapeError("score: empty tracklet");
    std::vector<Tensor> prep(frames.size());
    for (size_t i = 0; i < frames.size(); ++i) prep[i] = eval_preprocess(frames[i], cfg);
    ScoreMatrix out(static_cast<int>(frames.size()), cfg.num_classes);
    for (const auto& [start, len] : window_spans(static_cast<int>(frames.size()), cfg.window)) {
        std::vector<Tensor> win(prep.begin() + start, prep.begin() + start + len);
        copy_rows(score_window(win), out, start);
    }
    return out;
}

FusionNet::FusionNet(int num_classes, uint64_t seed)
    : m_(num_classes),
      init_prng_(seed),
      conv1(1, 20, 3, 1, 1, init_prng_),
      conv2_1(20, 50, 3, 1, 1, init_prng_),
      conv2_2(50, 50, 3, 1, 1, init_prng_),
      conv3_1(50, 70, 3, 1, 1, init_prng_),
      conv3_2(70, 70, 3, 1, 1, init_prng_),
      conv4(70, 70, 2, 1, 1, init_prng_),
      fc1(flatten_len(), 256, init_prng_),
      fc2(256, 256, init_prng_),
      fc3(256, num_classes, init_prng_) {
    if (num_classes < 2) throw ConfigError("fusion net needs at least 2 classes");
    conv1.register_params("fusion.conv1", registry_);
    conv2_1.register_params("fusion.conv2_1", registry_);
    conv2_2.register_params("fusion.conv2_2", registry_);
    conv3_1.register_params("fusion.conv3_1", registry_);
    conv3_2.register_params("fusion.conv3_2", registry_);
    conv4.register_params("fusion.conv4", registry_);
    fc1.register_params("fusion.fc1", registry_);
    fc2.register_params("fusion.fc2", registry_);
    fc3.register_params("fusion.fc3", registry_);
}

int FusionNet::flatten_len() const {
    const int after_conv4 = m_ + 1;            // k=2, pad 1, stride 1
    const int after_pool = (after_conv4 - 2) / 2 + 1;
    return 70 * after_pool;
}

NodeRef FusionNet::probs(const NodeRef& x) const {
    if (x->value.rank() != 3 || x->value.dim(1) != 1 || x->value.dim(2) != m_)
        throw ShapeError("fusion net: input must be [B,1," + std::to_string(m_) + "], got " + x->value.shape_str());
    const int batch = x->value.dim(0);
    NodeRef a = conv1.forward(x);
    NodeRef b1 = conv2_1.forward(a);
    NodeRef b2 = conv2_2.forward(b1);
    NodeRef b = ops::add(b1, b2);
    NodeRef c1 = conv3_1.forward(b);
    NodeRef c2 = conv3_2.forward(c1);
    NodeRef c = ops::add(c1, c2);
    NodeRef d = conv4.forward(c);
    d = ops::maxpool1d(d, 2, 2);
    NodeRef flat = ops::reshape(d, {batch, flatten_len()});
    NodeRef f = ops::relu(fc1.forward(flat));
    f = ops::relu(fc2.forward(f));
    return ops::softmax(fc3.forward(f));
}

Tensor FusionNet::infer(const std::vector<float>& score_vec) const {
    if (static_cast<int>(score_vec.size()) != m_)
        throw ShapeError("fusion net: score vector length " + std::to_string(score_vec.size()) + " != classes " +
                         std::to_string(m_));
    NodeRef x = make_leaf(Tensor({1, 1, m_}, std::vector<float>(score_vec)), false);
    return probs(x)->value;
}

// ---- checkpoints ----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'T', 'I', 'D', 'C'};

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

bool read_u32(std::istream& is, uint32_t& v) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (is.gcount() != 4) return false;
    v = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) | (static_cast<uint32_t>(b[2]) << 16) |
        (static_cast<uint32_t>(b[3]) << 24);
    return true;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : entries)
        if (n == name) return &t;
    return nullptr;
}

std::optional<ModelConfig> Checkpoint::config() const {
    const Tensor* t = find("meta.config");
    if (!t) return std::nullopt;
    return ModelConfig::from_meta(*t);
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    write_u32(os, version);
    for (const auto& [name, t] : entries) {
        write_u32(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, static_cast<uint32_t>(t.rank()));
        for (int i = 0; i < t.rank(); ++i) write_u32(os, static_cast<uint32_t>(t.dim(i)));
        os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * 4));
    }
    if (!os) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad checkpoint magic in " + path);
    Checkpoint ck;
    if (!read_u32(is, ck.version)) throw FormatError("truncated checkpoint header in " + path);
    while (true) {
        unsigned char b[4];
        is.read(reinterpret_cast<char*>(b), 4);
        const std::streamsize got = is.gcount();
        if (got == 0) break;  // clean end between records
        if (got < 4) throw FormatError("truncated checkpoint record in " + path);
        const uint32_t name_len = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                                  (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
        if (name_len == 0 || name_len > 4096) throw FormatError("implausible name length in " + path);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (is.gcount() != static_cast<std::streamsize>(name_len))
            throw FormatError("truncated parameter name in " + path);
        uint32_t rank;
        if (!read_u32(is, rank)) throw FormatError("truncated record header in " + path);
        if (rank > 8) throw FormatError("implausible tensor rank in " + path);
        std::vector<int> dims(rank);
        int64_t numel = 1;
        for (uint32_t i = 0; i < rank; ++i) {
            uint32_t d;
            if (!read_u32(is, d)) throw FormatError("truncated dims in " + path);
            if (d == 0 || d > (1u << 28)) throw FormatError("implausible dimension in " + path);
            dims[i] = static_cast<int>(d);
            numel *= d;
        }
        Tensor t(dims);
        is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(numel * 4));
        if (is.gcount() != static_cast<std::streamsize>(numel * 4))
            throw FormatError("truncated payload for '" + name + "' in " + path);
        ck.entries.emplace_back(std::move(name), std::move(t));
    }
    return ck;
}

Checkpoint Checkpoint::snapshot(const ParamRegistry& reg, const ModelConfig* cfg) {
    Checkpoint ck;
    if (cfg) ck.entries.emplace_back("meta.config", cfg->to_meta());
    for (const auto& e : reg.entries) ck.entries.emplace_back(e.name, reg.tensor_of(e));
    return ck;
}

std::string TransferReport::summary() const {
    return "copied " + std::to_string(copied) + ", skipped " + std::to_string(skipped);
}

TransferReport transfer_weights(const Checkpoint& src, ParamRegistry& dst,
                                const std::function<std::optional<std::string>(const std::string&)>& mapper) {
    TransferReport rep;
    for (auto& e : dst.entries) {
        std::optional<std::string> src_name = mapper ? mapper(e.name) : std::optional<std::string>(e.name);
        if (!src_name) {
            rep.items.push_back({e.name, false, "skipped: not mapped"});
            ++rep.skipped;
            continue;
        }
        const Tensor* t = src.find(*src_name);
        if (!t) {
            rep.items.push_back({e.name, false, "skipped: not in source"});
            ++rep.skipped;
            continue;
        }
        Tensor& target = dst.tensor_of(e);
        if (t->shape() != target.shape())
            throw ShapeError("transfer: shape mismatch for parameter '" + e.name + "': source " + t->shape_str() +
                             " vs target " + target.shape_str());
        target = *t;
        rep.items.push_back({e.name, true, "copied from '" + *src_name + "'"});
        ++rep.copied;
    }
    return rep;
}

FreezeMask freeze_prefix(const ParamRegistry& reg, const std::string& prefix) {
    FreezeMask mask;
    for (const auto& e : reg.entries)
        if (e.name.rfind(prefix, 0) == 0) mask.insert(e.name);
    return mask;
}

std::vector<std::pair<int, int>> window_spans(int n, int window) {
    if (n < 1) throw ShapeError("empty tracklet");
    if (window < 1) throw ConfigError("window must be >= 1");
    std::vector<std::pair<int, int>> spans;
    for (int start = 0; start < n; start += window) spans.emplace_back(start, std::min(window, n - start));
    return spans;
}

}  // namespace trackid
