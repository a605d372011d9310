#pragma once
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trackid/image.hpp"
#include "trackid/layers.hpp"
#include "trackid/score_matrix.hpp"

namespace trackid {

// Architecture hyperparameters. The factor-1.0 preset is the published
// architecture; the width factor scales channel counts for desk-scale runs.
struct ModelConfig {
    int input_h = 224;
    int input_w = 224;
    int pre_crop_h = 240;  // resize target before the crop
    int pre_crop_w = 320;
    int channels = 3;
    float width_factor = 1.0f;
    int num_classes = 81;
    int lstm_hidden_base = 256;
    int window = 16;
    float dropout_rate = 0.5f;

    int stage_width(int stage) const;  // 64,128,256,512 scaled, stage in [0,4)
    int feature_dim() const { return stage_width(3); }
    int lstm_hidden() const;
    void validate() const;

    // Numeric echo embedded in checkpoints under the reserved name
    // "meta.config".
    Tensor to_meta() const;
    static ModelConfig from_meta(const Tensor& t);
};

// ResNet-10 trunk: input batchnorm, 7x7/stride-2 conv, 3x3/stride-2 max pool,
// four 2-layer residual stacks (stacks 2-4 stride 2 with projection), global
// average pool. Produces one feature vector per frame.
class ResNetBase {
  public:
    ResNetBase(const ModelConfig& cfg, Prng& prng);
    NodeRef features(const NodeRef& frames, Mode mode) const;  // [N,C,H,W] -> [N,F]
    void register_params(const std::string& prefix, ParamRegistry& reg);

    BatchNormLayer bn0;
    Conv2dLayer conv1;
    BatchNormLayer bn1;
    std::vector<ResidualStack> stacks;
};

// Per-frame class confidences for a raw tracklet; implementations own the
// eval-mode preprocessing (resize + center crop).
class Scorer {
  public:
    virtual ~Scorer() = default;
    virtual ScoreMatrix score(const std::vector<Tensor>& frames) = 0;
    virtual int window_len() const = 0;
    virtual int num_classes() const = 0;
};

// Frame-only ResNet-10 classifier (baseline and pretraining head).
class FrameClassifier : public Scorer {
  public:
    FrameClassifier(const ModelConfig& cfg, uint64_t seed);
    NodeRef probs(const NodeRef& frames, Mode mode) const;  // [N,M]
    ScoreMatrix score(const std::vector<Tensor>& frames) override;
    int window_len() const override { return cfg.window; }
    int num_classes() const override { return cfg.num_classes; }
    ParamRegistry& params() { return registry_; }

    ModelConfig cfg;

  private:
    Prng init_prng_;  // consumed while members construct, in declaration order

  public:
    ResNetBase base;
    LinearLayer head;

  private:
    ParamRegistry registry_;
};

// ResNet trunk feeding a single LSTM layer, dropout, and a softmax head;
// emits one confidence row per frame. Tracklets are scored in consecutive
// non-overlapping windows with the LSTM state reset per window.
class SequenceClassifier : public Scorer {
  public:
    SequenceClassifier(const ModelConfig& cfg, uint64_t seed);

    // Training path: time-major feature rows (step t occupies rows
    // [t*B,(t+1)*B)) -> per-frame probability rows in the same order.
    NodeRef probs_from_features(const NodeRef& feats, int t_len, int batch, Mode mode, Prng& dropout_prng) const;

    // Inference path for one window of raw (already preprocessed) frames.
    Tensor score_window(const std::vector<Tensor>& frames) const;

    ScoreMatrix score(const std::vector<Tensor>& frames) override;
    int window_len() const override { return cfg.window; }
    int num_classes() const override { return cfg.num_classes; }
    ParamRegistry& params() { return registry_; }

    void set_base_frozen(bool frozen) { base_frozen_ = frozen; }
    bool base_frozen() const { return base_frozen_; }
    Mode base_mode(Mode requested) const { return base_frozen_ ? Mode::Infer : requested; }

    ModelConfig cfg;

  private:
    Prng init_prng_;

  public:
    ResNetBase base;
    LstmLayer lstm;
    LinearLayer head;

  private:
    ParamRegistry registry_;
    bool base_frozen_ = false;
};

// Secondary 1-D CNN over the averaged confidence vector: six convolutions
// arranged as two residual pairs, a width-2 conv, max pool, then three fully
// connected layers ending in softmax.
class FusionNet {
  public:
    FusionNet(int num_classes, uint64_t seed);
    NodeRef probs(const NodeRef& x) const;  // [B,1,M] -> [B,M]
    Tensor infer(const std::vector<float>& score_vec) const;
    ParamRegistry& params() { return registry_; }
    int num_classes() const { return m_; }
    int flatten_len() const;

  private:
    int m_;
    Prng init_prng_;

  public:
    Conv1dLayer conv1, conv2_1, conv2_2, conv3_1, conv3_2, conv4;
    LinearLayer fc1, fc2, fc3;

  private:
    ParamRegistry registry_;
};

// ---- checkpoints ----------------------------------------------------------

// Binary format: magic "TIDC", version u32 LE; per parameter: name length
// u32, UTF-8 name, rank u32, dims u32[rank], float32 LE payload. The model
// config travels as a float tensor under the reserved name "meta.config".
struct Checkpoint {
    uint32_t version = 1;
    std::vector<std::pair<std::string, Tensor>> entries;

    const Tensor* find(const std::string& name) const;
    std::optional<ModelConfig> config() const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    static Checkpoint snapshot(const ParamRegistry& reg, const ModelConfig* cfg);
};

struct TransferReport {
    struct Item {
        std::string name;
        bool copied;
        std::string detail;
    };
    std::vector<Item> items;
    int copied = 0;
    int skipped = 0;
    std::string summary() const;
};

// Copies source entries into matching target parameters. mapper returns the
// source name for a target name, or nullopt to leave the target untouched.
// A mapped name missing from the source is reported skipped; a shape mismatch
// is an error naming the parameter.
TransferReport transfer_weights(
    const Checkpoint& src, ParamRegistry& dst,
    const std::function<std::optional<std::string>(const std::string&)>& mapper = nullptr);

// Set of parameter names excluded from optimizer updates.
using FreezeMask = std::set<std::string>;
FreezeMask freeze_prefix(const ParamRegistry& reg, const std::string& prefix);

// Consecutive non-overlapping windows; the tail may be shorter than window.
std::vector<std::pair<int, int>> window_spans(int n, int window);

}  // namespace trackid
