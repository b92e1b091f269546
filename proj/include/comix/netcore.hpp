#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "comix/rng.hpp"
#include "comix/text.hpp"

#include "json.hpp"

namespace comix::netcore {

inline constexpr int kEmbedDim = 96;
inline constexpr int kCountClasses = 3;  // utterances express 1, 2 or 3 intents

using Vec = std::vector<double>;

std::vector<std::string> tokenize(const std::string& text);

struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::vector<std::string> tokens;  // dense ids, [0]="<pad>", [1]="<unk>"
  std::unordered_map<std::string, int> index;

  static Vocab build(const std::vector<std::string>& texts);
  std::vector<int> ids(const std::string& text) const;
  int size() const { return static_cast<int>(tokens.size()); }
};

enum class HeadKind {
  kSoftmax,     // K-way softmax (atomic-set classes or singleton intents)
  kMultiLabel,  // per-intent sigmoid scores plus a 3-way count head
};

struct TrainConfig {
  double learning_rate = 2e-3;
  int batch_size = 64;
  int epochs = 12;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  uint64_t seed = 0;
};

// All parameters live in one flat array; offsets index into it.
struct ModelShape {
  HeadKind kind = HeadKind::kSoftmax;
  int vocab_size = 0;
  int dim = kEmbedDim;
  int n_classes = 0;  // softmax arity, or number of intents for multi-label
  bool relu = true;   // identity activation used by the gradcheck exactness probe

  size_t embedding = 0;  // vocab_size x dim
  size_t w1 = 0, b1 = 0;  // dim x dim, dim
  size_t w2 = 0, b2 = 0;  // dim x dim, dim
  size_t head_w = 0, head_b = 0;      // n_classes x dim, n_classes
  size_t count_w = 0, count_b = 0;    // 3 x dim, 3 (multi-label only)
  size_t total = 0;
};

ModelShape make_shape(HeadKind kind, int vocab_size, int n_classes, bool relu);

struct Model {
  Vocab vocab;
  ModelShape shape;
  Vec params;
  TrainConfig config;  // config the model was trained with
};

Model make_model(HeadKind kind, Vocab vocab, int n_classes, uint64_t init_seed,
                 bool relu = true);

// --- forward ---------------------------------------------------------------

struct Activations {
  Vec pooled;        // mean embedding
  Vec pre1, hidden;  // first projection before/after activation
  Vec encoded;       // second projection output
  Vec logits, probs;             // head (softmax or sigmoid scores)
  Vec count_logits, count_probs; // multi-label only
};

// Mean-pool -> projection -> activation -> projection. Throws on empty ids.
// Summation runs left to right over positions.
void encode(const Model& m, const std::vector<int>& ids, Activations& act);
Vec encode_utterance(const Model& m, const std::vector<int>& ids);

// Fills logits/probs (and count head when present) from act.encoded.
void forward_heads(const Model& m, Activations& act);

Vec softmax(const Vec& logits);
double sigmoid(double x);

// --- loss / training -------------------------------------------------------

struct Target {
  int label = -1;            // softmax class
  uint32_t intent_bits = 0;  // multi-label gold set
  int count_label = -1;      // 0-based count class (|gold| - 1)
};

double softmax_cross_entropy(const Vec& logits, int gold);
double binary_cross_entropy_sum(const Vec& logits, uint32_t gold_bits);

// Loss plus explicit backprop; gradient is accumulated into grad (same layout
// as params). Returns the loss.
double loss_and_grad(const Model& m, const std::vector<int>& ids,
                     const Target& target, Vec& grad);
double loss_only(const Model& m, const std::vector<int>& ids,
                 const Target& target);

struct AdamState {
  Vec m, v;
  int64_t step = 0;
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;
};

// Standard Adam with bias correction. Throws on non-finite gradients.
void adam_step(Model& model, AdamState& state, const Vec& grad,
               const TrainConfig& cfg);

struct TrainItem {
  std::vector<int> ids;
  Target target;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean per-example loss per epoch
};

// Shuffled minibatch training; shuffle order is a pure function of cfg.seed.
TrainResult train(Model& m, const std::vector<TrainItem>& items,
                  const TrainConfig& cfg);

// --- gradient checking -----------------------------------------------------

struct GradcheckOptions {
  int examples = 10;
  int probes_per_example = 10;
  double fd_step = 1e-4;
  uint64_t seed = 12;
  bool relu = true;
  // Test hook: index of a parameter whose analytic gradient is corrupted, to
  // prove the checker catches a broken backward pass. -1 disables.
  int corrupt_index = -1;
};

// Compares analytic gradients against central finite differences on a small
// random model; returns the max relative error over all probes.
double gradcheck(HeadKind kind, const GradcheckOptions& opt);

// --- persistence -----------------------------------------------------------

// Self-describing binary artifact: magic, JSON header (vocab, config, shapes,
// caller extras), then raw little-endian doubles.
void save_model(const Model& m, const nlohmann::json& extra,
                const std::string& path);
Model load_model(const std::string& path, nlohmann::json* extra_out = nullptr);

}  // namespace comix::netcore
