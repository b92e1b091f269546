#include "comix/netcore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

using nlohmann::json;

namespace comix::netcore {

std::vector<std::string> tokenize(const std::string& text) {
  return comix::tokenize(text);
}

Vocab Vocab::build(const std::vector<std::string>& texts) {
  std::set<std::string> seen;
  for (const auto& text : texts)
    for (auto& tok : tokenize(text)) seen.insert(std::move(tok));
  Vocab v;
  v.tokens = {"<pad>", "<unk>"};
  for (const auto& tok : seen) v.tokens.push_back(tok);
  for (int i = 0; i < static_cast<int>(v.tokens.size()); ++i)
    v.index[v.tokens[i]] = i;
  return v;
}

std::vector<int> Vocab::ids(const std::string& text) const {
  std::vector<int> out;
  for (const auto& tok : tokenize(text)) {
    auto it = index.find(tok);
    out.push_back(it == index.end() ? kUnk : it->second);
  }
  return out;
}

ModelShape make_shape(HeadKind kind, int vocab_size, int n_classes, bool relu) {
  ModelShape s;
  s.kind = kind;
  s.vocab_size = vocab_size;
  s.n_classes = n_classes;
  s.relu = relu;
  size_t cursor = 0;
  auto take = [&](size_t n) {
    size_t at = cursor;
    cursor += n;
    return at;
  };
  const size_t d = kEmbedDim;
  s.embedding = take(static_cast<size_t>(vocab_size) * d);
  s.w1 = take(d * d);
  s.b1 = take(d);
  s.w2 = take(d * d);
  s.b2 = take(d);
  s.head_w = take(static_cast<size_t>(n_classes) * d);
  s.head_b = take(n_classes);
  if (kind == HeadKind::kMultiLabel) {
    s.count_w = take(static_cast<size_t>(kCountClasses) * d);
    s.count_b = take(kCountClasses);
  }
  s.total = cursor;
  return s;
}

Model make_model(HeadKind kind, Vocab vocab, int n_classes, uint64_t init_seed,
                 bool relu) {
  Model m;
  m.vocab = std::move(vocab);
  m.shape = make_shape(kind, m.vocab.size(), n_classes, relu);
  m.params.assign(m.shape.total, 0.0);

  Rng rng(init_seed);
  auto uniform = [&](size_t at, size_t n, double scale) {
    for (size_t i = 0; i < n; ++i)
      m.params[at + i] = (rng.real() * 2.0 - 1.0) * scale;
  };
  const size_t d = kEmbedDim;
  const double proj_scale = std::sqrt(1.0 / static_cast<double>(d));
  uniform(m.shape.embedding, static_cast<size_t>(m.shape.vocab_size) * d, 0.05);
  uniform(m.shape.w1, d * d, proj_scale);
  uniform(m.shape.w2, d * d, proj_scale);
  uniform(m.shape.head_w, static_cast<size_t>(n_classes) * d, proj_scale);
  if (kind == HeadKind::kMultiLabel)
    uniform(m.shape.count_w, static_cast<size_t>(kCountClasses) * d, proj_scale);
  return m;
}

namespace {

// y = W x + b, W is rows x dim row-major.
void affine(const double* w, const double* b, const double* x, int rows,
            int dim, double* y) {
  for (int r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* row = w + static_cast<size_t>(r) * dim;
    for (int c = 0; c < dim; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

}  // namespace

void encode(const Model& m, const std::vector<int>& ids, Activations& act) {
  if (ids.empty())
    throw std::invalid_argument("encode: empty token id list");
  const int d = kEmbedDim;
  act.pooled.assign(d, 0.0);
  for (int id : ids) {
    const double* row = m.params.data() + m.shape.embedding +
                        static_cast<size_t>(id) * d;
    for (int k = 0; k < d; ++k) act.pooled[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (int k = 0; k < d; ++k) act.pooled[k] *= inv;

  act.pre1.assign(d, 0.0);
  affine(m.params.data() + m.shape.w1, m.params.data() + m.shape.b1,
         act.pooled.data(), d, d, act.pre1.data());
  act.hidden = act.pre1;
  if (m.shape.relu)
    for (double& x : act.hidden) x = x > 0.0 ? x : 0.0;

  act.encoded.assign(d, 0.0);
  affine(m.params.data() + m.shape.w2, m.params.data() + m.shape.b2,
         act.hidden.data(), d, d, act.encoded.data());
}

Vec encode_utterance(const Model& m, const std::vector<int>& ids) {
  Activations act;
  encode(m, ids, act);
  return act.encoded;
}

Vec softmax(const Vec& logits) {
  double mx = logits[0];
  for (double x : logits) mx = std::max(mx, x);
  Vec out(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void forward_heads(const Model& m, Activations& act) {
  const int d = kEmbedDim;
  const int k = m.shape.n_classes;
  act.logits.assign(k, 0.0);
  affine(m.params.data() + m.shape.head_w, m.params.data() + m.shape.head_b,
         act.encoded.data(), k, d, act.logits.data());
  if (m.shape.kind == HeadKind::kSoftmax) {
    act.probs = softmax(act.logits);
  } else {
    act.probs.resize(k);
    for (int i = 0; i < k; ++i) act.probs[i] = sigmoid(act.logits[i]);
    act.count_logits.assign(kCountClasses, 0.0);
    affine(m.params.data() + m.shape.count_w,
           m.params.data() + m.shape.count_b, act.encoded.data(),
           kCountClasses, d, act.count_logits.data());
    act.count_probs = softmax(act.count_logits);
  }
}

double softmax_cross_entropy(const Vec& logits, int gold) {
  double mx = logits[0];
  for (double x : logits) mx = std::max(mx, x);
  double sum = 0.0;
  for (double x : logits) sum += std::exp(x - mx);
  return std::log(sum) + mx - logits[gold];
}

double binary_cross_entropy_sum(const Vec& logits, uint32_t gold_bits) {
  double loss = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double y = (gold_bits >> i) & 1u ? 1.0 : 0.0;
    loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
  }
  return loss;
}

namespace {

struct LossGrads {
  double loss = 0.0;
  Vec dlogits;
  Vec dcount;  // empty for softmax heads
};

LossGrads head_loss(const Model& m, const Activations& act,
                    const Target& target) {
  LossGrads out;
  const int k = m.shape.n_classes;
  if (m.shape.kind == HeadKind::kSoftmax) {
    if (target.label < 0 || target.label >= k)
      throw std::invalid_argument("loss: softmax label out of range");
    out.loss = softmax_cross_entropy(act.logits, target.label);
    out.dlogits = act.probs;
    out.dlogits[target.label] -= 1.0;
  } else {
    if (target.count_label < 0 || target.count_label >= kCountClasses)
      throw std::invalid_argument("loss: count label out of range");
    out.loss = binary_cross_entropy_sum(act.logits, target.intent_bits) +
               softmax_cross_entropy(act.count_logits, target.count_label);
    out.dlogits.resize(k);
    for (int i = 0; i < k; ++i) {
      const double y = (target.intent_bits >> i) & 1u ? 1.0 : 0.0;
      out.dlogits[i] = act.probs[i] - y;
    }
    out.dcount = act.count_probs;
    out.dcount[target.count_label] -= 1.0;
  }
  return out;
}

}  // namespace

double loss_and_grad(const Model& m, const std::vector<int>& ids,
                     const Target& target, Vec& grad) {
  Activations act;
  encode(m, ids, act);
  forward_heads(m, act);
  LossGrads lg = head_loss(m, act, target);

  const int d = kEmbedDim;
  const int k = m.shape.n_classes;
  Vec d_encoded(d, 0.0);

  for (int r = 0; r < k; ++r) {
    const double g = lg.dlogits[r];
    double* wrow = grad.data() + m.shape.head_w + static_cast<size_t>(r) * d;
    const double* w = m.params.data() + m.shape.head_w +
                      static_cast<size_t>(r) * d;
    for (int c = 0; c < d; ++c) {
      wrow[c] += g * act.encoded[c];
      d_encoded[c] += g * w[c];
    }
    grad[m.shape.head_b + r] += g;
  }
  if (!lg.dcount.empty()) {
    for (int r = 0; r < kCountClasses; ++r) {
      const double g = lg.dcount[r];
      double* wrow = grad.data() + m.shape.count_w + static_cast<size_t>(r) * d;
      const double* w = m.params.data() + m.shape.count_w +
                        static_cast<size_t>(r) * d;
      for (int c = 0; c < d; ++c) {
        wrow[c] += g * act.encoded[c];
        d_encoded[c] += g * w[c];
      }
      grad[m.shape.count_b + r] += g;
    }
  }

  Vec d_hidden(d, 0.0);
  for (int r = 0; r < d; ++r) {
    const double g = d_encoded[r];
    double* wrow = grad.data() + m.shape.w2 + static_cast<size_t>(r) * d;
    const double* w = m.params.data() + m.shape.w2 + static_cast<size_t>(r) * d;
    for (int c = 0; c < d; ++c) {
      wrow[c] += g * act.hidden[c];
      d_hidden[c] += g * w[c];
    }
    grad[m.shape.b2 + r] += g;
  }

  Vec d_pre1(d, 0.0);
  for (int r = 0; r < d; ++r)
    d_pre1[r] = (!m.shape.relu || act.pre1[r] > 0.0) ? d_hidden[r] : 0.0;

  Vec d_pooled(d, 0.0);
  for (int r = 0; r < d; ++r) {
    const double g = d_pre1[r];
    double* wrow = grad.data() + m.shape.w1 + static_cast<size_t>(r) * d;
    const double* w = m.params.data() + m.shape.w1 + static_cast<size_t>(r) * d;
    for (int c = 0; c < d; ++c) {
      wrow[c] += g * act.pooled[c];
      d_pooled[c] += g * w[c];
    }
    grad[m.shape.b1 + r] += g;
  }

  const double inv = 1.0 / static_cast<double>(ids.size());
  for (int id : ids) {
    double* row = grad.data() + m.shape.embedding + static_cast<size_t>(id) * d;
    for (int c = 0; c < d; ++c) row[c] += d_pooled[c] * inv;
  }

  return lg.loss;
}

double loss_only(const Model& m, const std::vector<int>& ids,
                 const Target& target) {
  Activations act;
  encode(m, ids, act);
  forward_heads(m, act);
  if (m.shape.kind == HeadKind::kSoftmax)
    return softmax_cross_entropy(act.logits, target.label);
  return binary_cross_entropy_sum(act.logits, target.intent_bits) +
         softmax_cross_entropy(act.count_logits, target.count_label);
}

void adam_step(Model& model, AdamState& state, const Vec& grad,
               const TrainConfig& cfg) {
  if (state.m.empty()) {
    state.m.assign(model.params.size(), 0.0);
    state.v.assign(model.params.size(), 0.0);
  }
  for (size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i]))
      throw std::runtime_error("adam_step: non-finite gradient at parameter " +
                               std::to_string(i));

  state.step += 1;
  state.beta1_pow *= cfg.beta1;
  state.beta2_pow *= cfg.beta2;
  const double corr1 = 1.0 / (1.0 - state.beta1_pow);
  const double corr2 = 1.0 / (1.0 - state.beta2_pow);
  for (size_t i = 0; i < model.params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] * corr1;
    const double vhat = state.v[i] * corr2;
    model.params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

TrainResult train(Model& m, const std::vector<TrainItem>& items,
                  const TrainConfig& cfg) {
  if (items.empty()) throw std::runtime_error("train: empty dataset");
  if (cfg.learning_rate <= 0 || cfg.batch_size <= 0 || cfg.epochs <= 0)
    throw std::runtime_error("train: config values must be positive");

  TrainResult result;
  AdamState state;
  Vec grad(m.params.size(), 0.0);
  std::vector<size_t> order(items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  Rng rng(cfg.seed);
  const size_t n = items.size();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (size_t start = 0; start < n; start += cfg.batch_size) {
      const size_t end = std::min(n, start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (size_t i = start; i < end; ++i) {
        const TrainItem& item = items[order[i]];
        epoch_loss += loss_and_grad(m, item.ids, item.target, grad);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (double& g : grad) g *= scale;
      adam_step(m, state, grad, cfg);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

double gradcheck(HeadKind kind, const GradcheckOptions& opt) {
  Rng rng(opt.seed);

  Vocab vocab;
  vocab.tokens = {"<pad>", "<unk>"};
  for (int i = 0; i < 38; ++i) vocab.tokens.push_back("w" + std::to_string(i));
  for (int i = 0; i < vocab.size(); ++i) vocab.index[vocab.tokens[i]] = i;

  const int n_classes = 10;
  Model m = make_model(kind, vocab, n_classes, rng.next(), opt.relu);

  double max_rel_err = 0.0;
  Vec grad(m.params.size());
  for (int ex = 0; ex < opt.examples; ++ex) {
    std::vector<int> ids;
    const int len = 3 + rng.index(6);
    for (int i = 0; i < len; ++i) ids.push_back(2 + rng.index(vocab.size() - 2));

    Target target;
    if (kind == HeadKind::kSoftmax) {
      target.label = rng.index(n_classes);
    } else {
      const int count = 1 + rng.index(3);
      target.count_label = count - 1;
      while (static_cast<int>(std::popcount(target.intent_bits)) < count)
        target.intent_bits |= 1u << rng.index(n_classes);
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    loss_and_grad(m, ids, target, grad);
    if (opt.corrupt_index >= 0)
      grad[opt.corrupt_index] += 0.5 * (std::fabs(grad[opt.corrupt_index]) + 1.0);

    for (int probe = 0; probe < opt.probes_per_example; ++probe) {
      size_t idx;
      if (opt.corrupt_index >= 0 && probe == 0) {
        idx = static_cast<size_t>(opt.corrupt_index);
      } else if (rng.chance(0.5)) {
        // Embedding row of a token the example actually uses.
        const int id = ids[rng.index(len)];
        idx = m.shape.embedding + static_cast<size_t>(id) * kEmbedDim +
              rng.index(kEmbedDim);
      } else {
        idx = m.shape.w1 + rng.below(m.shape.total - m.shape.w1);
      }

      const double saved = m.params[idx];
      m.params[idx] = saved + opt.fd_step;
      const double up = loss_only(m, ids, target);
      m.params[idx] = saved - opt.fd_step;
      const double down = loss_only(m, ids, target);
      m.params[idx] = saved;

      const double numeric = (up - down) / (2.0 * opt.fd_step);
      const double analytic = grad[idx];
      const double denom = std::max(std::fabs(analytic), std::fabs(numeric));
      // Zero analytic gradient with zero difference estimate counts as exact.
      const double rel = denom <= 1e-8 ? 0.0
                                       : std::fabs(analytic - numeric) / denom;
      max_rel_err = std::max(max_rel_err, rel);
    }
  }
  return max_rel_err;
}

// --- persistence -----------------------------------------------------------

namespace {

constexpr char kMagic[9] = "CMXMODEL";

}  // namespace

void save_model(const Model& m, const json& extra, const std::string& path) {
  json header;
  header["kind"] = m.shape.kind == HeadKind::kSoftmax ? "softmax" : "multilabel";
  header["n_classes"] = m.shape.n_classes;
  header["relu"] = m.shape.relu;
  header["vocab"] = m.vocab.tokens;
  header["config"] = {{"learning_rate", m.config.learning_rate},
                      {"batch_size", m.config.batch_size},
                      {"epochs", m.config.epochs},
                      {"beta1", m.config.beta1},
                      {"beta2", m.config.beta2},
                      {"eps", m.config.eps},
                      {"seed", m.config.seed}};
  header["params"] = m.params.size();
  header["extra"] = extra;
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out.write(kMagic, 8);
  const uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const uint64_t len = head.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(reinterpret_cast<const char*>(m.params.data()),
            static_cast<std::streamsize>(m.params.size() * sizeof(double)));
  if (!out) throw std::runtime_error("model write failed: " + path);
}

Model load_model(const std::string& path, json* extra_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("bad model file magic: " + path);
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != 1) throw std::runtime_error("unsupported model version");
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string head(len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(len));
  const json header = json::parse(head);

  Model m;
  m.vocab.tokens = header.at("vocab").get<std::vector<std::string>>();
  for (int i = 0; i < m.vocab.size(); ++i) m.vocab.index[m.vocab.tokens[i]] = i;
  const HeadKind kind = header.at("kind").get<std::string>() == "softmax"
                            ? HeadKind::kSoftmax
                            : HeadKind::kMultiLabel;
  m.shape = make_shape(kind, m.vocab.size(), header.at("n_classes").get<int>(),
                       header.at("relu").get<bool>());
  const auto& cfg = header.at("config");
  m.config.learning_rate = cfg.at("learning_rate").get<double>();
  m.config.batch_size = cfg.at("batch_size").get<int>();
  m.config.epochs = cfg.at("epochs").get<int>();
  m.config.beta1 = cfg.at("beta1").get<double>();
  m.config.beta2 = cfg.at("beta2").get<double>();
  m.config.eps = cfg.at("eps").get<double>();
  m.config.seed = cfg.at("seed").get<uint64_t>();

  const size_t n = header.at("params").get<size_t>();
  if (n != m.shape.total)
    throw std::runtime_error("model parameter count mismatch: " + path);
  m.params.resize(n);
  in.read(reinterpret_cast<char*>(m.params.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("model read failed: " + path);
  if (extra_out) *extra_out = header.at("extra");
  return m;
}

}  // namespace comix::netcore
