#include "flim/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "binary_io.hpp"
#include "flim/errors.hpp"

namespace flim {
namespace {

constexpr std::uint32_t kMlpVersion = 1;

// Per-layer activations of one example; acts[0] is the input.
template <typename T>
std::vector<std::vector<T>> forward_all(const BasicMlp<T>& m, std::span<const float> x) {
  if (static_cast<int>(x.size()) != m.sizes.front()) throw DimMismatchError("feature dimension does not match the MLP");
  std::vector<std::vector<T>> acts;
  acts.emplace_back(x.begin(), x.end());
  const std::size_t layers = m.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(m.sizes[l]);
    const auto out = static_cast<std::size_t>(m.sizes[l + 1]);
    std::vector<T> next(m.biases[l]);
    const auto& prev = acts.back();
    for (std::size_t o = 0; o < out; ++o) {
      const T* w = m.weights[l].data() + o * in;
      T s = 0;
      for (std::size_t i = 0; i < in; ++i) s += w[i] * prev[i];
      next[o] += s;
      if (l + 1 < layers) next[o] = std::max(next[o], T(0));
    }
    acts.push_back(std::move(next));
  }
  return acts;
}

}  // namespace

double TrainConfig::learning_rate_at(int epoch) const {
  const int completed = epoch - 1;
  if (completed <= lr_decay_start) return learning_rate;
  const int decays = (completed - lr_decay_start) / lr_decay_period;
  return learning_rate * std::pow(lr_decay_factor, decays);
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw ConfigError("epochs and batch_size must be positive");
  if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0)) throw ConfigError("learning rate and weight decay must be >= 0");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) throw ConfigError("lr decay factor must lie in (0, 1]");
  if (lr_decay_period < 1 || lr_decay_start < 0) throw ConfigError("lr decay schedule must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
}

template <typename T>
std::size_t BasicMlp<T>::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

template <typename T>
std::vector<T> BasicMlp<T>::forward(std::span<const float> x) const {
  return std::move(forward_all(*this, x).back());
}

template <typename T>
std::vector<T> BasicMlp<T>::last_hidden(std::span<const float> x) const {
  auto acts = forward_all(*this, x);
  return std::move(acts[acts.size() - 2]);
}

template <typename T>
int BasicMlp<T>::predict(std::span<const float> x) const {
  const auto logits = forward(x);
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin()) + 1;
}

template <typename T>
std::vector<int> BasicMlp<T>::predict(const Matrix<float>& features) const {
  std::vector<int> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) out[i] = predict(features.row(i));
  return out;
}

template <typename T>
BasicMlp<T> init_mlp(const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw ConfigError("an MLP needs at least input and output sizes");
  for (int s : sizes) {
    if (s < 1) throw ConfigError("MLP layer sizes must be positive");
  }
  BasicMlp<T> m;
  m.sizes = sizes;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<std::size_t>(sizes[l]);
    const auto out = static_cast<std::size_t>(sizes[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<T> w(in * out);
    for (auto& v : w) v = static_cast<T>(dist(rng));
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(out, T(0));
  }
  return m;
}

template <typename T>
double mlp_loss(const BasicMlp<T>& model, const Matrix<float>& features, std::span<const int> labels,
                std::span<const std::size_t> rows, double weight_decay, std::vector<std::vector<T>>* grad_w,
                std::vector<std::vector<T>>* grad_b) {
  const std::size_t layers = model.weights.size();
  if (grad_w) {
    grad_w->resize(layers);
    grad_b->resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      (*grad_w)[l].assign(model.weights[l].size(), T(0));
      (*grad_b)[l].assign(model.biases[l].size(), T(0));
    }
  }
  const double scale = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;
  for (std::size_t r : rows) {
    const auto acts = forward_all(model, features.row(r));
    const auto& logits = acts.back();
    const T peak = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (T v : logits) z += std::exp(static_cast<double>(v - peak));
    const auto target = static_cast<std::size_t>(labels[r] - 1);
    loss += -(static_cast<double>(logits[target] - peak) - std::log(z));
    if (!grad_w) continue;

    // delta = d loss / d pre-activation, starting at the softmax output
    std::vector<T> delta(logits.size());
    for (std::size_t o = 0; o < logits.size(); ++o) {
      const double p = std::exp(static_cast<double>(logits[o] - peak)) / z;
      delta[o] = static_cast<T>((p - (o == target ? 1.0 : 0.0)) * scale);
    }
    for (std::size_t l = layers; l-- > 0;) {
      const auto in = static_cast<std::size_t>(model.sizes[l]);
      const auto out = static_cast<std::size_t>(model.sizes[l + 1]);
      const auto& prev = acts[l];
      auto& gw = (*grad_w)[l];
      auto& gb = (*grad_b)[l];
      for (std::size_t o = 0; o < out; ++o) {
        gb[o] += delta[o];
        T* g = gw.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) g[i] += delta[o] * prev[i];
      }
      if (l == 0) break;
      std::vector<T> back(in, T(0));
      for (std::size_t o = 0; o < out; ++o) {
        const T* w = model.weights[l].data() + o * in;
        for (std::size_t i = 0; i < in; ++i) back[i] += w[i] * delta[o];
      }
      for (std::size_t i = 0; i < in; ++i) back[i] = prev[i] > T(0) ? back[i] : T(0);
      delta = std::move(back);
    }
  }
  loss *= scale;
  double penalty = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t k = 0; k < model.weights[l].size(); ++k) {
      const double w = model.weights[l][k];
      penalty += w * w;
      if (grad_w) (*grad_w)[l][k] += static_cast<T>(weight_decay * w);
    }
  }
  return loss + 0.5 * weight_decay * penalty;
}

MlpModel train_mlp(const Matrix<float>& features, std::span<const int> labels, const std::vector<int>& hidden,
                   const TrainConfig& config, MlpReport* report) {
  config.validate();
  if (labels.size() != features.rows()) throw DimMismatchError("labels and feature rows differ in count");
  std::set<int> classes(labels.begin(), labels.end());
  if (classes.size() < 2) throw SingleClassError("MLP training needs at least two classes");
  if (*classes.begin() < 1) throw ValidationError("MLP labels must be 1-based");

  std::vector<int> sizes{static_cast<int>(features.cols())};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(*classes.rbegin());
  auto model = init_mlp<float>(sizes, config.seed);

  std::vector<std::vector<float>> vel_w(model.weights.size()), vel_b(model.biases.size());
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    vel_w[l].assign(model.weights[l].size(), 0.0f);
    vel_b[l].assign(model.biases[l].size(), 0.0f);
  }
  std::vector<std::size_t> order(features.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed ^ 0x5bd1e995ULL);
  std::vector<std::vector<float>> gw, gb;
  const auto mu = static_cast<float>(config.momentum);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const auto lr = static_cast<float>(config.learning_rate_at(epoch));
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      const double loss = mlp_loss(model, features, labels, batch, config.weight_decay, &gw, &gb);
      if (!std::isfinite(loss)) throw DivergenceError("MLP loss became non-finite in epoch " + std::to_string(epoch));
      epoch_loss += loss;
      ++batches;
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        for (std::size_t k = 0; k < gw[l].size(); ++k) {
          vel_w[l][k] = mu * vel_w[l][k] + gw[l][k];
          model.weights[l][k] -= lr * vel_w[l][k];
        }
        for (std::size_t k = 0; k < gb[l].size(); ++k) {
          vel_b[l][k] = mu * vel_b[l][k] + gb[l][k];
          model.biases[l][k] -= lr * vel_b[l][k];
        }
      }
    }
    if (report) report->epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  return model;
}

std::vector<std::uint8_t> serialize_mlp(const MlpModel& model) {
  detail::BinaryWriter w;
  w.magic("FLIMMLP1");
  w.u32(kMlpVersion);
  w.u32(static_cast<std::uint32_t>(model.sizes.size()));
  for (int s : model.sizes) w.u32(static_cast<std::uint32_t>(s));
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    w.f32s(model.weights[l]);
    w.f32s(model.biases[l]);
  }
  return std::move(w.bytes());
}

MlpModel deserialize_mlp(std::span<const std::uint8_t> bytes) {
  detail::BinaryReader r(bytes, "MLP model");
  r.expect_magic("FLIMMLP1");
  if (const auto v = r.u32(); v != kMlpVersion) throw FormatError("unsupported MLP version " + std::to_string(v));
  MlpModel m;
  const auto n = r.u32();
  if (n < 2) throw FormatError("MLP model needs at least two layer sizes");
  for (std::uint32_t i = 0; i < n; ++i) m.sizes.push_back(static_cast<int>(r.u32()));
  for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
    const auto in = static_cast<std::size_t>(m.sizes[l]);
    const auto out = static_cast<std::size_t>(m.sizes[l + 1]);
    m.weights.push_back(r.f32s(in * out));
    m.biases.push_back(r.f32s(out));
  }
  r.expect_end();
  return m;
}

void save_mlp(const std::filesystem::path& path, const MlpModel& model) { detail::write_file(path, serialize_mlp(model)); }

MlpModel load_mlp(const std::filesystem::path& path) { return deserialize_mlp(detail::read_file(path)); }

template struct BasicMlp<float>;
template struct BasicMlp<double>;
template BasicMlp<float> init_mlp<float>(const std::vector<int>&, std::uint64_t);
template BasicMlp<double> init_mlp<double>(const std::vector<int>&, std::uint64_t);
template double mlp_loss<float>(const BasicMlp<float>&, const Matrix<float>&, std::span<const int>,
                                std::span<const std::size_t>, double, std::vector<std::vector<float>>*,
                                std::vector<std::vector<float>>*);
template double mlp_loss<double>(const BasicMlp<double>&, const Matrix<float>&, std::span<const int>,
                                 std::span<const std::size_t>, double, std::vector<std::vector<double>>*,
                                 std::vector<std::vector<double>>*);

}  // namespace flim
