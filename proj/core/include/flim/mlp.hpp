#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flim/matrix.hpp"

namespace flim {

/// Mini-batch SGD settings. The learning rate is multiplied by
/// `lr_decay_factor` once per `lr_decay_period` epochs completed after
/// epoch `lr_decay_start`.
struct TrainConfig {
  int epochs = 40;
  int batch_size = 64;
  double learning_rate = 1e-4;
  double weight_decay = 1e-3;
  double lr_decay_factor = 0.1;
  int lr_decay_start = 30;
  int lr_decay_period = 5;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  /// Learning rate used during 1-based epoch `epoch`.
  double learning_rate_at(int epoch) const;
  /// Throws ConfigError on non-positive sizes or a factor outside (0, 1].
  void validate() const;
};

/// Fully connected network with ReLU hidden layers and a softmax output over
/// classes 1..c (output index = label - 1).
template <typename T>
struct BasicMlp {
  /// input, hidden..., classes
  std::vector<int> sizes;
  /// weights[l] is sizes[l+1] x sizes[l], row-major
  std::vector<std::vector<T>> weights;
  std::vector<std::vector<T>> biases;

  int classes() const { return sizes.empty() ? 0 : sizes.back(); }
  std::size_t parameter_count() const;

  /// Logits for one example.
  std::vector<T> forward(std::span<const float> x) const;
  /// Activations of the last hidden layer (the input when there is none).
  std::vector<T> last_hidden(std::span<const float> x) const;
  int predict(std::span<const float> x) const;
  std::vector<int> predict(const Matrix<float>& features) const;

  friend bool operator==(const BasicMlp&, const BasicMlp&) = default;
};

using MlpModel = BasicMlp<float>;

/// He-style uniform initialization: U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
template <typename T>
BasicMlp<T> init_mlp(const std::vector<int>& sizes, std::uint64_t seed);

/// Mean softmax cross-entropy over `rows` plus weight_decay/2 * sum of
/// squared weights (biases excluded). Fills `grad_w`/`grad_b` (same shapes as
/// the model) with the exact gradient when they are non-null.
template <typename T>
double mlp_loss(const BasicMlp<T>& model, const Matrix<float>& features, std::span<const int> labels,
                std::span<const std::size_t> rows, double weight_decay,
                std::vector<std::vector<T>>* grad_w = nullptr, std::vector<std::vector<T>>* grad_b = nullptr);

struct MlpReport {
  std::vector<double> epoch_loss;
};

/// Trains a network of sizes (dim, hidden..., max label) by mini-batch SGD
/// with momentum on softmax cross-entropy. Labels are 1..c. Throws
/// SingleClassError when fewer than two classes are present and
/// DivergenceError when the loss becomes non-finite.
MlpModel train_mlp(const Matrix<float>& features, std::span<const int> labels, const std::vector<int>& hidden,
                   const TrainConfig& config = {}, MlpReport* report = nullptr);

/// Magic "FLIMMLP1": u32 version, u32 layer count, u32 sizes, then f32
/// weights and biases per layer.
std::vector<std::uint8_t> serialize_mlp(const MlpModel& model);
MlpModel deserialize_mlp(std::span<const std::uint8_t> bytes);
void save_mlp(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_mlp(const std::filesystem::path& path);

}  // namespace flim
