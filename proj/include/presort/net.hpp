#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "presort/rng.hpp"

namespace presort {

enum class HeadKind { sigmoid, softmax };

/// Convolutional classifier geometry. Each hidden block is
/// conv(kernel, stride 1, pad) -> [batchnorm] -> ReLU -> maxpool(pool) -> [dropout],
/// followed by one dense layer and a sigmoid (binary) or softmax head.
struct NetConfig {
  int input_height = 128;
  int input_width = 88;
  std::vector<int> channels{16, 32, 64, 128, 128};
  int kernel = 3;
  int stride = 1;
  int pad = 2;
  int pool = 2;
  double dropout = 0.2;
  bool use_batchnorm = true;
  bool use_dropout = true;
  HeadKind head = HeadKind::softmax;
  int num_classes = 5;

  int n_hidden_blocks() const { return static_cast<int>(channels.size()); }
  /// 1 for the sigmoid head, num_classes for softmax.
  int outputs() const { return head == HeadKind::sigmoid ? 1 : num_classes; }

  struct Shape {
    int channels, height, width;
    friend bool operator==(const Shape&, const Shape&) = default;
  };
  /// Output shape of every block (after pooling).
  std::vector<Shape> block_shapes() const;
  int flatten_size() const;

  void validate() const;
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Binary stage: same body, sigmoid head, no batchnorm, no dropout.
NetConfig binary_variant(NetConfig cfg);
/// Multi-class stage: softmax over `num_classes`, batchnorm and dropout on.
NetConfig multiclass_variant(NetConfig cfg, int num_classes);

/// Named tensor. Running batchnorm statistics are stored as non-trainable tensors.
template <typename T>
struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty for non-trainable tensors
  bool trainable = true;

  std::size_t numel() const { return value.size(); }
};

enum class Mode { train, eval };

template <typename T>
class Network {
 public:
  Network(NetConfig cfg, std::uint64_t init_seed);

  const NetConfig& config() const { return cfg_; }

  /// `input` is [batch x input_height x input_width] (one channel). Returns
  /// probabilities, [batch] for the sigmoid head, [batch x K] for softmax.
  /// Train mode uses batch statistics and draws dropout masks from `rng`.
  std::vector<T> forward(std::span<const T> input, std::size_t batch, Mode mode, Rng* rng = nullptr);

  /// Logits of the last forward call, same layout as its output.
  const std::vector<T>& logits() const { return logits_; }

  /// Accumulates parameter gradients given dLoss/dlogits of the last train-mode forward.
  void backward(std::span<const T> grad_logits);

  void zero_grad();

  std::vector<Parameter<T>>& tensors() { return tensors_; }
  const std::vector<Parameter<T>>& tensors() const { return tensors_; }
  Parameter<T>& tensor(const std::string& name);
  const Parameter<T>& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;

  /// Swaps in a freshly initialized dense head; every other tensor is untouched.
  void replace_head(HeadKind head, int num_classes, std::uint64_t init_seed);

  /// Copies every tensor of `src` whose name and shape also exist here, except
  /// the head. Returns the names copied.
  std::vector<std::string> copy_body_from(const Network& src);

  /// Inference snapshot support: replace all tensor values by those of `other`.
  void assign_values(const Network& other);

 private:
  struct BlockIndex {
    int conv_w = -1, conv_b = -1, bn_gamma = -1, bn_beta = -1, bn_mean = -1, bn_var = -1;
  };
  struct BlockCache {
    int in_c = 0, in_h = 0, in_w = 0;  // block input dims
    int conv_h = 0, conv_w = 0;        // conv output dims
    int out_h = 0, out_w = 0;          // pooled dims
    std::vector<T> padded;             // [B, in_c, in_h + 2p, in_w + 2p]
    std::vector<T> xhat;               // normalized conv output (batchnorm)
    std::vector<T> inv_std;            // per channel
    std::vector<T> activ;              // post-ReLU, [B, C, conv_h, conv_w]
    std::vector<std::uint32_t> argmax; // pooled -> index into activ plane
    std::vector<T> drop_mask;          // scale per pooled element, empty if no dropout
  };

  int add_tensor(std::string name, std::vector<int> shape, bool trainable);
  void init_head(std::uint64_t seed);

  NetConfig cfg_;
  std::vector<Parameter<T>> tensors_;
  std::vector<BlockIndex> blocks_;
  int head_w_ = -1, head_b_ = -1;

  std::size_t batch_ = 0;
  bool cached_train_ = false;
  std::vector<BlockCache> cache_;
  std::vector<T> features_;  // flattened head input
  std::vector<T> logits_;
};

template <typename T>
struct LossGrad {
  double value = 0.0;
  std::vector<T> grad;
};

inline constexpr double kProbClamp = 1e-7;

/// Mean of -[y log p + (1 - y) log(1 - p)], p clamped to [1e-7, 1 - 1e-7].
/// Gradient is with respect to p.
template <typename T>
LossGrad<T> bce_loss(std::span<const T> p, std::span<const T> y);

/// Mean of -(1 - q_y)^gamma log q_y over rows of q ([batch x K]); alpha = 1.
/// Gradient is with respect to q.
template <typename T>
LossGrad<T> focal_loss(std::span<const T> q, std::size_t num_classes, std::span<const int> y, double gamma);

/// Same losses with the gradient taken with respect to the logits that produced
/// p (sigmoid) or q (softmax). These stay informative when the probability
/// saturates.
template <typename T>
LossGrad<T> bce_loss_logits(std::span<const T> p, std::span<const T> y);
template <typename T>
LossGrad<T> focal_loss_logits(std::span<const T> q, std::size_t num_classes, std::span<const int> y, double gamma);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// One update of every trainable tensor. Throws naming the tensor on a NaN gradient.
  void step(std::vector<Parameter<T>>& tensors);

  double learning_rate() const { return cfg_.learning_rate; }
  void set_learning_rate(double lr);
  std::int64_t steps() const { return step_; }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// base_lr * decay^floor(epoch / step_epochs).
double lr_schedule(int epoch, double base_lr, int step_epochs = 100, double decay = 0.05);

extern template class Network<float>;
extern template class Network<double>;
extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace presort
