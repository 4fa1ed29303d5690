#pragma once

// Compact convolutional decoders over [N, n_bands, n_channels, n_cols] inputs.
//
// Connectivity features arrive as one n_channels x n_channels plane per band;
// band-power features as one n_channels x n_windows plane per band.

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "neuroconn/layers.hpp"
#include "neuroconn/tensor.hpp"

namespace neuroconn::nn {

enum class Architecture { eegnet_like, shallow_like, fbcnet_like };
enum class Task { classification, regression };

std::string_view architecture_name(Architecture a);
Architecture parse_architecture(std::string_view name);
std::string_view task_name(Task t);
Task parse_task(std::string_view name);

struct InputLayout {
  std::size_t n_bands = 1;
  std::size_t n_channels = 1;
  std::size_t n_cols = 1;
};

struct DecoderSpec {
  Architecture architecture = Architecture::fbcnet_like;
  int n_classes = 2;
  InputLayout input;
  std::size_t hidden_dim = 64;
  double dropout_p = 0.5;
  Task task = Task::classification;

  void validate() const;
  std::size_t output_dim() const {
    return task == Task::classification ? static_cast<std::size_t>(n_classes) : 1;
  }
};

class Model {
 public:
  Model(DecoderSpec spec, std::uint64_t seed);

  const DecoderSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  // Logits [N, n_classes] (or [N, 1] for regression).
  Tensor forward(const Tensor& x, bool training);
  // Backpropagates d(loss)/d(output), accumulating parameter gradients.
  Tensor backward(const Tensor& grad_out);

  std::vector<Parameter*> parameters();
  std::vector<std::pair<std::string, Tensor*>> buffers();
  void zero_grad();
  std::size_t parameter_count();

  // Parameter values followed by buffers, in a fixed order.
  std::vector<Tensor> state();
  void load_state(const std::vector<Tensor>& s);

  void freeze_dropout_masks(bool frozen);
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

 private:
  void add(std::unique_ptr<Layer> layer);
  void build_eegnet(std::mt19937_64& rng);
  void build_shallow(std::mt19937_64& rng);
  void build_fbcnet(std::mt19937_64& rng);
  void add_dropout();
  void add_head(std::mt19937_64& rng);

  DecoderSpec spec_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Layer>> layers_;
  Shape shape_;  // running output shape during construction (batch dim 1)
  std::size_t dropout_count_ = 0;
};

std::unique_ptr<Model> build_model(const DecoderSpec& spec, std::uint64_t seed);

}  // namespace neuroconn::nn
