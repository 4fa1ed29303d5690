#include "neuroconn/models.hpp"

#include <stdexcept>
#include <string>

namespace neuroconn::nn {

namespace {

constexpr std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::string_view architecture_name(Architecture a) {
  switch (a) {
    case Architecture::eegnet_like: return "eegnet_like";
    case Architecture::shallow_like: return "shallow_like";
    case Architecture::fbcnet_like: return "fbcnet_like";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "eegnet_like" || name == "eegnet") return Architecture::eegnet_like;
  if (name == "shallow_like" || name == "shallow") return Architecture::shallow_like;
  if (name == "fbcnet_like" || name == "fbcnet") return Architecture::fbcnet_like;
  throw std::invalid_argument("unknown architecture '" + std::string(name) +
                              "' (expected eegnet_like, shallow_like or fbcnet_like)");
}

std::string_view task_name(Task t) { return t == Task::classification ? "classification" : "regression"; }

Task parse_task(std::string_view name) {
  if (name == "classification") return Task::classification;
  if (name == "regression") return Task::regression;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

void DecoderSpec::validate() const {
  if (task == Task::classification && n_classes < 2) {
    throw std::invalid_argument("classification needs at least 2 classes");
  }
  if (hidden_dim < 1) throw std::invalid_argument("hidden_dim must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
  if (input.n_bands == 0 || input.n_channels == 0 || input.n_cols == 0) {
    throw std::invalid_argument("input layout dimensions must be positive");
  }
}

Model::Model(DecoderSpec spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
  spec_.validate();
  std::mt19937_64 rng(seed);
  shape_ = {1, spec_.input.n_bands, spec_.input.n_channels, spec_.input.n_cols};
  try {
    switch (spec_.architecture) {
      case Architecture::eegnet_like: build_eegnet(rng); break;
      case Architecture::shallow_like: build_shallow(rng); break;
      case Architecture::fbcnet_like: build_fbcnet(rng); break;
    }
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(architecture_name(spec_.architecture)) +
                                ": input layout " + shape_string(shape_) +
                                " incompatible with kernel sizes: " + e.what());
  }
}

void Model::add(std::unique_ptr<Layer> layer) {
  shape_ = layer->output_shape(shape_);
  layers_.push_back(std::move(layer));
}

void Model::add_dropout() {
  add(std::make_unique<Dropout>(spec_.dropout_p, splitmix64(seed_ + ++dropout_count_)));
}

void Model::add_head(std::mt19937_64& rng) {
  add(std::make_unique<Flatten>());
  add(std::make_unique<Dense>("head", shape_[1], spec_.output_dim(), rng));
}

// Temporal conv -> BN -> depthwise spatial conv -> ELU -> pool -> dropout ->
// separable conv -> ELU -> pool -> dropout -> dense.
void Model::build_eegnet(std::mt19937_64& rng) {
  const std::size_t f1 = std::max<std::size_t>(1, spec_.hidden_dim / 4);
  const std::size_t depth = 2;
  const std::size_t f2 = std::max<std::size_t>(1, spec_.hidden_dim / 2);
  const std::size_t w = spec_.input.n_cols;

  Conv2dGeometry temporal;
  temporal.kernel_w = ceil_div(w, 2);
  temporal.pad_w = (temporal.kernel_w - 1) / 2;
  add(std::make_unique<Conv2d>("temporal", spec_.input.n_bands, f1, temporal, false, rng));
  add(std::make_unique<BatchNorm2d>("bn1", f1));

  Conv2dGeometry spatial;
  spatial.kernel_h = spec_.input.n_channels;
  spatial.groups = f1;
  add(std::make_unique<Conv2d>("spatial", f1, f1 * depth, spatial, false, rng));
  add(std::make_unique<Elu>());
  add(std::make_unique<AvgPool2d>(1, 2, 1, 2));
  add_dropout();

  Conv2dGeometry sep;
  sep.kernel_w = ceil_div(w, 8);
  sep.pad_w = (sep.kernel_w - 1) / 2;
  sep.groups = f1 * depth;
  add(std::make_unique<Conv2d>("separable_depthwise", f1 * depth, f1 * depth, sep, false, rng));
  add(std::make_unique<Conv2d>("separable_pointwise", f1 * depth, f2, Conv2dGeometry{}, false, rng));
  add(std::make_unique<Elu>());
  add(std::make_unique<AvgPool2d>(1, 2, 1, 2));
  add_dropout();
  add_head(rng);
}

// Temporal conv -> spatial conv -> square -> pool -> log -> dropout -> dense.
void Model::build_shallow(std::mt19937_64& rng) {
  const std::size_t filters = std::max<std::size_t>(1, spec_.hidden_dim / 2);
  const std::size_t w = spec_.input.n_cols;

  Conv2dGeometry temporal;
  temporal.kernel_w = ceil_div(w, 4);
  add(std::make_unique<Conv2d>("temporal", spec_.input.n_bands, filters, temporal, true, rng));

  Conv2dGeometry spatial;
  spatial.kernel_h = spec_.input.n_channels;
  add(std::make_unique<Conv2d>("spatial", filters, filters, spatial, false, rng));
  add(std::make_unique<Square>());
  const std::size_t pool = ceil_div(w, 8);
  add(std::make_unique<AvgPool2d>(1, pool, 1, std::max<std::size_t>(1, pool / 2)));
  add(std::make_unique<SafeLog>(1e-6));
  add_dropout();
  add_head(rng);
}

// Per-band depthwise spatial conv (8 maps per band) -> BN -> variance over
// columns -> log -> dropout -> dense.
void Model::build_fbcnet(std::mt19937_64& rng) {
  const std::size_t maps = 8;
  const std::size_t bands = spec_.input.n_bands;
  Conv2dGeometry spatial;
  spatial.kernel_h = spec_.input.n_channels;
  spatial.groups = bands;
  add(std::make_unique<Conv2d>("spatial", bands, bands * maps, spatial, false, rng));
  add(std::make_unique<BatchNorm2d>("bn1", bands * maps));
  add(std::make_unique<ColumnVariance>());
  add(std::make_unique<SafeLog>(1e-6));
  add_dropout();
  add_head(rng);
}

Tensor Model::forward(const Tensor& x, bool training) {
  if (x.rank() != 4 || x.dim(1) != spec_.input.n_bands || x.dim(2) != spec_.input.n_channels ||
      x.dim(3) != spec_.input.n_cols) {
    throw std::invalid_argument("model expects input [N," + std::to_string(spec_.input.n_bands) +
                                "," + std::to_string(spec_.input.n_channels) + "," +
                                std::to_string(spec_.input.n_cols) + "], got " +
                                shape_string(x.shape()));
  }
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h, training);
  return h;
}

Tensor Model::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    for (auto* p : l->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor*>> Model::buffers() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto& l : layers_) {
    for (auto& b : l->buffers()) out.push_back(b);
  }
  return out;
}

void Model::zero_grad() {
  for (auto* p : parameters()) p->grad.fill(0.0);
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->value.size();
  return n;
}

std::vector<Tensor> Model::state() {
  std::vector<Tensor> s;
  for (auto* p : parameters()) s.push_back(p->value);
  for (auto& [name, t] : buffers()) s.push_back(*t);
  return s;
}

void Model::load_state(const std::vector<Tensor>& s) {
  auto params = parameters();
  auto bufs = buffers();
  if (s.size() != params.size() + bufs.size()) throw std::invalid_argument("state size mismatch");
  std::size_t i = 0;
  for (auto* p : params) {
    if (s[i].shape() != p->value.shape()) throw std::invalid_argument("state shape mismatch for " + p->name);
    p->value = s[i++];
  }
  for (auto& [name, t] : bufs) {
    if (s[i].shape() != t->shape()) throw std::invalid_argument("state shape mismatch for " + name);
    *t = s[i++];
  }
}

void Model::freeze_dropout_masks(bool frozen) {
  for (auto& l : layers_) {
    if (auto* d = dynamic_cast<Dropout*>(l.get())) d->freeze_mask(frozen);
  }
}

std::unique_ptr<Model> build_model(const DecoderSpec& spec, std::uint64_t seed) {
  return std::make_unique<Model>(spec, seed);
}

}  // namespace neuroconn::nn
