#include "neuroconn/checkpoint.hpp"

#include <stdexcept>

#include "neuroconn/io.hpp"

namespace neuroconn::nn {

namespace fs = std::filesystem;

nlohmann::json spec_to_json(const DecoderSpec& spec) {
  return {{"architecture", architecture_name(spec.architecture)},
          {"n_classes", spec.n_classes},
          {"input_layout",
           {{"n_bands", spec.input.n_bands},
            {"n_channels", spec.input.n_channels},
            {"n_cols", spec.input.n_cols}}},
          {"hidden_dim", spec.hidden_dim},
          {"dropout_p", spec.dropout_p},
          {"task", task_name(spec.task)}};
}

DecoderSpec spec_from_json(const nlohmann::json& j) {
  DecoderSpec s;
  s.architecture = parse_architecture(j.at("architecture").get<std::string>());
  s.n_classes = j.at("n_classes").get<int>();
  const auto& l = j.at("input_layout");
  s.input = {l.at("n_bands").get<std::size_t>(), l.at("n_channels").get<std::size_t>(),
             l.at("n_cols").get<std::size_t>()};
  s.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  s.dropout_p = j.at("dropout_p").get<double>();
  s.task = parse_task(j.at("task").get<std::string>());
  return s;
}

void save_checkpoint(Model& model, const fs::path& stem, const nlohmann::json& extra) {
  std::vector<double> flat;
  nlohmann::json entries = nlohmann::json::array();
  auto add = [&](const std::string& name, const Tensor& t, bool trainable) {
    entries.push_back({{"name", name},
                       {"offset", flat.size()},
                       {"shape", t.shape()},
                       {"trainable", trainable}});
    flat.insert(flat.end(), t.values().begin(), t.values().end());
  };
  for (auto* p : model.parameters()) add(p->name, p->value, true);
  for (auto& [name, t] : model.buffers()) add(name, *t, false);

  io::write_f32(stem.string() + ".f32", std::span<const double>(flat));
  nlohmann::json manifest = extra;
  manifest["spec"] = spec_to_json(model.spec());
  manifest["architecture"] = architecture_name(model.spec().architecture);
  manifest["seed"] = model.seed();
  manifest["parameters"] = entries;
  manifest["n_values"] = flat.size();
  io::write_json(stem.string() + ".json", manifest);
}

LoadedCheckpoint load_checkpoint(const fs::path& stem) {
  LoadedCheckpoint out;
  out.manifest = io::read_json(stem.string() + ".json");
  const auto flat = io::read_f32(stem.string() + ".f32");
  try {
    const DecoderSpec spec = spec_from_json(out.manifest.at("spec"));
    out.model = build_model(spec, out.manifest.at("seed").get<std::uint64_t>());
    std::vector<Tensor> state;
    for (const auto& e : out.manifest.at("parameters")) {
      const auto offset = e.at("offset").get<std::size_t>();
      const auto shape = e.at("shape").get<Shape>();
      const std::size_t n = shape_size(shape);
      if (offset + n > flat.size()) {
        throw std::runtime_error("entry " + e.at("name").get<std::string>() + " overruns the value file");
      }
      state.emplace_back(shape, std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                                                    flat.begin() + static_cast<std::ptrdiff_t>(offset + n)));
    }
    out.model->load_state(state);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(stem.string() + ".json: " + e.what());
  }
  return out;
}

}  // namespace neuroconn::nn
