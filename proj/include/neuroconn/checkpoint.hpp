#pragma once

#include <filesystem>
#include <memory>

#include <json.hpp>

#include "neuroconn/models.hpp"

namespace neuroconn::nn {

nlohmann::json spec_to_json(const DecoderSpec& spec);
DecoderSpec spec_from_json(const nlohmann::json& j);

// `<stem>.f32` holds every parameter and buffer as float32, concatenated;
// `<stem>.json` maps names to {offset, shape} and records the spec and seed.
void save_checkpoint(Model& model, const std::filesystem::path& stem,
                     const nlohmann::json& extra = nlohmann::json::object());

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  nlohmann::json manifest;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& stem);

}  // namespace neuroconn::nn
