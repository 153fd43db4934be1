#include "motionlm/model/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "motionlm/core/types.hpp"
#include "motionlm/numeric/digest.hpp"

namespace motionlm {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "motionlm-checkpoint";

json payload(const Checkpoint& ck) {
  json params = json::array();
  for (const auto& p : ck.parameters) {
    json values = json::array();
    for (float x : p.tensor.data()) values.push_back(x);
    params.push_back(
        {{"name", p.name}, {"shape", p.tensor.shape()}, {"decay", p.decay}, {"values", values}});
  }
  json doc = {{"format", kFormat},
              {"version", kCheckpointVersion},
              {"config", to_json(ck.config)},
              {"parameters", params},
              {"metadata", ck.metadata}};
  if (ck.optimizer) {
    doc["optimizer"] = {{"step", ck.optimizer->step},
                        {"first_moment", ck.optimizer->first_moment},
                        {"second_moment", ck.optimizer->second_moment}};
  }
  return doc;
}

}  // namespace

Checkpoint make_checkpoint(const MotionLM& model, const numeric::AdamWState* optimizer,
                           json metadata) {
  Checkpoint ck;
  ck.config = model.config();
  for (const auto& p : model.parameters()) {
    std::vector<float> values(p.tensor.data().begin(), p.tensor.data().end());
    ck.parameters.push_back({p.name, numeric::Tensor::from(p.tensor.shape(), std::move(values)),
                             p.decay});
  }
  if (optimizer) ck.optimizer = *optimizer;
  ck.metadata = std::move(metadata);
  ck.digest = digest_hex(payload(ck).dump());
  return ck;
}

json checkpoint_to_json(const Checkpoint& checkpoint) {
  json doc = payload(checkpoint);
  doc["digest"] = digest_hex(doc.dump());
  return doc;
}

Checkpoint checkpoint_from_json(const json& document) {
  try {
    if (document.value("format", std::string()) != kFormat)
      throw SchemaError("not a checkpoint document");
    if (document.at("version").get<int>() != kCheckpointVersion)
      throw SchemaError("unsupported checkpoint version " + document.at("version").dump());
    json body = document;
    const std::string stored = body.at("digest").get<std::string>();
    body.erase("digest");
    const std::string actual = digest_hex(body.dump());
    if (stored != actual)
      throw SchemaError("checkpoint digest mismatch: stored " + stored + ", computed " + actual);
    Checkpoint ck;
    ck.config = model_config_from_json(document.at("config"));
    for (const auto& p : document.at("parameters")) {
      auto shape = p.at("shape").get<numeric::Shape>();
      auto values = p.at("values").get<std::vector<float>>();
      if (values.size() != numeric::shape_size(shape))
        throw SchemaError("parameter " + p.at("name").get<std::string>() + " has " +
                          std::to_string(values.size()) + " values for shape " +
                          numeric::shape_string(shape));
      ck.parameters.push_back({p.at("name").get<std::string>(),
                               numeric::Tensor::from(std::move(shape), std::move(values)),
                               p.at("decay").get<bool>()});
    }
    if (document.contains("optimizer")) {
      numeric::AdamWState st;
      const auto& o = document.at("optimizer");
      st.step = o.at("step").get<std::int64_t>();
      st.first_moment = o.at("first_moment").get<std::vector<std::vector<double>>>();
      st.second_moment = o.at("second_moment").get<std::vector<std::vector<double>>>();
      ck.optimizer = std::move(st);
    }
    ck.metadata = document.value("metadata", json::object());
    ck.digest = stored;
    return ck;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
}

std::string save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const json doc = checkpoint_to_json(checkpoint);
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << doc.dump() << '\n';
  return doc.at("digest").get<std::string>();
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("checkpoint not found: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw SchemaError("checkpoint " + path + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(doc);
}

MotionLM restore_model(const Checkpoint& checkpoint) {
  MotionLM model(checkpoint.config);
  auto& params = model.parameters();
  if (params.size() != checkpoint.parameters.size())
    throw SchemaError("checkpoint has " + std::to_string(checkpoint.parameters.size()) +
                      " tensors, model expects " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& src = checkpoint.parameters[i];
    if (src.name != params[i].name || src.tensor.shape() != params[i].tensor.shape())
      throw SchemaError("checkpoint tensor " + src.name + " " +
                        numeric::shape_string(src.tensor.shape()) + " does not match " +
                        params[i].name + " " + numeric::shape_string(params[i].tensor.shape()));
    auto dst = params[i].tensor.mutable_data();
    std::copy(src.tensor.data().begin(), src.tensor.data().end(), dst.begin());
  }
  return model;
}

}  // namespace motionlm
