#include "arcnp/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace arcnp::nn {
namespace {

using nlohmann::json;

void append_tensors(json& tensors, const Mlp& mlp, const Vector& params,
                    const std::string& prefix) {
  for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
    const auto& layer = mlp.layers()[l];
    const Eigen::Map<const Matrix> w(params.data() + layer.weight_offset,
                                     layer.out, layer.in);
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(layer.in * layer.out));
    for (Eigen::Index r = 0; r < layer.out; ++r) {
      for (Eigen::Index c = 0; c < layer.in; ++c) data.push_back(w(r, c));
    }
    const std::string name = prefix + "." + std::to_string(l);
    tensors.push_back({{"name", name + ".weight"},
                       {"shape", {layer.out, layer.in}},
                       {"data", data}});
    std::vector<double> bias(params.data() + layer.bias_offset,
                             params.data() + layer.bias_offset + layer.out);
    tensors.push_back(
        {{"name", name + ".bias"}, {"shape", {layer.out}}, {"data", bias}});
  }
}

void read_tensors(const json& tensors, std::size_t& cursor, const Mlp& mlp,
                  Vector& params, const std::string& prefix) {
  for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
    const auto& layer = mlp.layers()[l];
    const std::string name = prefix + "." + std::to_string(l);
    if (cursor + 1 >= tensors.size()) {
      throw std::runtime_error("checkpoint: missing tensor " + name);
    }
    const json& wt = tensors.at(cursor++);
    const json& bt = tensors.at(cursor++);
    if (wt.at("name") != name + ".weight" || bt.at("name") != name + ".bias") {
      throw std::runtime_error("checkpoint: unexpected tensor order at " + name);
    }
    const auto shape = wt.at("shape").get<std::vector<Eigen::Index>>();
    const auto data = wt.at("data").get<std::vector<double>>();
    const auto bias = bt.at("data").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] != layer.out || shape[1] != layer.in ||
        data.size() != static_cast<std::size_t>(layer.out * layer.in) ||
        bias.size() != static_cast<std::size_t>(layer.out)) {
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    }
    Eigen::Map<Matrix> w(params.data() + layer.weight_offset, layer.out,
                         layer.in);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < layer.out; ++r) {
      for (Eigen::Index c = 0; c < layer.in; ++c) w(r, c) = data[k++];
    }
    for (Eigen::Index i = 0; i < layer.out; ++i) {
      params[layer.bias_offset + i] = bias[static_cast<std::size_t>(i)];
    }
  }
}

}  // namespace

json checkpoint_to_json(const Checkpoint& checkpoint) {
  const CnpModel& model = checkpoint.model;
  const CnpConfig& c = model.config();
  json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["config"] = {{"encoding_dim", c.encoding_dim},
                   {"encoder_hidden", c.encoder_hidden},
                   {"decoder_hidden", c.decoder_hidden},
                   {"num_channels", c.num_channels},
                   {"variance_floor", c.variance_floor},
                   {"activation", "relu"},
                   {"init", "uniform-fan-in"}};
  json tensors = json::array();
  append_tensors(tensors, model.encoder(), model.parameters(), "encoder");
  append_tensors(tensors, model.decoder(), model.parameters(), "decoder");
  doc["tensors"] = std::move(tensors);
  const auto& m = checkpoint.metadata;
  doc["metadata"] = {{"epochs_trained", m.epochs_trained},
                     {"best_epoch", m.best_epoch},
                     {"validation_lcb", m.validation_lcb},
                     {"seed", m.seed},
                     {"max_training_context", m.max_training_context},
                     {"process", m.process}};
  return doc;
}

Checkpoint checkpoint_from_json(const json& doc) {
  if (!doc.contains("format") || doc.at("format") != kCheckpointFormat) {
    throw std::runtime_error("checkpoint: unrecognized format tag");
  }
  const int version = doc.at("version").get<int>();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version));
  }
  const json& jc = doc.at("config");
  if (jc.value("activation", "relu") != "relu" ||
      jc.value("init", "uniform-fan-in") != "uniform-fan-in") {
    throw std::runtime_error("checkpoint: unsupported activation or init");
  }
  CnpConfig config;
  config.encoding_dim = jc.at("encoding_dim").get<int>();
  config.encoder_hidden = jc.at("encoder_hidden").get<std::vector<int>>();
  config.decoder_hidden = jc.at("decoder_hidden").get<std::vector<int>>();
  config.num_channels = jc.at("num_channels").get<int>();
  config.variance_floor = jc.at("variance_floor").get<double>();

  Checkpoint out;
  out.model = CnpModel(config);
  const json& tensors = doc.at("tensors");
  std::size_t cursor = 0;
  read_tensors(tensors, cursor, out.model.encoder(), out.model.parameters(),
               "encoder");
  read_tensors(tensors, cursor, out.model.decoder(), out.model.parameters(),
               "decoder");
  if (cursor != tensors.size()) {
    throw std::runtime_error("checkpoint: unexpected extra tensors");
  }
  if (doc.contains("metadata")) {
    const json& jm = doc.at("metadata");
    out.metadata.epochs_trained = jm.value("epochs_trained", 0);
    out.metadata.best_epoch = jm.value("best_epoch", -1);
    out.metadata.validation_lcb = jm.value("validation_lcb", 0.0);
    out.metadata.seed = jm.value("seed", std::uint64_t{0});
    out.metadata.max_training_context = jm.value("max_training_context", 0);
    out.metadata.process = jm.value("process", std::string{});
  }
  return out;
}

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << checkpoint_to_json(checkpoint).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace arcnp::nn
