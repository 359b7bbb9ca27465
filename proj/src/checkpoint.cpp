#include "axregion/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace axregion {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'A', 'X', 'R', 'G', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw CheckpointError("checkpoint truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<T>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  pos += sizeof(T);
  return value;
}

void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

ordered_json metadata_json(const ModelMetadata& m) {
  ordered_json j;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["init"] = m.init;
  j["feature_scaling"] = m.feature_scaling;
  j["loss_reduction"] = m.loss_reduction;
  j["train_config"] = m.train_config ? ordered_json(m.train_config->to_text()) : ordered_json(nullptr);
  j["epochs_run"] = m.epochs_run;
  j["best_epoch"] = m.best_epoch;
  // Stored as raw bits so the round trip is exact.
  j["best_val_edge_f1_bits"] = std::bit_cast<std::uint64_t>(m.best_val_edge_f1);
  return j;
}

ModelMetadata metadata_from_json(const ordered_json& j) {
  ModelMetadata m;
  m.version = j.at("version").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.init = j.at("init").get<std::string>();
  m.feature_scaling = j.at("feature_scaling").get<std::string>();
  m.loss_reduction = j.at("loss_reduction").get<std::string>();
  if (!j.at("train_config").is_null())
    m.train_config = TrainConfig::parse(j.at("train_config").get<std::string>());
  m.epochs_run = j.at("epochs_run").get<int>();
  m.best_epoch = j.at("best_epoch").get<int>();
  m.best_val_edge_f1 = std::bit_cast<double>(j.at("best_val_edge_f1_bits").get<std::uint64_t>());
  return m;
}

}  // namespace

std::string serialize_checkpoint(const DecompositionModel& model, const RoleVocabulary& vocab) {
  model.validate(vocab);
  ordered_json header;
  header["format"] = "axregion-checkpoint";
  header["vocabulary_hash"] = vocab.hash();
  header["vocabulary_size"] = vocab.size();
  header["tau_bits"] = std::bit_cast<std::uint64_t>(model.tau());
  header["tau"] = model.tau();
  header["metadata"] = metadata_json(model.metadata());
  ordered_json table = ordered_json::array();
  std::string payload;
  model.for_each_tensor([&](std::string_view name, std::size_t rows, std::size_t cols,
                            std::span<const double> data) {
    table.push_back({{"name", std::string(name)}, {"rows", rows}, {"cols", cols}});
    for (double v : data) put_f64(payload, v);
  });
  header["tensors"] = std::move(table);
  const std::string text = header.dump(2);

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out += payload;
  return out;
}

DecompositionModel deserialize_checkpoint(std::string_view bytes, const RoleVocabulary& vocab) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("not a checkpoint file (bad magic)");
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = get_le<std::uint64_t>(bytes, pos);
  if (header_len > bytes.size() - pos) throw CheckpointError("checkpoint header truncated");
  ordered_json header;
  try {
    header = ordered_json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }
  pos += header_len;

  DecompositionModel model;
  try {
    if (header.at("vocabulary_size").get<std::size_t>() != vocab.size() ||
        header.at("vocabulary_hash").get<std::uint64_t>() != vocab.hash())
      throw ShapeMismatch("checkpoint was trained with a different role vocabulary");
    model.set_tau(std::bit_cast<double>(header.at("tau_bits").get<std::uint64_t>()));
    model.metadata() = metadata_from_json(header.at("metadata"));

    const auto& table = header.at("tensors");
    std::size_t k = 0;
    model.for_each_tensor([&](std::string_view name, std::size_t rows, std::size_t cols,
                              std::span<double> data) {
      if (k >= table.size()) throw ShapeMismatch("checkpoint is missing tensor " + std::string(name));
      const auto& entry = table[k++];
      if (entry.at("name").get<std::string>() != name || entry.at("rows").get<std::size_t>() != rows ||
          entry.at("cols").get<std::size_t>() != cols)
        throw ShapeMismatch("checkpoint tensor " + entry.at("name").get<std::string>() + " (" +
                            std::to_string(entry.at("rows").get<std::size_t>()) + "x" +
                            std::to_string(entry.at("cols").get<std::size_t>()) +
                            ") does not match " + std::string(name) + " (" + std::to_string(rows) +
                            "x" + std::to_string(cols) + ")");
      for (double& v : data) v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
    });
    if (k != table.size()) throw ShapeMismatch("checkpoint has extra tensors");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }
  if (pos != bytes.size()) throw CheckpointError("trailing bytes after checkpoint payload");
  return model;
}

void save_checkpoint(const DecompositionModel& model, const std::string& path,
                     const RoleVocabulary& vocab) {
  const auto bytes = serialize_checkpoint(model, vocab);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed: " + path);
}

DecompositionModel load_checkpoint(const std::string& path, const RoleVocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str(), vocab);
}

}  // namespace axregion
