#include <bit>
#include <cstring>

#include "json.hpp"
#include "prefrank/errors.hpp"
#include "prefrank/prefmodel.hpp"

namespace prefrank::model {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'P', 'R', 'F', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kVersion = 1;

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int b = 0; b < bytes; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t& pos, int bytes) {
  if (pos + static_cast<std::size_t>(bytes) > in.size()) throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) v |= static_cast<std::uint64_t>(in[pos + b]) << (8 * b);
  pos += static_cast<std::size_t>(bytes);
  return v;
}

json dims_json(const ModelDims& d) {
  return json{{"image_size", d.image_size}, {"channels", d.channels},
              {"frozen_pool", d.frozen_pool}, {"frozen_dim", d.frozen_dim},
              {"train_pool", d.train_pool},   {"hidden", d.hidden},
              {"train_dim", d.train_dim},     {"feature_dim", d.feature_dim()},
              {"classes", ModelDims::kClasses}};
}

ModelDims dims_from_json(const json& j) {
  ModelDims d;
  d.image_size = j.at("image_size");
  d.channels = j.at("channels");
  d.frozen_pool = j.at("frozen_pool");
  d.frozen_dim = j.at("frozen_dim");
  d.train_pool = j.at("train_pool");
  d.hidden = j.at("hidden");
  d.train_dim = j.at("train_dim");
  return d;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const PreferenceModel& m) {
  const auto& p = m.parameters();
  json blocks = json::array();
  const auto views = p.blocks();
  for (std::size_t i = 0; i < views.size(); ++i)
    blocks.push_back({{"name", Parameters::block_names()[i]}, {"size", views[i].size()}});
  const json header{{"format", "prefrank-model"},
                    {"seed", m.config().seed},
                    {"dims", dims_json(m.dims())},
                    {"frozen_checksum", m.frozen_checksum()},
                    {"target_emotion", to_string(m.target())},
                    {"sigmoid_scale", m.sigmoid_scale()},
                    {"parameter_count", p.count()},
                    {"blocks", blocks}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le(out, kVersion, 4);
  put_le(out, text.size(), 8);
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& block : views)
    for (double v : block) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  write_bytes(path, out);
}

PreferenceModel load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + ": not a prefrank model checkpoint");
  std::size_t pos = sizeof(kMagic);
  const auto version = get_le(bytes, pos, 4);
  if (version != kVersion)
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  const auto header_len = get_le(bytes, pos, 8);
  if (pos + header_len > bytes.size()) throw FormatError(path.string() + ": truncated header");
  json header;
  ModelConfig cfg;
  std::string checksum;
  try {
    header = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + header_len));
    cfg.seed = header.at("seed").get<std::uint64_t>();
    cfg.dims = dims_from_json(header.at("dims"));
    cfg.target = parse_emotion(header.at("target_emotion").get<std::string>());
    cfg.sigmoid_scale = header.at("sigmoid_scale").get<double>();
    checksum = header.at("frozen_checksum").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
  pos += header_len;

  Parameters params = Parameters::zeros_like(cfg.dims);
  for (auto block : params.blocks())
    for (double& v : block) v = std::bit_cast<double>(get_le(bytes, pos, 8));
  if (pos != bytes.size()) throw FormatError(path.string() + ": trailing bytes");

  auto model = PreferenceModel::from_parameters(cfg, std::move(params));
  if (model.frozen_checksum() != checksum)
    throw FormatError(path.string() + ": frozen projection checksum mismatch");
  return model;
}

}  // namespace prefrank::model
