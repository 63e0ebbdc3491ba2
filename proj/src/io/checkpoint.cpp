#include "dmmpose/checkpoint.hpp"

#include "dmmpose/dataset_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>

namespace dmmpose {

using nlohmann::json;

namespace {

constexpr char kMagic[] = "DMMCKPT1";
constexpr std::size_t kMagicSize = 8;
constexpr int kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector json_vector(const json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

}  // namespace

const ParamSet& Checkpoint::group(const std::string& name) const {
  for (const auto& g : groups)
    if (g.name == name) return g.params;
  throw CheckpointError("checkpoint has no parameter group '" + name + "'");
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json header;
  header["format"] = kMagic;
  header["version"] = kVersion;
  header["kind"] = ckpt.kind;
  header["config"] = ckpt.config;
  if (ckpt.stats)
    header["stats"] = {{"mean", vector_json(ckpt.stats->mean)}, {"std", vector_json(ckpt.stats->std)}};
  else
    header["stats"] = nullptr;
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& g : ckpt.groups)
    for (std::size_t i = 0; i < g.params.size(); ++i) {
      const Tensor& t = g.params.value(i);
      tensors.push_back({{"group", g.name},
                         {"name", g.params.name(i)},
                         {"shape", {t.rows(), t.cols()}},
                         {"dtype", "f64le"},
                         {"offset", offset}});
      offset += 8 * static_cast<std::uint64_t>(t.size());
    }
  header["tensors"] = tensors;
  header["payload_bytes"] = offset;
  const std::string text = header.dump();

  std::string out(kMagic, kMagicSize);
  put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& g : ckpt.groups)
    for (const auto& t : g.params.values())
      for (Eigen::Index k = 0; k < t.size(); ++k) put_u64(out, std::bit_cast<std::uint64_t>(t.data()[k]));
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < kMagicSize + 8 || bytes.compare(0, kMagicSize, kMagic) != 0)
    throw CheckpointError("checkpoint: bad magic bytes (not a DMMCKPT1 file)");
  const std::uint64_t header_len = get_u64(bytes, kMagicSize);
  const std::size_t payload_start = kMagicSize + 8 + header_len;
  if (header_len > bytes.size() || payload_start > bytes.size())
    throw CheckpointError("checkpoint: truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(kMagicSize + 8, header_len));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed header: ") + e.what());
  }
  Checkpoint ckpt;
  try {
    if (header.at("version").get<int>() != kVersion)
      throw CheckpointError("checkpoint: unsupported version " + header.at("version").dump());
    const auto payload_bytes = header.at("payload_bytes").get<std::uint64_t>();
    if (bytes.size() - payload_start != payload_bytes)
      throw CheckpointError("checkpoint: payload is " + std::to_string(bytes.size() - payload_start) +
                            " bytes, header declares " + std::to_string(payload_bytes));
    ckpt.kind = header.at("kind").get<std::string>();
    ckpt.config = header.at("config");
    if (!header.at("stats").is_null())
      ckpt.stats = NormalizationStats{json_vector(header["stats"].at("mean")),
                                      json_vector(header["stats"].at("std"))};
    for (const auto& entry : header.at("tensors")) {
      if (entry.at("dtype").get<std::string>() != "f64le")
        throw CheckpointError("checkpoint: unsupported dtype " + entry.at("dtype").dump());
      const std::string group = entry.at("group").get<std::string>();
      if (ckpt.groups.empty() || ckpt.groups.back().name != group) ckpt.groups.push_back({group, {}});
      const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
      const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
      const auto off = entry.at("offset").get<std::uint64_t>();
      if (rows < 0 || cols < 0 || off + 8 * static_cast<std::uint64_t>(rows * cols) > payload_bytes)
        throw CheckpointError("checkpoint: tensor '" + entry.at("name").get<std::string>() +
                              "' lies outside the payload");
      Tensor t(rows, cols);
      for (Eigen::Index k = 0; k < t.size(); ++k)
        t.data()[k] = std::bit_cast<double>(get_u64(bytes, payload_start + off + 8 * static_cast<std::size_t>(k)));
      ckpt.groups.back().params.add(entry.at("name").get<std::string>(), std::move(t));
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

void assign_params(ParamSet& dst, const ParamSet& src) {
  if (dst.size() != src.size())
    throw CheckpointError("checkpoint: expected " + std::to_string(dst.size()) + " tensors, found " +
                          std::to_string(src.size()));
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst.name(i) != src.name(i))
      throw CheckpointError("checkpoint: expected tensor '" + dst.name(i) + "', found '" + src.name(i) + "'");
    if (dst.value(i).rows() != src.value(i).rows() || dst.value(i).cols() != src.value(i).cols())
      throw CheckpointError("checkpoint: tensor '" + dst.name(i) + "' has shape " +
                            shape_string(src.value(i)) + ", expected " + shape_string(dst.value(i)));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst.value(i) = src.value(i);
}

}  // namespace dmmpose
