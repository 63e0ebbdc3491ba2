#include "dmmpose/dataset_io.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dmmpose {

using nlohmann::json;

std::string serialize_sequence(const PoseSequence& seq) {
  json j;
  j["id"] = seq.id;
  j["fps"] = seq.fps;
  j["joint_names"] = seq.skeleton.joint_names();
  j["parents"] = seq.skeleton.parents();
  json frames = json::array();
  for (int t = 0; t < seq.num_frames(); ++t) {
    json frame = json::array();
    for (int k = 0; k < seq.num_joints(); ++k)
      frame.push_back(json::array({seq.frames(t, 2 * k), seq.frames(t, 2 * k + 1)}));
    frames.push_back(std::move(frame));
  }
  j["frames"] = std::move(frames);
  if (seq.actions) j["actions"] = *seq.actions;
  if (seq.origin) {
    j["source_id"] = seq.origin->source_id;
    j["method"] = seq.origin->method;
    j["sample_index"] = seq.origin->sample_index;
    j["split_frame"] = seq.origin->split_frame;
  }
  return j.dump();
}

PoseSequence parse_sequence(std::string_view line, int line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DatasetError(line_number, std::string("malformed JSON: ") + e.what());
  }
  try {
    PoseSequence seq;
    seq.id = j.at("id").get<std::string>();
    seq.fps = j.at("fps").get<double>();
    seq.skeleton = Skeleton(j.at("joint_names").get<std::vector<std::string>>(),
                            j.at("parents").get<std::vector<int>>());
    const auto& frames = j.at("frames");
    const int T = static_cast<int>(frames.size());
    const int J = seq.skeleton.num_joints();
    seq.frames = Tensor::Zero(T, 2 * J);
    for (int t = 0; t < T; ++t) {
      const auto& frame = frames.at(static_cast<std::size_t>(t));
      if (static_cast<int>(frame.size()) != J)
        throw DatasetError(line_number, "frame " + std::to_string(t) + " has " +
                                            std::to_string(frame.size()) + " joints, expected " +
                                            std::to_string(J));
      for (int k = 0; k < J; ++k) {
        const auto& xy = frame.at(static_cast<std::size_t>(k));
        if (xy.size() != 2) throw DatasetError(line_number, "joint entry is not an [x, y] pair");
        seq.frames(t, 2 * k) = xy.at(0).get<double>();
        seq.frames(t, 2 * k + 1) = xy.at(1).get<double>();
      }
    }
    if (j.contains("actions")) seq.actions = j.at("actions").get<std::vector<int>>();
    if (j.contains("source_id")) {
      ForecastOrigin o;
      o.source_id = j.at("source_id").get<std::string>();
      o.method = j.value("method", std::string());
      o.sample_index = j.value("sample_index", 0);
      o.split_frame = j.value("split_frame", 0);
      seq.origin = o;
    }
    seq.validate();
    return seq;
  } catch (const DatasetError&) {
    throw;
  } catch (const std::exception& e) {
    throw DatasetError(line_number, e.what());
  }
}

std::string serialize_dataset(std::span<const PoseSequence> dataset) {
  std::string out;
  for (const auto& seq : dataset) {
    out += serialize_sequence(seq);
    out += '\n';
  }
  return out;
}

std::vector<PoseSequence> parse_dataset(std::string_view text) {
  std::vector<PoseSequence> out;
  int line_number = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_number;
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    out.push_back(parse_sequence(line, line_number));
  }
  return out;
}

std::vector<PoseSequence> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

void save_dataset(const std::filesystem::path& path, std::span<const PoseSequence> dataset) {
  write_file_atomic(path, serialize_dataset(dataset));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace dmmpose
