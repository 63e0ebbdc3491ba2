#pragma once

#include "dmmpose/params.hpp"
#include "dmmpose/pose.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmmpose {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParamGroup {
  std::string name;
  ParamSet params;
};

// Model-agnostic container. On disk: the 8 magic bytes "DMMCKPT1", a u64
// little-endian header length, a UTF-8 JSON header (kind, config, stats and a
// tensor table of name / shape / dtype / byte offset), then the raw
// little-endian f64 payload.
struct Checkpoint {
  std::string kind;
  nlohmann::json config = nlohmann::json::object();
  std::optional<NormalizationStats> stats;
  std::vector<ParamGroup> groups;

  const ParamSet& group(const std::string& name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies values from `src` into `dst`, requiring identical names and shapes.
void assign_params(ParamSet& dst, const ParamSet& src);

}  // namespace dmmpose
