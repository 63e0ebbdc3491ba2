#pragma once

#include "dmmpose/pose.hpp"

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dmmpose {

class DatasetError : public std::runtime_error {
 public:
  DatasetError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// One JSON object per line: id, fps, joint_names, parents, frames (T arrays
// of J [x, y] pairs), optional actions, optional forecast provenance
// (source_id, method, sample_index, split_frame).
std::string serialize_sequence(const PoseSequence& seq);
PoseSequence parse_sequence(std::string_view line, int line_number = 1);

std::string serialize_dataset(std::span<const PoseSequence> dataset);
std::vector<PoseSequence> parse_dataset(std::string_view text);

std::vector<PoseSequence> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, std::span<const PoseSequence> dataset);

// Whole-file helpers shared by the dataset, checkpoint and report writers.
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string sha256_hex(std::string_view data);

}  // namespace dmmpose
