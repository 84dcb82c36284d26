#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "codessm/model/encoder.hpp"

namespace codessm::model {

/// Any failure to read a checkpoint. The message names the offending field.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

/// File layout (all integers little-endian):
///   "CSSM" | u32 version | u64 config hash | u32 len + UTF-8 JSON config
///   | u32 len + UTF-8 JSON metadata | u64 step | u64 rng seed | u64 rng position
///   | u32 count + tensors | u32 count + optimizer tensors | u64 optimizer step | "END."
/// Each tensor is u32 name length, name bytes, u32 rank, u32 dims[rank] and
/// the float32 values.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  EncoderConfig config;
  nlohmann::json metadata = nlohmann::json::object();
  std::uint64_t step = 0;
  Rng rng{0};
  std::vector<NamedTensor> tensors;
  std::vector<NamedTensor> optimizer;
  std::uint64_t optimizer_step = 0;

  const NamedTensor* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws CheckpointError on corrupt header, hash mismatch, unknown version,
/// truncation or malformed tensors.
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// As above, and refuses a checkpoint whose config differs from expected.
Checkpoint load_checkpoint(const std::filesystem::path& path, const EncoderConfig& expected);

/// Copies every encoder parameter into named tensors.
std::vector<NamedTensor> export_params(const EncoderParams<float>& params, const std::string& prefix = "");
/// Rebuilds encoder parameters; tensors with other prefixes are ignored.
/// Throws CheckpointError naming a missing or mis-shaped tensor.
EncoderParams<float> import_params(const Checkpoint& ckpt, const std::string& prefix = "");

}  // namespace codessm::model
