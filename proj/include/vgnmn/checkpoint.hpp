#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "vgnmn/kv_config.hpp"
#include "vgnmn/optimizer.hpp"
#include "vgnmn/param_store.hpp"
#include "vgnmn/vocab.hpp"

namespace vgnmn {

struct TrainProgress {
  std::size_t epoch = 0;  // completed epochs
  std::size_t step = 0;   // optimizer steps taken
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;

  bool operator==(const TrainProgress&) const = default;
};

struct Checkpoint {
  KvConfig config;
  Vocab vocab;
  ParamStore params;
  AdamState adam;
  TrainProgress progress;
};

class CheckpointError : public DataError {
 public:
  enum class Code { kBadMagic, kVersion, kTruncated, kCorrupt };
  CheckpointError(Code code, const std::string& msg) : DataError(msg), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Layout (little-endian):
///   "VGNMNCKP" u32 version
///   str config, str vocab, str progress      (str = u32 length + bytes)
///   u32 count, then per tensor sorted by name: str name, u32 rank, u32 dims, f32 values
/// Optimizer moments are stored as tensors "adam.m.<param>" and "adam.v.<param>".
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view data, const std::string& what = "checkpoint");

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace vgnmn
