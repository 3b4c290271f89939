#include "vgnmn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <map>

#include "binary_io.hpp"

namespace vgnmn {

namespace {

constexpr std::string_view kMagic = "VGNMNCKP";
constexpr std::string_view kMomentM = "adam.m.";
constexpr std::string_view kMomentV = "adam.v.";

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string progress_text(const TrainProgress& p, std::size_t adam_step) {
  KvConfig kv;
  kv.set("epoch", std::to_string(p.epoch));
  kv.set("step", std::to_string(p.step));
  kv.set("best_val", hex(p.best_val));
  kv.set("best_epoch", std::to_string(p.best_epoch));
  kv.set("adam_step", std::to_string(adam_step));
  return kv.to_text();
}

[[noreturn]] void corrupt(const std::string& what, const std::string& msg) {
  throw CheckpointError(CheckpointError::Code::kCorrupt, what + ": " + msg);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  binio::Writer w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.str(ckpt.config.to_text());
  w.str(ckpt.vocab.to_text());
  w.str(progress_text(ckpt.progress, ckpt.adam.step));

  std::map<std::string, Tensor> tensors;
  for (const auto& [name, t] : ckpt.params) tensors.emplace(name, t);
  for (const auto& [moments, prefix] : {std::pair{&ckpt.adam.m, kMomentM}, {&ckpt.adam.v, kMomentV}})
    for (const auto& [name, values] : *moments) {
      if (!ckpt.params.contains(name)) continue;
      tensors.emplace(std::string(prefix) + name, Tensor(ckpt.params.get(name).shape(), values));
    }
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.str(name);
    w.tensor(t);
  }
  return w.data();
}

Checkpoint parse_checkpoint(std::string_view data, const std::string& what) {
  if (data.size() < kMagic.size() || data.substr(0, kMagic.size()) != kMagic)
    throw CheckpointError(CheckpointError::Code::kBadMagic, what + ": not a checkpoint (bad magic)");
  Checkpoint ckpt;
  try {
    binio::Reader r(data, what);
    r.bytes(kMagic.size());
    const auto version = r.u32();
    if (version != kCheckpointVersion)
      throw CheckpointError(CheckpointError::Code::kVersion, what + ": unsupported checkpoint version " +
                                                                 std::to_string(version) + " (expected " +
                                                                 std::to_string(kCheckpointVersion) + ")");
    ckpt.config = KvConfig::parse(r.str());
    try {
      ckpt.vocab = Vocab::from_text(r.str());
    } catch (const CheckpointError&) {
      throw;
    } catch (const std::exception& e) {
      corrupt(what, std::string("bad vocabulary: ") + e.what());
    }
    const auto progress = KvConfig::parse(r.str());
    ckpt.progress.epoch = progress.get_size("epoch", 0);
    ckpt.progress.step = progress.get_size("step", 0);
    ckpt.progress.best_epoch = progress.get_size("best_epoch", 0);
    ckpt.adam.step = progress.get_size("adam_step", 0);
    const auto best = progress.get_string("best_val", "inf");
    char* end = nullptr;
    ckpt.progress.best_val = std::strtod(best.c_str(), &end);
    if (end != best.c_str() + best.size()) corrupt(what, "bad best_val '" + best + "'");

    const auto count = r.u32();
    std::map<std::string, Tensor> moments;
    std::string previous;
    for (std::uint32_t i = 0; i < count; ++i) {
      auto name = r.str();
      if (i > 0 && !(previous < name)) corrupt(what, "tensor names out of order at '" + name + "'");
      previous = name;
      auto t = r.tensor();
      if (name.starts_with(kMomentM) || name.starts_with(kMomentV))
        moments.emplace(std::move(name), std::move(t));
      else
        ckpt.params.add(name, std::move(t));
    }
    if (!r.at_end()) corrupt(what, "trailing bytes after tensor block");
    for (auto& [name, t] : moments) {
      const bool is_m = name.starts_with(kMomentM);
      const auto param = name.substr(kMomentM.size());
      if (!ckpt.params.contains(param)) corrupt(what, "optimizer state for unknown parameter '" + param + "'");
      if (ckpt.params.get(param).shape() != t.shape()) corrupt(what, "optimizer state shape mismatch for '" + param + "'");
      (is_m ? ckpt.adam.m : ckpt.adam.v)[param] = std::vector<double>(t.data().begin(), t.data().end());
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const DataError& e) {
    throw CheckpointError(CheckpointError::Code::kTruncated, e.what());
  } catch (const ConfigError& e) {
    corrupt(what, e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  const auto tmp = path + ".tmp";
  binio::write_file(tmp, bytes);
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot move checkpoint into '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(binio::read_file(path), path); }

}  // namespace vgnmn
