#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vgnmn/checkpoint.hpp"
#include "vgnmn/corpus.hpp"
#include "vgnmn/model.hpp"
#include "vgnmn/optimizer.hpp"

namespace vgnmn {

struct TrainConfig {
  ModelConfig model;
  LossWeights loss;
  std::size_t batch = 32;
  std::size_t warmup = 1000;
  std::size_t max_epochs = 50;
  std::uint64_t seed = 0;
  AdamOptions adam;
  double clip_norm = 5.0;
  /// OpenMP threads for per-sample work; 0 uses the runtime default.
  std::size_t threads = 0;

  void validate() const;
  static TrainConfig from_config(const KvConfig& cfg);
  KvConfig to_config() const;
};

/// Raised when a loss or gradient stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LossSummary {
  double dialogue = 0.0, video = 0.0, response = 0.0, total = 0.0;
  std::size_t samples = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double lr = 0.0;
  LossSummary train;
  double val_total = 0.0;
  std::size_t clipped = 0;  // batches whose gradient was rescaled

  std::string to_json() const;
};

struct BatchResult {
  LossSummary loss;  // batch means
  GradMap grads;     // batch-mean gradient
};

/// Loss and gradient of one batch. Per-sample passes run concurrently, each
/// on its own tape, and are reduced in sample order so the result does not
/// depend on the thread count. Dropout streams derive from (seed, step, index).
BatchResult batch_gradient(const Model& model, const std::vector<const DialogueSample*>& samples,
                           const Corpus& corpus, const LossWeights& weights, bool training, std::uint64_t seed,
                           std::size_t step, std::size_t threads = 0);

/// Eval-mode mean loss over samples (no dropout, no tape).
LossSummary evaluate_loss(const Model& model, const std::vector<DialogueSample>& samples, const Corpus& corpus,
                          const LossWeights& weights, std::size_t threads = 0);

/// Training-split order for an epoch; a pure function of (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

class Trainer {
 public:
  Trainer(TrainConfig config, const Corpus& corpus);
  /// Resumes optimizer state, progress and parameters from a checkpoint.
  Trainer(TrainConfig config, const Corpus& corpus, const Checkpoint& resume);

  Model& model() { return *model_; }
  const Model& model() const { return *model_; }
  const TrainProgress& progress() const { return progress_; }
  const AdamState& adam() const { return adam_; }
  const TrainConfig& config() const { return config_; }

  /// One pass over the training split followed by validation.
  EpochRecord run_epoch();

  Checkpoint checkpoint() const;

  /// Runs until max_epochs. After each epoch the record is written to `log`
  /// (one JSON object per line); `last_path` receives the latest state and
  /// `best_path` the state with the lowest validation loss. Empty paths skip.
  void train(std::ostream* log, const std::string& best_path, const std::string& last_path,
             const std::function<void(const EpochRecord&)>& on_epoch = {});

 private:
  TrainConfig config_;
  const Corpus& corpus_;
  std::unique_ptr<Model> model_;
  AdamState adam_;
  TrainProgress progress_;
};

}  // namespace vgnmn
