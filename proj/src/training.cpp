#include "vgnmn/training.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace vgnmn {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

int thread_count(std::size_t threads) {
  return threads == 0 ? omp_get_max_threads() : static_cast<int>(threads);
}

struct SampleOutcome {
  double dialogue = 0.0, video = 0.0, response = 0.0, total = 0.0;
  std::vector<std::vector<double>> grads;  // per parameter, empty when unreached
  std::exception_ptr error;
};

std::string sample_label(const DialogueSample& s) {
  return "sample " + s.dialogue_id + " turn " + std::to_string(s.turn);
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (loss.alpha < 0.0 || loss.beta < 0.0) throw ConfigError("loss weights alpha and beta must be non-negative");
  if (loss.label_smoothing < 0.0 || loss.label_smoothing >= 1.0)
    throw ConfigError("label_smoothing must lie in [0,1)");
  if (batch == 0) throw ConfigError("batch size must be at least 1");
  if (warmup == 0) throw ConfigError("warmup must be at least 1");
  if (clip_norm <= 0.0) throw ConfigError("clip_norm must be positive");
}

TrainConfig TrainConfig::from_config(const KvConfig& cfg) {
  std::set<std::string> known = {"alpha",      "beta",       "label_smoothing", "batch",         "warmup",
                                 "max_epochs", "seed",       "adam_beta1",      "adam_beta2",    "adam_eps",
                                 "clip_norm",  "threads",    "float32_state"};
  for (const auto& k : ModelConfig::config_keys()) known.insert(k);
  cfg.require_known(known);
  TrainConfig c;
  c.model = ModelConfig::from_config(cfg);
  c.loss.alpha = cfg.get_double("alpha", c.loss.alpha);
  c.loss.beta = cfg.get_double("beta", c.loss.beta);
  c.loss.label_smoothing = cfg.get_double("label_smoothing", c.loss.label_smoothing);
  c.batch = cfg.get_size("batch", c.batch);
  c.warmup = cfg.get_size("warmup", c.warmup);
  c.max_epochs = cfg.get_size("max_epochs", c.max_epochs);
  c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  c.adam.beta1 = cfg.get_double("adam_beta1", c.adam.beta1);
  c.adam.beta2 = cfg.get_double("adam_beta2", c.adam.beta2);
  c.adam.eps = cfg.get_double("adam_eps", c.adam.eps);
  c.adam.float32_state = cfg.get_bool("float32_state", c.adam.float32_state);
  c.clip_norm = cfg.get_double("clip_norm", c.clip_norm);
  c.threads = cfg.get_size("threads", c.threads);
  c.validate();
  return c;
}

KvConfig TrainConfig::to_config() const {
  KvConfig cfg;
  model.to_config(cfg);
  cfg.set("alpha", format_double(loss.alpha));
  cfg.set("beta", format_double(loss.beta));
  cfg.set("label_smoothing", format_double(loss.label_smoothing));
  cfg.set("batch", std::to_string(batch));
  cfg.set("warmup", std::to_string(warmup));
  cfg.set("max_epochs", std::to_string(max_epochs));
  cfg.set("seed", std::to_string(seed));
  cfg.set("adam_beta1", format_double(adam.beta1));
  cfg.set("adam_beta2", format_double(adam.beta2));
  cfg.set("adam_eps", format_double(adam.eps));
  cfg.set("float32_state", adam.float32_state ? "true" : "false");
  cfg.set("clip_norm", format_double(clip_norm));
  cfg.set("threads", std::to_string(threads));
  return cfg;
}

std::string EpochRecord::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["step"] = step;
  j["lr"] = lr;
  j["L_dial"] = train.dialogue;
  j["L_vid"] = train.video;
  j["L_res"] = train.response;
  j["total"] = train.total;
  j["val_total"] = val_total;
  j["clipped"] = clipped;
  return j.dump();
}

BatchResult batch_gradient(const Model& model, const std::vector<const DialogueSample*>& samples,
                           const Corpus& corpus, const LossWeights& weights, bool training, std::uint64_t seed,
                           std::size_t step, std::size_t threads) {
  if (samples.empty()) throw DataError("empty batch");
  const auto& params = model.params();
  std::vector<Tensor> tensors;
  std::vector<std::string> names;
  for (const auto& [name, t] : params) {
    names.push_back(name);
    tensors.push_back(t);
  }
  const double dropout = training ? model.config().dropout : 0.0;
  std::vector<SampleOutcome> outcomes(samples.size());

#pragma omp parallel for schedule(dynamic) num_threads(thread_count(threads))
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& out = outcomes[i];
    try {
      const auto& s = *samples[i];
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(i)};
      Rng rng(seq);
      ForwardContext ctx{training, dropout, &rng};
      Tape tape;
      TapeScope scope(tape);
      auto terms = model.loss(s, corpus.video(s.video_id), weights, ctx);
      out.dialogue = terms.dialogue.item();
      out.video = terms.video.item();
      out.response = terms.response.item();
      out.total = terms.total.item();
      if (!std::isfinite(out.total)) {
        auto bad = tape.first_non_finite();
        throw DivergenceError("non-finite loss in " + sample_label(s) +
                              (bad ? "; first non-finite tensor is op #" + std::to_string(bad->first) + " (" +
                                         std::string(bad->second) + ")"
                                   : std::string()));
      }
      auto grads = tape.backward(terms.total);
      out.grads.resize(tensors.size());
      for (std::size_t p = 0; p < tensors.size(); ++p)
        if (const auto* g = grads.find(tensors[p])) out.grads[p] = *g;
    } catch (...) {
      out.error = std::current_exception();
    }
  }

  BatchResult result;
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (std::size_t p = 0; p < tensors.size(); ++p) {
    std::vector<double> acc(tensors[p].numel(), 0.0);
    bool reached = false;
    for (const auto& out : outcomes) {
      if (out.error) std::rethrow_exception(out.error);
      const auto& g = out.grads[p];
      if (g.empty()) continue;
      reached = true;
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += g[k];
    }
    if (!reached) continue;
    for (auto& v : acc) {
      v *= inv;
      if (!std::isfinite(v)) throw DivergenceError("non-finite gradient for parameter '" + names[p] + "'");
    }
    result.grads.emplace(names[p], std::move(acc));
  }
  for (const auto& out : outcomes) {
    result.loss.dialogue += out.dialogue * inv;
    result.loss.video += out.video * inv;
    result.loss.response += out.response * inv;
    result.loss.total += out.total * inv;
  }
  result.loss.samples = samples.size();
  return result;
}

LossSummary evaluate_loss(const Model& model, const std::vector<DialogueSample>& samples, const Corpus& corpus,
                          const LossWeights& weights, std::size_t threads) {
  LossSummary sum;
  if (samples.empty()) return sum;
  std::vector<SampleOutcome> outcomes(samples.size());
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(threads))
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      auto terms = model.loss(samples[i], corpus.video(samples[i].video_id), weights);
      outcomes[i].dialogue = terms.dialogue.item();
      outcomes[i].video = terms.video.item();
      outcomes[i].response = terms.response.item();
      outcomes[i].total = terms.total.item();
    } catch (...) {
      outcomes[i].error = std::current_exception();
    }
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (const auto& o : outcomes) {
    if (o.error) std::rethrow_exception(o.error);
    sum.dialogue += o.dialogue * inv;
    sum.video += o.video * inv;
    sum.response += o.response * inv;
    sum.total += o.total * inv;
  }
  sum.samples = samples.size();
  return sum;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  Rng rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Trainer::Trainer(TrainConfig config, const Corpus& corpus)
    : config_(std::move(config)), corpus_(corpus) {
  config_.validate();
  model_ = std::make_unique<Model>(config_.model, corpus.vocab, config_.seed);
}

Trainer::Trainer(TrainConfig config, const Corpus& corpus, const Checkpoint& resume)
    : config_(std::move(config)), corpus_(corpus), adam_(resume.adam), progress_(resume.progress) {
  config_.validate();
  if (!(resume.vocab == corpus.vocab)) throw DataError("checkpoint vocabulary does not match the corpus vocabulary");
  model_ = std::make_unique<Model>(config_.model, resume.vocab, resume.params.clone());
}

EpochRecord Trainer::run_epoch() {
  const auto& train = corpus_.split("train");
  if (train.empty()) throw DataError("training split is empty");
  const auto order = epoch_order(train.size(), config_.seed, progress_.epoch);
  EpochRecord rec;
  double weight_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += config_.batch) {
    std::vector<const DialogueSample*> batch;
    for (std::size_t i = start; i < std::min(order.size(), start + config_.batch); ++i)
      batch.push_back(&train[order[i]]);
    const std::size_t step = progress_.step + 1;
    const double lr = noam_lr(step, config_.model.d, config_.warmup);
    auto result = batch_gradient(*model_, batch, corpus_, config_.loss, true, config_.seed, step, config_.threads);
    if (clip_global_norm(result.grads, config_.clip_norm)) ++rec.clipped;
    adam_step(model_->params(), result.grads, adam_, lr, config_.adam);
    progress_.step = step;
    rec.lr = lr;

    const double w = static_cast<double>(batch.size());
    rec.train.dialogue += result.loss.dialogue * w;
    rec.train.video += result.loss.video * w;
    rec.train.response += result.loss.response * w;
    rec.train.total += result.loss.total * w;
    weight_sum += w;
  }
  rec.train.dialogue /= weight_sum;
  rec.train.video /= weight_sum;
  rec.train.response /= weight_sum;
  rec.train.total /= weight_sum;
  rec.train.samples = train.size();

  auto val_it = corpus_.splits.find("val");
  rec.val_total = (val_it == corpus_.splits.end() || val_it->second.empty())
                      ? rec.train.total
                      : evaluate_loss(*model_, val_it->second, corpus_, config_.loss, config_.threads).total;
  ++progress_.epoch;
  rec.epoch = progress_.epoch;
  rec.step = progress_.step;
  return rec;
}

Checkpoint Trainer::checkpoint() const {
  return {config_.to_config(), model_->vocab(), model_->params().clone(), adam_, progress_};
}

void Trainer::train(std::ostream* log, const std::string& best_path, const std::string& last_path,
                    const std::function<void(const EpochRecord&)>& on_epoch) {
  while (progress_.epoch < config_.max_epochs) {
    auto rec = run_epoch();
    const bool improved = rec.val_total < progress_.best_val;
    if (improved) {
      progress_.best_val = rec.val_total;
      progress_.best_epoch = rec.epoch;
    }
    if (log) {
      *log << rec.to_json() << "\n";
      log->flush();
    }
    if (improved && !best_path.empty()) save_checkpoint(best_path, checkpoint());
    if (!last_path.empty()) save_checkpoint(last_path, checkpoint());
    if (on_epoch) on_epoch(rec);
  }
}

}  // namespace vgnmn
