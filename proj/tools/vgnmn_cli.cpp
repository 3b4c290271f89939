#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vgnmn/checkpoint.hpp"
#include "vgnmn/corpus.hpp"
#include "vgnmn/diagnostics.hpp"
#include "vgnmn/evaluate.hpp"
#include "vgnmn/model.hpp"
#include "vgnmn/training.hpp"

namespace fs = std::filesystem;
using namespace vgnmn;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) s += (s.empty() ? "" : " ") + t;
  return s;
}

std::unique_ptr<Model> model_from_checkpoint(const Checkpoint& ckpt) {
  auto config = TrainConfig::from_config(ckpt.config);
  return std::make_unique<Model>(config.model, ckpt.vocab, ckpt.params.clone());
}

void print_program(const char* label, const Program& p, bool valid) {
  std::cout << label << ": " << program_to_string(p) << (valid ? "" : "  (invalid parse, fallback used)") << "\n";
}

std::string row_text(const Tensor& t) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << "[";
  const auto& shape = t.shape();
  const std::size_t cols = shape.empty() ? 1 : shape.back();
  const auto data = t.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i > 0) os << (i % cols == 0 ? " | " : " ");
    os << data[i];
  }
  os << "]";
  return os.str();
}

int cmd_gen_data(const std::string& spec_path, std::size_t n, std::uint64_t seed, const std::string& out) {
  auto spec = WorldSpec::from_config(KvConfig::load(spec_path));
  auto corpus = generate_corpus(spec, n, seed);
  write_corpus(corpus, out);
  std::cout << "wrote " << corpus.split("train").size() << "/" << corpus.split("val").size() << "/"
            << corpus.split("test").size() << " train/val/test turns and " << corpus.videos.size()
            << " videos to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data, const std::string& out,
              const std::string& resume, const std::string& log_path, std::size_t epochs, std::size_t threads) {
  std::optional<Checkpoint> ckpt;
  TrainConfig config;
  if (!resume.empty()) {
    ckpt = load_checkpoint(resume);
    config = TrainConfig::from_config(ckpt->config);
  } else {
    if (config_path.empty()) throw UsageError("train needs --config (or --resume)");
    config = TrainConfig::from_config(KvConfig::load(config_path));
  }
  if (epochs > 0) config.max_epochs = epochs;
  if (threads > 0) config.threads = threads;

  const auto corpus = read_corpus(data);
  auto trainer = ckpt ? std::make_unique<Trainer>(config, corpus, *ckpt) : std::make_unique<Trainer>(config, corpus);
  const std::string log_file = log_path.empty() ? out + ".log.jsonl" : log_path;
  std::ofstream log(log_file, ckpt ? std::ios::app : std::ios::trunc);
  if (!log) throw DataError("cannot open log file '" + log_file + "'");

  const auto start = std::chrono::steady_clock::now();
  trainer->train(&log, out, out + ".last", [&](const EpochRecord& rec) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << rec.to_json() << "\n";
    if (rec.clipped > 0) std::cerr << "epoch " << rec.epoch << ": gradient clipped in " << rec.clipped << " batches\n";
    std::cerr << "epoch " << rec.epoch << " done after " << std::fixed << std::setprecision(1) << secs << "s\n";
  });
  std::cerr << "best val_total " << trainer->progress().best_val << " at epoch " << trainer->progress().best_epoch
            << "; best checkpoint " << out << ", last " << out << ".last, log " << log_file << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data, const std::string& split, bool json,
             std::size_t threads) {
  const auto ckpt = load_checkpoint(ckpt_path);
  const auto corpus = read_corpus(data);
  if (!corpus.splits.contains(split)) throw UsageError("unknown split '" + split + "'");
  if (!(ckpt.vocab == corpus.vocab)) throw DataError("checkpoint vocabulary does not match the corpus");
  auto model = model_from_checkpoint(ckpt);
  const auto m = evaluate_split(*model, corpus, split, threads);
  if (json) {
    std::cout << m.to_json() << "\n";
  } else {
    std::cout << std::fixed << std::setprecision(4) << "split                " << split << " (" << m.samples
              << " turns)\n"
              << "dialogue program EM  " << m.dialogue_program_em << "\n"
              << "video program EM     " << m.video_program_em << "\n"
              << "response token acc   " << m.response_token_accuracy << " (strict "
              << m.response_token_accuracy_strict << ")\n"
              << "BLEU-4               " << m.bleu4 << "\n";
  }
  return 0;
}

int cmd_parse(const std::string& ckpt_path, const std::string& question, const std::string& history) {
  const auto ckpt = load_checkpoint(ckpt_path);
  auto model = model_from_checkpoint(ckpt);
  const auto q = words(question);
  if (q.empty()) throw UsageError("--question is empty");
  const auto p = model->parse(words(history), q);
  print_program("dialogue program", p.dialogue_program, p.dialogue_program_valid);
  print_program("video program", p.video_program, p.video_program_valid);
  return 0;
}

int cmd_exec(const std::string& ckpt_path, const std::string& sample_path, std::size_t index) {
  const auto ckpt = load_checkpoint(ckpt_path);
  auto model = model_from_checkpoint(ckpt);
  const auto samples = read_samples(sample_path);
  if (index >= samples.size())
    throw UsageError("--index " + std::to_string(index) + " out of range (" + std::to_string(samples.size()) +
                     " samples)");
  const auto& s = samples[index];
  const auto video_path = fs::path(sample_path).parent_path() / "videos" / (s.video_id + ".bin");
  const auto video = load_video(video_path.string());
  const auto p = model->predict(s.history, s.question, video);

  std::cout << "history:  " << join(s.history) << "\n"
            << "question: " << join(s.question) << "\n";
  print_program("dialogue program", p.dialogue_program, p.dialogue_program_valid);
  std::cout << "  gold:           " << program_to_string(s.dialogue_program) << "\n";
  for (std::size_t i = 0; i < p.trace.find.size(); ++i)
    std::cout << "  FIND " << i << " attention over history: " << row_text(p.trace.find[i]) << "\n";
  print_program("video program", p.video_program, p.video_program_valid);
  std::cout << "  gold:           " << program_to_string(s.video_program) << "\n";
  for (std::size_t i = 0; i < p.trace.where_obj.size(); ++i) {
    std::cout << "  WHERE " << i << " object attention (frame rows): " << row_text(p.trace.where_obj[i]) << "\n";
    std::cout << "  WHERE " << i << " cnn frame attention: " << row_text(p.trace.where_cnn[i]) << "\n";
    std::cout << "  WHERE " << i << " audio frame attention: " << row_text(p.trace.where_aud[i]) << "\n";
  }
  for (std::size_t i = 0; i < p.trace.when_visual.size(); ++i) {
    std::cout << "  WHEN " << i << " visual temporal attention: " << row_text(p.trace.when_visual[i]) << "\n";
    std::cout << "  WHEN " << i << " audio temporal attention: " << row_text(p.trace.when_audio[i]) << "\n";
  }
  if (p.trace.fusion.numel() > 0)
    std::cout << "  fusion weights (visual, audio): " << row_text(p.trace.fusion) << "\n";
  std::cout << "response: " << join(p.response) << "\n"
            << "  gold:   " << join(s.response) << "\n";
  return 0;
}

int cmd_gradcheck(bool full, std::size_t coordinates, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const auto r = tiny_grad_check(full ? 0 : coordinates, seed);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = r.max_rel_error <= 1e-4;
  std::cout << "checked " << r.checked << " coordinates (" << r.nonzero << " nonzero), max relative error "
            << std::scientific << std::setprecision(3) << r.max_rel_error << " at " << r.worst << ", "
            << std::fixed << std::setprecision(1) << secs << "s: " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : kData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video-grounded neural module network: data generation, training and inspection"};
  app.require_subcommand(1);

  std::string spec, out, data, config, ckpt, resume, log, split = "test", question, history, sample;
  std::size_t n = 0, epochs = 0, threads = 0, index = 0, coordinates = 200;
  std::uint64_t seed = 0;
  bool json = false, full = false;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dialogue corpus");
  gen->add_option("--spec", spec, "World spec (key = value)")->required()->check(CLI::ExistingFile);
  gen->add_option("--n", n, "Number of dialogues")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Generator seed")->required();
  gen->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train with the joint program/response loss");
  train->add_option("--config", config, "Training config (key = value)");
  train->add_option("--data", data, "Corpus directory")->required();
  train->add_option("--out", out, "Best checkpoint path; the latest goes to <out>.last")->required();
  train->add_option("--resume", resume, "Continue from a checkpoint, using its config");
  train->add_option("--log", log, "JSON-lines log (default <out>.log.jsonl)");
  train->add_option("--epochs", epochs, "Override max_epochs");
  train->add_option("--threads", threads, "OpenMP threads (does not change results)");

  auto* eval = app.add_subcommand("eval", "Program exact match, token accuracy and BLEU-4");
  eval->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval->add_option("--data", data, "Corpus directory")->required();
  eval->add_option("--split", split, "train, val or test");
  eval->add_flag("--json", json, "Print metrics as JSON");
  eval->add_option("--threads", threads, "OpenMP threads");

  auto* parse = app.add_subcommand("parse", "Print the predicted dialogue and video programs");
  parse->add_option("--ckpt", ckpt, "Checkpoint")->required();
  parse->add_option("--question", question, "Question text")->required();
  parse->add_option("--history", history, "Dialogue history text");

  auto* exec = app.add_subcommand("exec", "Run one sample and print intermediate attention maps");
  exec->add_option("--ckpt", ckpt, "Checkpoint")->required();
  exec->add_option("--sample", sample, "JSON-lines sample file; videos are read from ./videos next to it")
      ->required()
      ->check(CLI::ExistingFile);
  exec->add_option("--index", index, "Line of the sample file (from 0)");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of the tiny model");
  grad->add_flag("--full", full, "Check every coordinate");
  grad->add_option("--coords", coordinates, "Sampled coordinates")->check(CLI::PositiveNumber);
  grad->add_option("--seed", seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*gen) return cmd_gen_data(spec, n, seed, out);
    if (*train) return cmd_train(config, data, out, resume, log, epochs, threads);
    if (*eval) return cmd_eval(ckpt, data, split, json, threads);
    if (*parse) return cmd_parse(ckpt, question, history);
    if (*exec) return cmd_exec(ckpt, sample, index);
    if (*grad) return cmd_gradcheck(full, coordinates, seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kData;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
