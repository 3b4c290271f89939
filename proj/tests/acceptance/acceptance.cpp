// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "oracle.hpp"
#include "vgnmn/beam_search.hpp"
#include "vgnmn/checkpoint.hpp"
#include "vgnmn/diagnostics.hpp"
#include "vgnmn/evaluate.hpp"
#include "vgnmn/training.hpp"

using namespace vgnmn;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::map<int, Outcome> results;

void report(int id, const std::string& name, const Outcome& o) {
  results[id] = o;
  std::cout << "[" << (o.pass ? "PASS" : "FAIL") << "] " << id << " " << name << ": " << o.detail << std::endl;
}

template <class F>
void criterion(int id, const std::string& name, F&& body) {
  try {
    report(id, name, body());
  } catch (const std::exception& e) {
    report(id, name, {false, std::string("exception: ") + e.what()});
  }
}

// 1
Outcome gradient_check() {
  const auto start = Clock::now();
  const auto r = tiny_grad_check(200, 1);
  const double secs = seconds_since(start);
  const auto setup = tiny_setup();
  const auto vocab = world_vocab(setup.world);
  return {r.max_rel_error <= 1e-4 && r.checked >= 100 && secs < 120.0,
          fmt("max rel err %.3e over %zu coords (%zu nonzero) at %s; d=%zu heads=%zu |V|=%zu F=%zu O=%zu; %.1fs",
              r.max_rel_error, r.checked, r.nonzero, r.worst.c_str(), setup.config.model.d, setup.config.model.heads,
              vocab.size(), setup.world.frames, setup.world.objects, secs)};
}

// 2
Outcome executor_oracle() {
  const std::size_t cases = 25;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < cases; ++seed)
    worst = std::max(worst, oracle::check_case(oracle::random_case(1000 + seed)).worst());
  return {worst <= 1e-12, fmt("%zu random configurations, max |diff| %.3e", cases, worst)};
}

// 3
Program random_program(Rng& rng) {
  static const std::vector<std::string> words = {"the", "boy", "dog", "red", "running", "left", "of"};
  std::uniform_int_distribution<int> count(0, 3), coin(0, 1);
  std::uniform_int_distribution<std::size_t> len(1, 3), word(0, words.size() - 1);
  auto param = [&] {
    std::vector<std::string> p(len(rng));
    for (auto& w : p) w = words[word(rng)];
    return p;
  };
  Program p;
  if (coin(rng) == 0) {
    p.kind = ProgramKind::kDialogue;
    for (int i = count(rng); i > 0; --i) p.steps.push_back({param(), ModuleKind::kFind});
    p.steps.push_back({{}, ModuleKind::kSummarize});
  } else {
    p.kind = ProgramKind::kVideo;
    for (int i = count(rng) + 1; i > 0; --i) p.steps.push_back({param(), ModuleKind::kWhere});
    for (int i = count(rng); i > 0; --i) p.steps.push_back({param(), ModuleKind::kWhen});
    if (coin(rng) == 0)
      p.steps.push_back({param(), ModuleKind::kDescribe});
    else
      p.steps.push_back({{}, ModuleKind::kExist});
  }
  return p;
}

bool reports(const Program& p, ViolationCode code) {
  for (const auto& v : validate_program(p))
    if (v.code == code) return true;
  return false;
}

Outcome dsl_round_trip() {
  Rng rng(77);
  std::size_t trips = 0, round_ok = 0, mutations = 0, mutation_ok = 0;
  for (int i = 0; i < 1200; ++i) {
    const auto p = random_program(rng);
    if (!validate_program(p).empty()) continue;
    ++trips;
    auto tokens = serialize_program(p);
    auto back = parse_program(std::span<const std::string>(tokens), p.kind);
    round_ok += back == p && serialize_program(back) == tokens;

    auto expect = [&](Program m, ViolationCode code) {
      ++mutations;
      mutation_ok += reports(m, code);
    };
    const bool video = p.kind == ProgramKind::kVideo;
    auto dropped = p;
    dropped.steps.pop_back();
    expect(dropped, ViolationCode::kMissingTerminal);
    auto after = p;
    after.steps.push_back(p.steps.front());
    expect(after, ViolationCode::kAfterTerminal);
    auto empty = p;
    if (empty.steps.size() > 1 || video) {
      empty.steps.front().param.clear();
      expect(empty, ViolationCode::kMissingParam);
    }
    auto extra = p;
    if (extra.steps.back().module != ModuleKind::kDescribe) {
      extra.steps.back().param = {"extra"};
      expect(extra, ViolationCode::kUnexpectedParam);
    }
    auto wrong = p;
    wrong.steps.insert(wrong.steps.begin(), {{"x"}, video ? ModuleKind::kFind : ModuleKind::kWhere});
    expect(wrong, ViolationCode::kWrongKind);
    if (video) {
      auto no_entity = p;
      std::erase_if(no_entity.steps, [](const ProgramStep& s) { return s.module == ModuleKind::kWhere; });
      expect(no_entity, ViolationCode::kMissingEntity);
      auto swapped = p;
      swapped.steps.insert(swapped.steps.begin(), {{"x"}, ModuleKind::kWhen});
      expect(swapped, ViolationCode::kOutOfOrder);
    }
    auto dangling = tokens;
    dangling.push_back("extra");
    ++mutations;
    try {
      parse_program(std::span<const std::string>(dangling), p.kind);
    } catch (const ProgramError& e) {
      for (const auto& v : e.violations()) mutation_ok += v.code == ViolationCode::kDanglingParam;
    }
  }
  return {trips >= 1000 && round_ok == trips && mutation_ok == mutations,
          fmt("%zu/%zu programs round trip; %zu/%zu mutations reported with the expected code", round_ok, trips,
              mutation_ok, mutations)};
}

// 4
double row_sum_error(const Tensor& w) {
  if (w.numel() == 0) return 0.0;
  const std::size_t cols = w.shape().back(), rows = w.numel() / cols;
  double worst = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += w[r * cols + c];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

Outcome normalization() {
  const auto setup = tiny_setup();
  auto corpus = generate_corpus(setup.world, 20, 8);
  Model model(setup.config.model, corpus.vocab, 2);
  double worst = 0.0;
  std::size_t maps = 0;
  for (const auto& s : corpus.split("train")) {
    const auto p = model.predict(s.history, s.question, corpus.video(s.video_id));
    for (const auto* group : {&p.trace.find, &p.trace.where_obj, &p.trace.where_cnn, &p.trace.where_aud,
                              &p.trace.when_visual, &p.trace.when_audio})
      for (const auto& w : *group) {
        worst = std::max(worst, row_sum_error(w));
        ++maps;
      }
    worst = std::max(worst, row_sum_error(p.trace.fusion));
    ++maps;
  }
  // decoder attention heads
  Rng rng(4);
  const auto& params = model.params();
  AttentionBlockWeights block{setup.config.model.heads,
                              params.get("response_decoder.l0.b1.wq"),
                              params.get("response_decoder.l0.b1.bq"),
                              params.get("response_decoder.l0.b1.wk"),
                              params.get("response_decoder.l0.b1.bk"),
                              params.get("response_decoder.l0.b1.wv"),
                              params.get("response_decoder.l0.b1.bv"),
                              params.get("response_decoder.l0.b1.wo"),
                              params.get("response_decoder.l0.b1.bo"),
                              {}, {}, {}, {}, {}, {}, {}, {}};
  for (bool causal : {false, true}) {
    auto x = oracle::random_tensor({5, setup.config.model.d}, rng, 3.0);
    std::vector<Tensor> heads;
    multi_head_attention(x, x, x, block, causal, &heads);
    for (const auto& h : heads) {
      worst = std::max(worst, row_sum_error(h));
      ++maps;
    }
  }
  return {worst <= 1e-6, fmt("%zu attention maps, max |row sum - 1| %.3e", maps, worst)};
}

// 5
struct RandomLm {
  std::size_t vocab;
  Rng rng;
  std::map<std::vector<std::size_t>, std::vector<double>> table;

  std::vector<double> operator()(std::span<const std::size_t> prefix) {
    std::vector<std::size_t> key(prefix.begin(), prefix.end());
    auto it = table.find(key);
    if (it != table.end()) return it->second;
    std::normal_distribution<double> normal(0.0, 2.0);
    std::vector<double> logits(vocab);
    for (auto& l : logits) l = normal(rng);
    return table[key] = logits;
  }
};

Outcome beam_oracle() {
  std::size_t agree = 0, greedy_agree = 0;
  const std::size_t trials = 100;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t v = 2 + t % 3, max_len = 1 + (t / 3) % 4;
    RandomLm lm{v, Rng(500 + t), {}};
    StepFn step = [&](std::span<const std::size_t> p) { return lm(p); };
    BeamOptions full{static_cast<std::size_t>(std::pow(v, max_len)), max_len, 0};
    const auto beam = beam_search(step, full);
    const auto exact = exhaustive_search(step, v, full);
    agree += !beam.empty() && beam.front().tokens == exact.front().tokens &&
             beam.front().finished == exact.front().finished && beam.front().score() == exact.front().score();

    BeamOptions narrow{1, max_len, 0};
    const auto one = beam_search(step, narrow);
    const auto greedy = greedy_decode(step, narrow);
    greedy_agree += one.front().tokens == greedy.tokens && one.front().finished == greedy.finished;
  }
  return {agree == trials && greedy_agree == trials,
          fmt("width |V|^len equals exhaustive search in %zu/%zu trials (|V| 2..4, len 1..4); width 1 equals greedy in "
              "%zu/%zu",
              agree, trials, greedy_agree, trials)};
}

// 7
Outcome loss_ablation() {
  const auto setup = tiny_setup();
  auto corpus = generate_corpus(setup.world, 20, 6);
  Model model(setup.config.model, corpus.vocab, 3);
  std::size_t samples = 0, exact = 0, decomposed = 0;
  for (const auto& s : corpus.split("train")) {
    ++samples;
    const auto& video = corpus.video(s.video_id);
    auto off = model.loss(s, video, {0.0, 0.0, 0.1});
    auto on = model.loss(s, video, {0.6, 1.7, 0.1});
    exact += off.total.item() == off.response.item() && off.response.item() == on.response.item();
    decomposed += on.total.item() == (0.6 * on.dialogue.item() + 1.7 * on.video.item()) + on.response.item();
  }
  std::vector<const DialogueSample*> batch;
  for (const auto& s : corpus.split("train"))
    if (batch.size() < 8) batch.push_back(&s);
  auto g = batch_gradient(model, batch, corpus, {0.0, 0.0, 0.1}, true, 1, 1);
  double parser_grad = 0.0;
  for (const auto& [name, values] : g.grads)
    if (name.starts_with("dialogue_parser.") || name.starts_with("video_parser."))
      for (double x : values) parser_grad = std::max(parser_grad, std::abs(x));
  return {exact == samples && decomposed == samples && parser_grad == 0.0,
          fmt("alpha=beta=0: total == L_res in %zu/%zu samples, max parser gradient %.1e; breakdown "
              "total == a*L_dial + b*L_vid + L_res bit-exact in %zu/%zu",
              exact, samples, parser_grad, decomposed, samples)};
}

// 8
Outcome noam() {
  const double a = noam_lr(15000, 128, 15000), b = noam_lr(1, 128, 15000);
  const bool peak = std::abs(a - 7.2169e-4) <= 1e-8;
  const bool first = std::abs(b - 4.811252243e-8) <= 1e-12;
  return {peak && first, fmt("lr(15000) = %.10e (target 7.2169e-4 +-1e-8), lr(1) = %.10e (closed form "
                             "128^-0.5 * 15000^-1.5 = 4.811252e-8; the stated 4.8116e-8 differs by 3.5e-12)",
                             a, b)};
}

// 9
Outcome determinism(const fs::path& dir) {
  const auto setup = tiny_setup();
  const auto corpus = generate_corpus(setup.world, 30, 12);
  auto config = setup.config;
  config.max_epochs = 3;
  std::vector<std::string> logs, best, last;
  for (std::size_t threads : {1, 3}) {
    config.threads = threads;
    Trainer t(config, corpus);
    std::ostringstream log;
    const auto tag = std::to_string(threads);
    t.train(&log, (dir / ("det_best_" + tag)).string(), (dir / ("det_last_" + tag)).string());
    logs.push_back(log.str());
    auto read = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    };
    best.push_back(read(dir / ("det_best_" + tag)));
    last.push_back(read(dir / ("det_last_" + tag)));
  }
  // the stored config records the thread count; compare the rest
  auto strip = [](const std::string& bytes) {
    auto c = parse_checkpoint(bytes);
    c.config.set("threads", "0");
    return serialize_checkpoint(c);
  };
  const bool same = logs[0] == logs[1] && strip(best[0]) == strip(best[1]) && strip(last[0]) == strip(last[1]);
  return {same && !logs[0].empty(),
          fmt("two 3-epoch runs (1 and 3 threads): logs %s, best checkpoints %s, last checkpoints %s",
              logs[0] == logs[1] ? "identical" : "differ", strip(best[0]) == strip(best[1]) ? "identical" : "differ",
              strip(last[0]) == strip(last[1]) ? "identical" : "differ")};
}

// 6 and 10
struct FullRun {
  fs::path ckpt;
  Corpus corpus;
  Metrics test;
};

Outcome full_training(const fs::path& dir, std::size_t dialogues, std::size_t epochs, std::optional<FullRun>& run) {
  const auto start = Clock::now();
  auto corpus = generate_corpus(WorldSpec{}, dialogues, 7);
  TrainConfig config;
  config.model.d = 64;
  config.model.heads = 8;
  config.warmup = 1000;
  config.max_epochs = epochs;
  config.seed = 1;
  Trainer trainer(config, corpus);
  const auto ckpt = dir / "full.ckpt";
  std::ofstream log(dir / "full.log.jsonl");
  trainer.train(&log, ckpt.string(), (dir / "full.ckpt.last").string(), [&](const EpochRecord& r) {
    std::cerr << "  epoch " << r.epoch << " total " << r.train.total << " val " << r.val_total << " ("
              << static_cast<int>(seconds_since(start)) << "s)" << std::endl;
  });
  const auto best = load_checkpoint(ckpt.string());
  Model model(TrainConfig::from_config(best.config).model, best.vocab, best.params.clone());
  const auto m = evaluate_split(model, corpus, "test");
  const double secs = seconds_since(start);
  const auto pronoun = model.parse({"is", "the", "dog", "running", "yes"}, {"what", "is", "it", "doing"});
  run = FullRun{ckpt, std::move(corpus), m};
  const bool pass = m.dialogue_program_em >= 0.90 && m.video_program_em >= 0.90 && m.response_token_accuracy >= 0.85 &&
                    secs <= 1800.0;
  return {pass, fmt("%zu dialogues, d=64, %zu epochs, best epoch %zu, %.0fs: test dialogue EM %.4f, video EM %.4f, "
                    "response token acc %.4f (strict %.4f), BLEU-4 %.4f; 'what is it doing' parses to '%s'",
                    dialogues, epochs, best.progress.best_epoch, secs, m.dialogue_program_em, m.video_program_em,
                    m.response_token_accuracy, m.response_token_accuracy_strict, m.bleu4,
                    program_to_string(pronoun.dialogue_program).c_str())};
}

Outcome checkpoint_round_trip(const fs::path& dir, const std::optional<FullRun>& run) {
  if (!run) return {false, "no trained checkpoint (criterion 6 did not produce one)"};
  std::ifstream in(run->ckpt, std::ios::binary);
  const std::string bytes(std::istreambuf_iterator<char>(in), {});
  const auto loaded = load_checkpoint(run->ckpt.string());
  const auto again = dir / "full_resaved.ckpt";
  save_checkpoint(again.string(), loaded);
  std::ifstream in2(again, std::ios::binary);
  const std::string bytes2(std::istreambuf_iterator<char>(in2), {});
  Model model(TrainConfig::from_config(loaded.config).model, loaded.vocab, loaded.params.clone());
  const auto m = evaluate_split(model, run->corpus, "test");
  const bool same_metrics = m.to_json() == run->test.to_json();
  return {bytes == bytes2 && same_metrics, fmt("save->load->save %s (%zu bytes); reloaded test metrics %s",
                                               bytes == bytes2 ? "byte-identical" : "differs", bytes.size(),
                                               same_metrics ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string workdir = (fs::temp_directory_path() / "vgnmn_acceptance").string();
  std::size_t dialogues = 2000, epochs = 15;
  bool skip_training = false;
  app.add_option("--workdir", workdir, "Scratch directory");
  app.add_option("--dialogues", dialogues, "Corpus size for the training criterion");
  app.add_option("--epochs", epochs, "Epochs for the training criterion");
  app.add_flag("--skip-training", skip_training, "Skip criteria 6 and 10 (reported as FAIL)");
  CLI11_PARSE(app, argc, argv);
  const fs::path dir(workdir);
  fs::create_directories(dir);

  criterion(1, "gradient check", gradient_check);
  criterion(2, "executor oracle", executor_oracle);
  criterion(3, "program DSL round trip", dsl_round_trip);
  criterion(4, "attention normalization", normalization);
  criterion(5, "beam search oracle", beam_oracle);
  std::optional<FullRun> run;
  if (skip_training) {
    report(6, "trained model quality", {false, "skipped"});
  } else {
    criterion(6, "trained model quality", [&] { return full_training(dir, dialogues, epochs, run); });
  }
  criterion(7, "loss ablation", loss_ablation);
  criterion(8, "noam schedule", noam);
  criterion(9, "determinism", [&] { return determinism(dir); });
  if (skip_training)
    report(10, "checkpoint round trip", {false, "skipped"});
  else
    criterion(10, "checkpoint round trip", [&] { return checkpoint_round_trip(dir, run); });

  std::size_t passed = 0;
  for (const auto& [id, o] : results) passed += o.pass;
  std::cout << passed << "/" << results.size() << " criteria passed" << std::endl;
  return passed == results.size() ? 0 : 1;
}
