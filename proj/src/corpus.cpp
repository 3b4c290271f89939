#include "vgnmn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "vgnmn/ops.hpp"

namespace vgnmn {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace binio {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace binio

namespace {

constexpr std::string_view kVideoMagic = "VGVF";
const std::vector<std::string> kSplits = {"train", "val", "test"};
const char* const kPositions[] = {"left", "middle", "right"};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct Placement {
  std::size_t entity;
  std::size_t action;
  std::size_t position;  // 0 left, 1 middle, 2 right
  std::size_t start, end;  // active frames [start, end)
};

struct World {
  std::vector<std::vector<double>> entity_vis, action_vis, action_aud;
};

std::vector<double> normal_vec(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

VideoFeatures render_video(const WorldSpec& spec, const World& world, const std::vector<Placement>& cast, Rng& rng) {
  const std::size_t f = spec.frames, o = spec.objects, dv = spec.d_vis, da = spec.d_aud;
  std::normal_distribution<double> noise(0.0, spec.noise);
  std::uniform_real_distribution<double> jitter(-0.06, 0.06), top(0.1, 0.5);
  std::vector<double> obj(f * o * dv), coords(f * o * 4), cnn(f * dv), aud(f * da);
  std::vector<double> y0(cast.size());
  for (auto& y : y0) y = top(rng);
  std::vector<std::size_t> order(o);
  for (std::size_t t = 0; t < f; ++t) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t slot = 0; slot < o; ++slot) {
      const auto& p = cast[order[slot]];
      const bool active = t >= p.start && t < p.end;
      for (std::size_t c = 0; c < dv; ++c) {
        double v = world.entity_vis[p.entity][c] + noise(rng);
        if (active) v += world.action_vis[p.action][c];
        obj[(t * o + slot) * dv + c] = f32(v);
      }
      const double cx = (static_cast<double>(p.position) + 0.5) / 3.0 + jitter(rng);
      const double box[4] = {cx - 0.1, y0[order[slot]], cx + 0.1, y0[order[slot]] + 0.3};
      for (std::size_t c = 0; c < 4; ++c) coords[(t * o + slot) * 4 + c] = f32(std::clamp(box[c], 0.0, 1.0));
    }
    for (std::size_t c = 0; c < dv; ++c) {
      double v = noise(rng);
      for (const auto& p : cast)
        if (t >= p.start && t < p.end) v += world.action_vis[p.action][c];
      cnn[t * dv + c] = f32(v);
    }
    for (std::size_t c = 0; c < da; ++c) {
      double v = noise(rng);
      for (const auto& p : cast)
        if (t >= p.start && t < p.end) v += world.action_aud[p.action][c];
      aud[t * da + c] = f32(v);
    }
  }
  return {Tensor({f, o, dv}, std::move(obj)), Tensor({f, o, 4}, std::move(coords)), Tensor({f, dv}, std::move(cnn)),
          Tensor({f, da}, std::move(aud))};
}

std::vector<std::string> position_phrase(std::size_t position) {
  if (position == 1) return {"in", "the", "middle"};
  return {"on", "the", kPositions[position]};
}

void append(std::vector<std::string>& out, const std::vector<std::string>& more) {
  out.insert(out.end(), more.begin(), more.end());
}

std::vector<DialogueSample> make_dialogue(const WorldSpec& spec, const std::vector<Placement>& cast,
                                          const std::string& dialogue_id, const std::string& video_id, Rng& rng) {
  std::uniform_int_distribution<std::size_t> turns_dist(spec.min_turns, spec.max_turns);
  std::uniform_int_distribution<std::size_t> template_dist(0, 4), member(0, cast.size() - 1),
      action_dist(0, spec.actions.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<DialogueSample> out;
  std::vector<std::string> history;
  std::vector<std::size_t> mentioned;  // cast indices mentioned so far
  const std::size_t turns = turns_dist(rng);
  for (std::size_t turn = 0; turn < turns; ++turn) {
    const std::size_t kind = template_dist(rng);

    // antecedents whose pronoun is unambiguous within the history
    std::vector<std::size_t> antecedents;
    for (auto m : std::set<std::size_t>(mentioned.begin(), mentioned.end())) {
      const auto& pron = spec.entities[cast[m].entity].pronoun;
      std::set<std::size_t> same;
      for (auto other : mentioned)
        if (spec.entities[cast[other].entity].pronoun == pron) same.insert(cast[other].entity);
      if (same.size() == 1) antecedents.push_back(m);
    }
    std::size_t subject;
    bool pronoun = false;
    if (!antecedents.empty() && unit(rng) < spec.coref_rate) {
      std::uniform_int_distribution<std::size_t> pick(0, antecedents.size() - 1);
      subject = antecedents[pick(rng)];
      pronoun = true;
    } else {
      subject = member(rng);
    }
    const auto& place = cast[subject];
    const auto& ent = spec.entities[place.entity];
    const std::vector<std::string> named = {"the", ent.name};
    const std::vector<std::string> subj = pronoun ? std::vector<std::string>{ent.pronoun} : named;
    const std::string& action = spec.actions[place.action];

    DialogueSample s;
    s.dialogue_id = dialogue_id;
    s.video_id = video_id;
    s.turn = turn;
    s.history = history;
    s.dialogue_program.kind = ProgramKind::kDialogue;
    if (pronoun) s.dialogue_program.steps.push_back({{ent.pronoun}, ModuleKind::kFind});
    s.dialogue_program.steps.push_back({{}, ModuleKind::kSummarize});
    auto& vp = s.video_program;
    vp.kind = ProgramKind::kVideo;
    vp.steps.push_back({named, ModuleKind::kWhere});
    std::vector<std::size_t> mentions = {subject};

    switch (kind) {
      case 0:  // what is X doing
        s.question = {"what", "is"};
        append(s.question, subj);
        s.question.push_back("doing");
        vp.steps.push_back({{"doing"}, ModuleKind::kDescribe});
        s.response = subj;
        append(s.response, {"is", action});
        break;
      case 1:  // where is X
        s.question = {"where", "is"};
        append(s.question, subj);
        vp.steps.push_back({{"where"}, ModuleKind::kDescribe});
        s.response = subj;
        s.response.push_back("is");
        append(s.response, position_phrase(place.position));
        break;
      case 2: {  // is X <action>
        std::size_t asked = place.action;
        if (unit(rng) < 0.5) {
          asked = action_dist(rng);
          if (asked == place.action) asked = (asked + 1) % spec.actions.size();
        }
        s.question = {"is"};
        append(s.question, subj);
        s.question.push_back(spec.actions[asked]);
        vp.steps.push_back({{spec.actions[asked]}, ModuleKind::kWhen});
        vp.steps.push_back({{}, ModuleKind::kExist});
        s.response = {asked == place.action ? "yes" : "no"};
        break;
      }
      case 3: {  // is X left of Y
        std::size_t other = member(rng);
        if (other == subject) other = (other + 1) % cast.size();
        const auto& oent = spec.entities[cast[other].entity];
        s.question = {"is"};
        append(s.question, subj);
        append(s.question, {"left", "of", "the", oent.name});
        vp.steps.push_back({{"the", oent.name}, ModuleKind::kWhere});
        vp.steps.push_back({{}, ModuleKind::kExist});
        s.response = {place.position < cast[other].position ? "yes" : "no"};
        mentions.push_back(other);
        break;
      }
      default:  // where is X while <action>
        s.question = {"where", "is"};
        append(s.question, subj);
        append(s.question, {"while", action});
        vp.steps.push_back({{action}, ModuleKind::kWhen});
        vp.steps.push_back({{"where"}, ModuleKind::kDescribe});
        s.response = subj;
        s.response.push_back("is");
        append(s.response, position_phrase(place.position));
        break;
    }
    append(history, s.question);
    append(history, s.response);
    mentioned.insert(mentioned.end(), mentions.begin(), mentions.end());
    out.push_back(std::move(s));
  }
  return out;
}

void write_header(binio::Writer& w) { w.bytes(kVideoMagic); }

}  // namespace

void WorldSpec::validate() const {
  if (entities.empty() || actions.empty()) throw ConfigError("world needs entities and actions");
  if (objects == 0 || frames == 0) throw ConfigError("world needs at least one frame and one object slot");
  if (objects > entities.size())
    throw ConfigError("world has " + std::to_string(objects) + " object slots but only " +
                      std::to_string(entities.size()) + " entities");
  if (objects < 2) throw ConfigError("world needs at least two object slots for relational questions");
  if (actions.size() < 2) throw ConfigError("world needs at least two actions");
  if (min_turns == 0 || min_turns > max_turns) throw ConfigError("world turn range is invalid");
  if (coref_rate < 0.0 || coref_rate > 1.0) throw ConfigError("coref_rate must lie in [0,1]");
  if (noise < 0.0) throw ConfigError("noise must be non-negative");
  for (const auto& e : entities)
    if (e.pronoun != "he" && e.pronoun != "she" && e.pronoun != "it")
      throw ConfigError("entity '" + e.name + "' has unsupported pronoun '" + e.pronoun + "'");
}

WorldSpec WorldSpec::from_config(const KvConfig& cfg) {
  cfg.require_known({"entities", "actions", "frames", "objects", "d_vis", "d_aud", "min_turns", "max_turns",
                     "coref_rate", "noise"});
  WorldSpec spec;
  if (cfg.has("entities")) {
    spec.entities.clear();
    for (const auto& item : split_list(cfg.get_string("entities", ""))) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError("entity '" + item + "' must be name:pronoun");
      spec.entities.push_back({item.substr(0, colon), item.substr(colon + 1)});
    }
  }
  if (cfg.has("actions")) spec.actions = split_list(cfg.get_string("actions", ""));
  spec.frames = cfg.get_size("frames", spec.frames);
  spec.objects = cfg.get_size("objects", spec.objects);
  spec.d_vis = cfg.get_size("d_vis", spec.d_vis);
  spec.d_aud = cfg.get_size("d_aud", spec.d_aud);
  spec.min_turns = cfg.get_size("min_turns", spec.min_turns);
  spec.max_turns = cfg.get_size("max_turns", spec.max_turns);
  spec.coref_rate = cfg.get_double("coref_rate", spec.coref_rate);
  spec.noise = cfg.get_double("noise", spec.noise);
  spec.validate();
  return spec;
}

KvConfig WorldSpec::to_config() const {
  KvConfig cfg;
  std::string ents, acts;
  for (const auto& e : entities) ents += (ents.empty() ? "" : ",") + e.name + ":" + e.pronoun;
  for (const auto& a : actions) acts += (acts.empty() ? "" : ",") + a;
  cfg.set("entities", ents);
  cfg.set("actions", acts);
  cfg.set("frames", std::to_string(frames));
  cfg.set("objects", std::to_string(objects));
  cfg.set("d_vis", std::to_string(d_vis));
  cfg.set("d_aud", std::to_string(d_aud));
  cfg.set("min_turns", std::to_string(min_turns));
  cfg.set("max_turns", std::to_string(max_turns));
  std::ostringstream rate, noise_text;
  rate << coref_rate;
  noise_text << noise;
  cfg.set("coref_rate", rate.str());
  cfg.set("noise", noise_text.str());
  return cfg;
}

const std::vector<DialogueSample>& Corpus::split(const std::string& name) const {
  auto it = splits.find(name);
  if (it == splits.end()) throw DataError("corpus has no split '" + name + "'");
  return it->second;
}

const VideoFeatures& Corpus::video(const std::string& id) const {
  auto it = videos.find(id);
  if (it == videos.end()) throw DataError("corpus has no video '" + id + "'");
  return it->second;
}

Vocab world_vocab(const WorldSpec& spec) {
  Vocab v;
  for (const char* w : {"what", "is", "the", "doing", "where", "while", "left", "of", "on", "in", "middle", "right",
                        "yes", "no"})
    v.add(w);
  for (const char* p : {"he", "she", "it"}) v.add(p);
  for (const auto& e : spec.entities) v.add(e.name);
  for (const auto& a : spec.actions) v.add(a);
  return v;
}

Corpus generate_corpus(const WorldSpec& spec, std::size_t n_dialogues, std::uint64_t seed) {
  spec.validate();
  if (n_dialogues == 0) throw ConfigError("corpus needs at least one dialogue");
  Rng rng(seed);
  World world;
  for (std::size_t e = 0; e < spec.entities.size(); ++e) world.entity_vis.push_back(normal_vec(spec.d_vis, rng));
  for (std::size_t a = 0; a < spec.actions.size(); ++a) {
    world.action_vis.push_back(normal_vec(spec.d_vis, rng));
    world.action_aud.push_back(normal_vec(spec.d_aud, rng));
  }

  Corpus corpus;
  corpus.vocab = world_vocab(spec);
  std::vector<std::size_t> order(n_dialogues);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_val = n_dialogues / 10, n_test = n_dialogues / 10;
  std::vector<std::string> assignment(n_dialogues, "train");
  for (std::size_t i = 0; i < n_val; ++i) assignment[order[i]] = "val";
  for (std::size_t i = n_val; i < n_val + n_test; ++i) assignment[order[i]] = "test";
  for (const auto& name : kSplits) corpus.splits[name];

  std::vector<std::size_t> entity_ids(spec.entities.size());
  std::iota(entity_ids.begin(), entity_ids.end(), 0);
  std::uniform_int_distribution<std::size_t> action_dist(0, spec.actions.size() - 1), pos_dist(0, 2);
  for (std::size_t i = 0; i < n_dialogues; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "%05zu", i);
    const std::string dialogue_id = std::string("d") + id, video_id = std::string("v") + id;

    std::shuffle(entity_ids.begin(), entity_ids.end(), rng);
    std::vector<Placement> cast;
    const std::size_t half = std::max<std::size_t>(1, spec.frames / 2);
    for (std::size_t k = 0; k < spec.objects; ++k) {
      std::uniform_int_distribution<std::size_t> start_dist(0, spec.frames - half);
      const std::size_t start = start_dist(rng);
      std::uniform_int_distribution<std::size_t> end_dist(start + half, spec.frames);
      cast.push_back({entity_ids[k], action_dist(rng), pos_dist(rng), start, end_dist(rng)});
    }
    corpus.videos.emplace(video_id, render_video(spec, world, cast, rng));
    auto turns = make_dialogue(spec, cast, dialogue_id, video_id, rng);
    auto& split = corpus.splits[assignment[i]];
    split.insert(split.end(), turns.begin(), turns.end());
  }
  return corpus;
}

std::string sample_to_json(const DialogueSample& s) {
  json j;
  j["dialogue_id"] = s.dialogue_id;
  j["video_id"] = s.video_id;
  j["turn"] = s.turn;
  j["history"] = join_tokens(s.history);
  j["question"] = join_tokens(s.question);
  j["dialogue_program"] = program_to_string(s.dialogue_program);
  j["video_program"] = program_to_string(s.video_program);
  j["response"] = join_tokens(s.response);
  return j.dump();
}

DialogueSample sample_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed sample record: ") + e.what());
  }
  auto field = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_string()) throw DataError(std::string("sample record lacks string field '") + key + "'");
    return j[key].get<std::string>();
  };
  DialogueSample s;
  s.dialogue_id = field("dialogue_id");
  s.video_id = field("video_id");
  if (!j.contains("turn") || !j["turn"].is_number_unsigned()) throw DataError("sample record lacks field 'turn'");
  s.turn = j["turn"].get<std::size_t>();
  s.history = split_tokens(field("history"));
  s.question = split_tokens(field("question"));
  s.dialogue_program = parse_program(field("dialogue_program"), ProgramKind::kDialogue);
  s.video_program = parse_program(field("video_program"), ProgramKind::kVideo);
  s.response = split_tokens(field("response"));
  if (s.question.empty() || s.response.empty()) throw DataError("sample " + s.dialogue_id + " has an empty question or response");
  return s;
}

std::vector<DialogueSample> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<DialogueSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(line));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_video(const VideoFeatures& video, const std::string& path) {
  binio::Writer w;
  write_header(w);
  for (const Tensor* t : {&video.obj, &video.coords, &video.cnn, &video.aud}) w.tensor(*t);
  binio::write_file(path, w.data());
}

VideoFeatures load_video(const std::string& path) {
  const auto data = binio::read_file(path);
  binio::Reader r(data, path);
  if (r.bytes(kVideoMagic.size()) != kVideoMagic) r.fail("not a video feature file");
  VideoFeatures v;
  v.obj = r.tensor(3);
  v.coords = r.tensor(3);
  v.cnn = r.tensor(2);
  v.aud = r.tensor(2);
  if (!r.at_end()) r.fail("trailing bytes");
  v.validate();
  return v;
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "videos");
  corpus.vocab.save((fs::path(dir) / "vocab.txt").string());
  for (const auto& [name, samples] : corpus.splits) {
    std::string text;
    for (const auto& s : samples) text += sample_to_json(s) + "\n";
    binio::write_file((fs::path(dir) / (name + ".jsonl")).string(), text);
  }
  for (const auto& [id, video] : corpus.videos) save_video(video, (fs::path(dir) / "videos" / (id + ".bin")).string());
}

Corpus read_corpus(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("corpus directory '" + dir + "' does not exist");
  Corpus corpus;
  corpus.vocab = Vocab::load((fs::path(dir) / "vocab.txt").string());
  for (const auto& name : kSplits) {
    const auto path = fs::path(dir) / (name + ".jsonl");
    if (!fs::exists(path)) continue;
    corpus.splits[name] = read_samples(path.string());
    for (const auto& s : corpus.splits[name])
      if (!corpus.videos.count(s.video_id))
        corpus.videos.emplace(s.video_id, load_video((fs::path(dir) / "videos" / (s.video_id + ".bin")).string()));
  }
  return corpus;
}

}  // namespace vgnmn
