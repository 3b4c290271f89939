#include "vgnmn/program.hpp"

#include <algorithm>
#include <array>

namespace vgnmn {

namespace {

constexpr std::array<std::string_view, 6> kKeywords = {"FIND", "SUMMARIZE", "WHERE", "WHEN", "DESCRIBE", "EXIST"};

std::string step_label(const Program& p, std::size_t i) {
  if (i >= p.steps.size()) return "end of program";
  return "step " + std::to_string(i) + " (" + std::string(module_keyword(p.steps[i].module)) + ")";
}

void check_param(const Program& p, std::size_t i, std::vector<Violation>& out) {
  const auto& s = p.steps[i];
  const auto kw = std::string(module_keyword(s.module));
  if (module_takes_param(s.module) && s.param.empty())
    out.push_back({i, ViolationCode::kMissingParam, step_label(p, i) + ": " + kw + " requires a nonempty param"});
  if (!module_takes_param(s.module) && !s.param.empty())
    out.push_back({i, ViolationCode::kUnexpectedParam, step_label(p, i) + ": " + kw + " must have empty param"});
  for (const auto& tok : s.param)
    if (module_from_keyword(tok))
      out.push_back({i, ViolationCode::kUnexpectedParam, step_label(p, i) + ": keyword '" + tok + "' inside a param"});
}

void validate_dialogue(const Program& p, std::vector<Violation>& out) {
  bool terminated = false;
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    const auto m = p.steps[i].module;
    if (!is_dialogue_module(m)) {
      out.push_back({i, ViolationCode::kWrongKind, step_label(p, i) + ": video-kind module in dialogue program"});
      continue;
    }
    if (terminated) {
      out.push_back({i, ViolationCode::kAfterTerminal, step_label(p, i) + ": step after SUMMARIZE"});
      continue;
    }
    if (m == ModuleKind::kSummarize) terminated = true;
  }
  if (!terminated)
    out.push_back({p.steps.size(), ViolationCode::kMissingTerminal, "dialogue program must end with SUMMARIZE"});
}

void validate_video(const Program& p, std::vector<Violation>& out) {
  // phase: 0 = WHERE run, 1 = WHEN run, 2 = after terminal
  int phase = 0;
  std::size_t wheres = 0;
  bool terminated = false;
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    const auto m = p.steps[i].module;
    if (is_dialogue_module(m)) {
      out.push_back({i, ViolationCode::kWrongKind, step_label(p, i) + ": dialogue-kind module in video program"});
      continue;
    }
    if (terminated) {
      out.push_back({i, ViolationCode::kAfterTerminal, step_label(p, i) + ": step after the terminal module"});
      continue;
    }
    switch (m) {
      case ModuleKind::kWhere:
        if (phase > 0)
          out.push_back({i, ViolationCode::kOutOfOrder, step_label(p, i) + ": WHERE after WHEN"});
        ++wheres;
        break;
      case ModuleKind::kWhen:
        phase = 1;
        break;
      default:
        terminated = true;
        phase = 2;
        break;
    }
  }
  if (wheres == 0) out.push_back({0, ViolationCode::kMissingEntity, "video program needs at least one WHERE step"});
  if (!terminated)
    out.push_back({p.steps.size(), ViolationCode::kMissingTerminal, "video program must end with DESCRIBE or EXIST"});
}

}  // namespace

std::string_view module_keyword(ModuleKind m) { return kKeywords[static_cast<std::size_t>(m)]; }

std::optional<ModuleKind> module_from_keyword(std::string_view token) {
  for (std::size_t i = 0; i < kKeywords.size(); ++i)
    if (kKeywords[i] == token) return static_cast<ModuleKind>(i);
  return std::nullopt;
}

bool is_dialogue_module(ModuleKind m) { return m == ModuleKind::kFind || m == ModuleKind::kSummarize; }

bool module_takes_param(ModuleKind m) { return m != ModuleKind::kSummarize && m != ModuleKind::kExist; }

std::string_view program_kind_name(ProgramKind k) { return k == ProgramKind::kDialogue ? "dialogue" : "video"; }

std::size_t Program::count(ModuleKind m) const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [m](const ProgramStep& s) { return s.module == m; }));
}

std::size_t Program::entity_count() const {
  return count(kind == ProgramKind::kDialogue ? ModuleKind::kFind : ModuleKind::kWhere);
}

std::string_view violation_name(ViolationCode code) {
  switch (code) {
    case ViolationCode::kDanglingParam: return "dangling-param";
    case ViolationCode::kMissingParam: return "missing-param";
    case ViolationCode::kUnexpectedParam: return "unexpected-param";
    case ViolationCode::kWrongKind: return "wrong-kind";
    case ViolationCode::kMissingEntity: return "missing-entity";
    case ViolationCode::kOutOfOrder: return "out-of-order";
    case ViolationCode::kAfterTerminal: return "after-terminal";
    case ViolationCode::kMissingTerminal: return "missing-terminal";
  }
  return "unknown";
}

ProgramError::ProgramError(std::vector<Violation> violations)
    : DataError(violations.empty() ? std::string("invalid program")
                                   : "invalid program: " + std::string(violation_name(violations.front().code)) +
                                         " at " + violations.front().message),
      violations_(std::move(violations)) {}

std::vector<Violation> validate_program(const Program& p) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < p.steps.size(); ++i) check_param(p, i, out);
  if (p.kind == ProgramKind::kDialogue)
    validate_dialogue(p, out);
  else
    validate_video(p, out);
  std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) { return a.step < b.step; });
  return out;
}

Program parse_program(std::span<const std::string> tokens, ProgramKind kind) {
  Program p{kind, {}};
  std::vector<std::string> pending;
  for (const auto& tok : tokens) {
    if (auto m = module_from_keyword(tok)) {
      p.steps.push_back({std::move(pending), *m});
      pending.clear();
    } else {
      pending.push_back(tok);
    }
  }
  auto violations = validate_program(p);
  if (!pending.empty())
    violations.push_back({p.steps.size(), ViolationCode::kDanglingParam,
                          "param '" + join_tokens(pending) + "' is not closed by a module keyword"});
  if (!violations.empty()) throw ProgramError(std::move(violations));
  return p;
}

Program parse_program(std::string_view text, ProgramKind kind) {
  auto tokens = split_tokens(text);
  return parse_program(std::span<const std::string>(tokens), kind);
}

Program parse_program(std::span<const std::size_t> ids, const Vocab& vocab, ProgramKind kind) {
  std::vector<std::string> tokens;
  for (auto id : ids) {
    if (id == Vocab::kEos) break;
    tokens.push_back(vocab.token(id));
  }
  return parse_program(std::span<const std::string>(tokens), kind);
}

std::vector<std::string> serialize_program(const Program& p) {
  auto violations = validate_program(p);
  if (!violations.empty()) throw ProgramError(std::move(violations));
  std::vector<std::string> out;
  for (const auto& s : p.steps) {
    out.insert(out.end(), s.param.begin(), s.param.end());
    out.emplace_back(module_keyword(s.module));
  }
  return out;
}

std::string program_to_string(const Program& p) { return join_tokens(serialize_program(p)); }

bool program_exact_match(const Program& pred, const Program& gold) { return pred == gold; }

}  // namespace vgnmn
