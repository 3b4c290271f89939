#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vgnmn/tensor.hpp"
#include "vgnmn/vocab.hpp"

namespace vgnmn {

enum class ModuleKind { kFind, kSummarize, kWhere, kWhen, kDescribe, kExist };
enum class ProgramKind { kDialogue, kVideo };

std::string_view module_keyword(ModuleKind m);
std::optional<ModuleKind> module_from_keyword(std::string_view token);
bool is_dialogue_module(ModuleKind m);
/// FIND, WHERE, WHEN and DESCRIBE take a parameter; SUMMARIZE and EXIST do not.
bool module_takes_param(ModuleKind m);
std::string_view program_kind_name(ProgramKind k);

struct ProgramStep {
  std::vector<std::string> param;
  ModuleKind module;

  bool operator==(const ProgramStep&) const = default;
};

/// Grammar:
///   dialogue := (param FIND)* SUMMARIZE
///   video    := (param WHERE)+ (param WHEN)* (param DESCRIBE | EXIST)
struct Program {
  ProgramKind kind = ProgramKind::kDialogue;
  std::vector<ProgramStep> steps;

  std::size_t count(ModuleKind m) const;
  /// FIND steps of a dialogue program, WHERE steps of a video program.
  std::size_t entity_count() const;
  std::size_t action_count() const { return count(ModuleKind::kWhen); }
  ModuleKind terminal() const { return steps.back().module; }

  bool operator==(const Program&) const = default;
};

enum class ViolationCode {
  kDanglingParam,     // parameter tokens after the last module keyword
  kMissingParam,      // module requires a nonempty parameter
  kUnexpectedParam,   // module requires an empty parameter
  kWrongKind,         // module belongs to the other program kind
  kMissingEntity,     // video program without a WHERE step
  kOutOfOrder,        // step appears after a later-phase step
  kAfterTerminal,     // step after SUMMARIZE / DESCRIBE / EXIST
  kMissingTerminal,   // program does not end with its terminal module
};

std::string_view violation_name(ViolationCode code);

struct Violation {
  std::size_t step;  // offending step index; steps.size() for end-of-program
  ViolationCode code;
  std::string message;

  bool operator==(const Violation&) const = default;
};

class ProgramError : public DataError {
 public:
  explicit ProgramError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Greedy left-to-right split: each keyword closes a step whose parameter is
/// the run of non-keyword tokens since the previous keyword.
Program parse_program(std::span<const std::string> tokens, ProgramKind kind);
Program parse_program(std::string_view text, ProgramKind kind);
/// Parses decoder output ids; stops at the first <eos>.
Program parse_program(std::span<const std::size_t> ids, const Vocab& vocab, ProgramKind kind);

/// All grammar violations of `p`; empty when valid. Never throws.
std::vector<Violation> validate_program(const Program& p);

/// Inverse of parse_program. Throws ProgramError on invalid input.
std::vector<std::string> serialize_program(const Program& p);
std::string program_to_string(const Program& p);

/// Same kind and token-identical steps.
bool program_exact_match(const Program& pred, const Program& gold);

}  // namespace vgnmn
