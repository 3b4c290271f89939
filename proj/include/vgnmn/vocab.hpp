#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vgnmn {

/// Shared input/output vocabulary. Indices are dense; the reserved block
/// [0, kFirstFree) is identical in every vocabulary.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kSos = 1;
  static constexpr std::size_t kEos = 2;
  static constexpr std::size_t kUnk = 3;
  static constexpr std::size_t kFirstModule = 4;  // FIND..EXIST occupy 4..9
  static constexpr std::size_t kFirstFree = 10;

  static constexpr std::array<std::string_view, kFirstFree> kReserved = {
      "<pad>", "<sos>", "<eos>", "<unk>", "FIND", "SUMMARIZE", "WHERE", "WHEN", "DESCRIBE", "EXIST"};

  Vocab();

  /// Index of `token`, adding it if new.
  std::size_t add(std::string_view token);
  /// Index of `token`, or kUnk.
  std::size_t index(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t index) const;
  std::size_t size() const { return tokens_.size(); }

  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<std::size_t>& ids) const;

  /// "index<TAB>token" per line.
  std::string to_text() const;
  static Vocab from_text(std::string_view text);
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Lowercased whitespace tokenization for natural-language text.
std::vector<std::string> tokenize(std::string_view text);
/// Whitespace split preserving case (program strings carry uppercase keywords).
std::vector<std::string> split_tokens(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);

enum class TokenRole { kHistory, kQuestion, kProgram, kResponse };

struct TokenSeq {
  std::vector<std::size_t> ids;
  TokenRole role = TokenRole::kQuestion;
};

}  // namespace vgnmn
