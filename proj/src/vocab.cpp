#include "vgnmn/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "vgnmn/tensor.hpp"

namespace vgnmn {

Vocab::Vocab() {
  for (auto t : kReserved) add(t);
}

std::size_t Vocab::add(std::string_view token) {
  if (token.empty()) throw DataError("vocabulary tokens must be nonempty");
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  const std::size_t id = tokens_.size();
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

std::size_t Vocab::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

const std::string& Vocab::token(std::size_t index) const {
  if (index >= tokens_.size()) throw IndexError("token index " + std::to_string(index) + " outside vocabulary");
  return tokens_[index];
}

std::vector<std::size_t> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(index(t));
  return ids;
}

std::vector<std::string> Vocab::decode(const std::vector<std::size_t>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(token(id));
  return out;
}

std::string Vocab::to_text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += std::to_string(i);
    out += '\t';
    out += tokens_[i];
    out += '\n';
  }
  return out;
}

Vocab Vocab::from_text(std::string_view text) {
  Vocab v;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("vocab line without tab: '" + line + "'");
    std::size_t idx = 0;
    try {
      idx = std::stoul(line.substr(0, tab));
    } catch (const std::exception&) {
      throw DataError("vocab line with bad index: '" + line + "'");
    }
    const std::string tok = line.substr(tab + 1);
    if (idx != expected) throw DataError("vocab indices must be dense, expected " + std::to_string(expected));
    if (idx < kFirstFree) {
      if (tok != kReserved[idx]) throw DataError("reserved vocab entry " + std::to_string(idx) + " is '" + tok + "'");
    } else if (v.add(tok) != idx) {
      throw DataError("duplicate vocab token '" + tok + "'");
    }
    ++expected;
  }
  if (expected < kFirstFree) throw DataError("vocab file lacks the reserved tokens");
  return v;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocab to " + path);
  out << to_text();
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read vocab from " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  auto out = split_tokens(text);
  for (auto& t : out)
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace vgnmn
