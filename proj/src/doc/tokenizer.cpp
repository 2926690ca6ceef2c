#include "docgraph/doc/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace docgraph::doc {
namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace

TokenizerMode parse_tokenizer_mode(std::string_view name) {
  if (name == "word") return TokenizerMode::word;
  if (name == "character" || name == "char") return TokenizerMode::character;
  throw std::invalid_argument("unknown tokenizer mode '" + std::string(name) + "'");
}

std::string_view to_string(TokenizerMode mode) { return mode == TokenizerMode::word ? "word" : "character"; }

std::vector<std::string> tokenize(std::string_view text, TokenizerMode mode) {
  std::vector<std::string> tokens;
  if (mode == TokenizerMode::character) {
    for (std::size_t i = 0; i < text.size();) {
      const auto c = static_cast<unsigned char>(text[i]);
      const std::size_t len = std::min(utf8_length(c), text.size() - i);
      if (!is_space(c)) tokens.emplace_back(text.substr(i, len));
      i += len;
    }
    return tokens;
  }
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      current.push_back(ch);
    }
  }
  flush();
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens, TokenizerMode mode) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i && mode == TokenizerMode::word) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string normalize_value(std::string_view value, TokenizerMode mode) {
  return join_tokens(tokenize(value, mode), mode);
}

}  // namespace docgraph::doc
