#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace docgraph::doc {

enum class TokenizerMode {
  /// Whitespace separates tokens; every ASCII punctuation character is a
  /// token of its own.
  word,
  /// One token per non-whitespace UTF-8 code point (scripts without spaces).
  character,
};

TokenizerMode parse_tokenizer_mode(std::string_view name);
std::string_view to_string(TokenizerMode mode);

std::vector<std::string> tokenize(std::string_view text, TokenizerMode mode = TokenizerMode::word);

/// Tokens joined by a single space (word mode) or nothing (character mode).
std::string join_tokens(const std::vector<std::string>& tokens, TokenizerMode mode = TokenizerMode::word);

/// Canonical surface form used for entity matching: join_tokens(tokenize(v)).
std::string normalize_value(std::string_view value, TokenizerMode mode = TokenizerMode::word);

}  // namespace docgraph::doc
