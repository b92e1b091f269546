#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace comix {

// Token with byte offsets into the original string, [begin, end).
struct Token {
  std::string text;
  int begin = 0;
  int end = 0;
};

// Lowercases and splits on whitespace after detaching the punctuation set
// {',', ';', '?', '!', '.', '\''} into standalone tokens.
std::vector<Token> tokenize_with_offsets(const std::string& text);
std::vector<std::string> tokenize(const std::string& text);

std::string join_tokens(const std::vector<std::string>& tokens);

uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(uint64_t h);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
uint64_t hash_file(const std::string& path);

}  // namespace comix
