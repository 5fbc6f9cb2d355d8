#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace suiteeval {

enum class Stemmer { kNone, kPorter };

struct TokenizerConfig {
  bool lowercase = true;
  std::set<std::string> stopwords;
  Stemmer stem = Stemmer::kNone;

  // Stable 64-bit hex digest over every field; stored with the index so a
  // workspace built under a different configuration is never reused.
  std::string fingerprint() const;
  std::string describe() const;

  bool operator==(const TokenizerConfig&) const = default;
};

// Tokens are maximal runs of alphanumeric code points. Input is decoded as
// UTF-8; ASCII letters/digits are alphanumeric, non-ASCII code points are
// alphanumeric unless they fall in a known punctuation, symbol or space
// block. Invalid UTF-8 bytes act as separators.
//
// Lowercasing covers ASCII, Latin-1, Greek and basic Cyrillic capitals.
// Stopwords are removed after lowercasing and before stemming.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config);

// Porter (1980) suffix stripper, following the reference C implementation.
// Words containing anything other than a-z are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace suiteeval
