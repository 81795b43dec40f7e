// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include "dupo/reward.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <unordered_map>

#include "dupo/errors.hpp"

namespace dupo::reward {

namespace {

constexpr double kSmoothingEps = 0.1;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Position one past the matching close brace for the '{' at `open`, or npos.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      ++i;
      continue;
    }
    if (s[i] == '{') ++depth;
    if (s[i] == '}') {
      --depth;
      if (depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::string_view strip_wrappers(std::string_view s) {
  for (;;) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
      s = s.substr(1, s.size() - 2);
      continue;
    }
    constexpr std::string_view boxed = "\\boxed";
    if (s.size() > boxed.size() && s.substr(0, boxed.size()) == boxed) {
      const std::size_t open = boxed.size();
      if (open < s.size() && s[open] == '{' && match_brace(s, open) == s.size()) {
        s = s.substr(open + 1, s.size() - open - 2);
        continue;
      }
    }
    return s;
  }
}

bool parse_integer(std::string_view s, long long& out) {
  if (s.empty()) return false;
  std::size_t i = 0;
  bool neg = false;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    i = 1;
  }
  if (i == s.size()) return false;
  long long v = 0;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    v = v * 10 + (s[i] - '0');
  }
  out = neg ? -v : v;
  return true;
}

std::optional<long double> parse_fraction(std::string_view s) {
  bool neg = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  for (std::string_view cmd : {std::string_view("\\frac"), std::string_view("\\dfrac")}) {
    if (s.size() > cmd.size() && s.substr(0, cmd.size()) == cmd && s[cmd.size()] == '{') {
      const std::size_t num_open = cmd.size();
      const std::size_t num_end = match_brace(s, num_open);
      if (num_end == std::string_view::npos || num_end >= s.size() || s[num_end] != '{') break;
      const std::size_t den_end = match_brace(s, num_end);
      if (den_end != s.size()) break;
      long long p = 0, q = 0;
      if (!parse_integer(s.substr(num_open + 1, num_end - num_open - 2), p)) break;
      if (!parse_integer(s.substr(num_end + 1, den_end - num_end - 2), q) || q == 0) break;
      const long double v = static_cast<long double>(p) / static_cast<long double>(q);
      return neg ? -v : v;
    }
  }
  const std::size_t slash = s.find('/');
  if (slash != std::string_view::npos) {
    long long p = 0, q = 0;
    if (parse_integer(s.substr(0, slash), p) && parse_integer(s.substr(slash + 1), q) &&
        q != 0) {
      const long double v = static_cast<long double>(p) / static_cast<long double>(q);
      return neg ? -v : v;
    }
  }
  return std::nullopt;
}

std::optional<long double> parse_decimal(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const long double v = std::strtold(begin, &end);
  if (end != begin + s.size() || errno == ERANGE || std::isnan(static_cast<double>(v))) {
    return std::nullopt;
  }
  return v;
}

}  // namespace

NormalizedAnswer normalize_answer(std::string_view raw) {
  const std::string_view stripped = strip_wrappers(raw);
  std::string s;
  s.reserve(stripped.size());
  for (char c : stripped) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) continue;
    s.push_back(c);
  }
  NormalizedAnswer out;
  out.value = parse_fraction(s);
  if (!out.value) out.value = parse_decimal(s);
  out.canonical = std::move(s);
  return out;
}

bool numeric_equal(std::string_view a, std::string_view b, double tolerance) {
  const NormalizedAnswer na = normalize_answer(a);
  const NormalizedAnswer nb = normalize_answer(b);
  if (na.value && nb.value) {
    return std::fabs(static_cast<double>(*na.value - *nb.value)) <= tolerance;
  }
  return !na.canonical.empty() && na.canonical == nb.canonical;
}

namespace {

struct Utf8Cursor {
  std::string_view text;
  std::size_t pos = 0;

  bool done() const { return pos >= text.size(); }

  // Returns (codepoint, raw bytes); invalid sequences yield the single byte.
  std::pair<char32_t, std::string_view> next() {
    const unsigned char c = static_cast<unsigned char>(text[pos]);
    std::size_t len = 1;
    char32_t cp = c;
    if (c >= 0xF0)
      len = 4;
    else if (c >= 0xE0)
      len = 3;
    else if (c >= 0xC0)
      len = 2;
    if (len > 1) {
      if (pos + len > text.size()) {
        len = 1;
      } else {
        cp = c & (0x7F >> len);
        for (std::size_t i = 1; i < len; ++i) {
          const unsigned char cont = static_cast<unsigned char>(text[pos + i]);
          if ((cont & 0xC0) != 0x80) {
            len = 1;
            cp = c;
            break;
          }
          cp = (cp << 6) | (cont & 0x3F);
        }
      }
    }
    const std::string_view raw = text.substr(pos, len);
    pos += len;
    return {cp, raw};
  }
};

bool is_cjk(char32_t cp) {
  return (cp >= 0x3040 && cp <= 0x30FF) ||   // kana
         (cp >= 0x3400 && cp <= 0x4DBF) ||   // CJK ext A
         (cp >= 0x4E00 && cp <= 0x9FFF) ||   // CJK unified
         (cp >= 0xF900 && cp <= 0xFAFF);     // compatibility ideographs
}

bool is_separator_cp(char32_t cp) {
  if (cp < 0x80) {
    const unsigned char c = static_cast<unsigned char>(cp);
    return std::isspace(c) || std::ispunct(c);
  }
  return (cp >= 0x2000 && cp <= 0x206F) ||   // general punctuation
         (cp >= 0x3000 && cp <= 0x303F) ||   // CJK symbols and punctuation
         (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65);
}

}  // namespace

std::vector<std::string> bleu_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      tokens.push_back(std::move(word));
      word.clear();
    }
  };
  Utf8Cursor cur{text};
  while (!cur.done()) {
    const auto [cp, raw] = cur.next();
    if (is_separator_cp(cp)) {
      flush();
    } else if (is_cjk(cp)) {
      flush();
      tokens.emplace_back(raw);
    } else if (cp < 0x80) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(cp))));
    } else {
      word.append(raw);
    }
  }
  flush();
  return tokens;
}

namespace {

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      key += tokens[i + j];
      key.push_back('\x1f');
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
  if (max_n < 1) throw DomainError("bleu: max_n must be >= 1");
  const auto ref = bleu_tokenize(reference);
  if (ref.empty()) throw EmptyReferenceError("bleu: reference has no tokens");
  const auto cand = bleu_tokenize(candidate);
  if (cand.empty()) return 0.0;

  // Capping the order at both lengths keeps bleu(x, x) == 1 for short x.
  const int effective_n =
      std::min<int>(max_n, static_cast<int>(std::min(cand.size(), ref.size())));

  double log_sum = 0.0;
  for (int n = 1; n <= effective_n; ++n) {
    const auto cand_counts = count_ngrams(cand, n);
    const auto ref_counts = count_ngrams(ref, n);
    long total = 0;
    long matched = 0;
    for (const auto& [key, count] : cand_counts) {
      total += count;
      const auto it = ref_counts.find(key);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    const double p =
        matched > 0 ? static_cast<double>(matched) / static_cast<double>(total)
                    : kSmoothingEps / static_cast<double>(total);
    log_sum += std::log(p);
  }
  const double geo_mean = std::exp(log_sum / effective_n);

  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double brevity = c < r ? std::exp(1.0 - r / c) : 1.0;
  return brevity * geo_mean;
}

double dual_reward(double distance, double lambda) {
  if (!(distance >= 0.0 && distance <= 1.0)) {
    throw DomainError("dual_reward: distance must lie in [0,1]");
  }
  if (!(lambda > 0.0)) throw DomainError("dual_reward: lambda must be positive");
  return std::exp(-lambda * distance);
}

double DistanceMetric::operator()(std::string_view reconstruction,
                                  std::string_view target) const {
  switch (kind) {
    case Kind::ExactMatch: {
      const auto a = normalize_answer(reconstruction);
      const auto b = normalize_answer(target);
      return !a.canonical.empty() && a.canonical == b.canonical ? 0.0 : 1.0;
    }
    case Kind::NumericEqual:
      return numeric_equal(reconstruction, target, tolerance) ? 0.0 : 1.0;
    case Kind::OneMinusBleu:
      return round_trip_distance(target, reconstruction);
  }
  throw DomainError("DistanceMetric: bad kind");
}

double backward_accuracy(std::span<const DualAttemptCounts> results) {
  long long successes = 0;
  long long attempts = 0;
  for (const auto& r : results) {
    successes += r.successes;
    attempts += r.attempts;
  }
  if (attempts < 1) throw NoAttemptsError("backward_accuracy: no attempts");
  return static_cast<double>(successes) / static_cast<double>(attempts);
}

double round_trip_distance(std::string_view source, std::string_view back_translation) {
  if (source.empty() || back_translation.empty()) {
    throw EmptyReferenceError("round_trip_distance: empty side");
  }
  return 1.0 - bleu(back_translation, source, 4);
}

RewardRecord make_reward_record(std::string primal_id, int sample_index,
                                std::vector<DualAttemptCounts> per_dual, double lambda) {
  RewardRecord rec;
  rec.primal_id = std::move(primal_id);
  rec.sample_index = sample_index;
  rec.per_dual = std::move(per_dual);
  rec.backward_accuracy = backward_accuracy(rec.per_dual);
  rec.reward = dual_reward(1.0 - rec.backward_accuracy, lambda);
  return rec;
}

}  // namespace dupo::reward
