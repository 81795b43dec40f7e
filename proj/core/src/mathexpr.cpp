// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include "dupo/mathexpr.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "dupo/errors.hpp"

namespace dupo::mathexpr {

namespace {

bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }
bool is_digit_byte(unsigned char c) { return std::isdigit(c) != 0; }
bool is_alpha_byte(unsigned char c) { return std::isalpha(c) != 0; }

// UTF-8 for U+2264 / U+2265.
constexpr std::string_view kLeqUtf8 = "\xe2\x89\xa4";
constexpr std::string_view kGeqUtf8 = "\xe2\x89\xa5";

bool starts_with_at(std::string_view text, std::size_t pos, std::string_view what) {
  return text.substr(pos, what.size()) == what;
}

TokenKind classify_command(std::string_view cmd) {
  if (cmd == "\\leq" || cmd == "\\geq" || cmd == "\\neq") return TokenKind::Relation;
  return TokenKind::Word;
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence seq;
  seq.source.assign(text);
  std::size_t i = 0;
  const std::size_t n = text.size();

  auto emit = [&](TokenKind kind, std::size_t begin, std::size_t end) {
    seq.tokens.push_back(Token{kind, std::string(text.substr(begin, end - begin)),
                               ByteSpan{begin, end}});
  };

  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);

    if (is_space_byte(c)) {
      std::size_t j = i;
      while (j < n && is_space_byte(static_cast<unsigned char>(text[j]))) ++j;
      emit(TokenKind::Whitespace, i, j);
      i = j;
      continue;
    }

    if (is_digit_byte(c)) {
      std::size_t j = i;
      while (j < n && is_digit_byte(static_cast<unsigned char>(text[j]))) ++j;
      // Consume a decimal point only when a digit follows, so "6." stays
      // number + word.
      if (j + 1 < n && text[j] == '.' &&
          is_digit_byte(static_cast<unsigned char>(text[j + 1]))) {
        ++j;
        while (j < n && is_digit_byte(static_cast<unsigned char>(text[j]))) ++j;
      }
      emit(TokenKind::Number, i, j);
      i = j;
      continue;
    }

    if (is_alpha_byte(c)) {
      std::size_t j = i;
      while (j < n && is_alpha_byte(static_cast<unsigned char>(text[j]))) ++j;
      // Single letters read as math identifiers; longer runs as prose.
      emit(j - i == 1 ? TokenKind::Identifier : TokenKind::Word, i, j);
      i = j;
      continue;
    }

    if (c == '\\') {
      std::size_t j = i + 1;
      while (j < n && is_alpha_byte(static_cast<unsigned char>(text[j]))) ++j;
      if (j == i + 1 && j < n) ++j;  // escaped single char, e.g. "\{"
      emit(classify_command(text.substr(i, j - i)), i, j);
      i = j;
      continue;
    }

    switch (c) {
      case '_':
        emit(TokenKind::SubscriptMarker, i, i + 1);
        ++i;
        continue;
      case '^':
        emit(TokenKind::SuperscriptMarker, i, i + 1);
        ++i;
        continue;
      case '(':
      case '[':
      case '{':
        emit(TokenKind::OpenDelim, i, i + 1);
        ++i;
        continue;
      case ')':
      case ']':
      case '}':
        emit(TokenKind::CloseDelim, i, i + 1);
        ++i;
        continue;
      case '+':
      case '-':
      case '*':
      case '/':
        emit(TokenKind::Operator, i, i + 1);
        ++i;
        continue;
      case '<':
      case '>':
      case '=':
        emit(TokenKind::Relation, i, i + 1);
        ++i;
        continue;
      default:
        break;
    }

    if (c >= 0x80) {
      if (starts_with_at(text, i, kLeqUtf8) || starts_with_at(text, i, kGeqUtf8)) {
        emit(TokenKind::Relation, i, i + 3);
        i += 3;
        continue;
      }
      std::size_t j = i;
      while (j < n && static_cast<unsigned char>(text[j]) >= 0x80 &&
             !starts_with_at(text, j, kLeqUtf8) && !starts_with_at(text, j, kGeqUtf8)) {
        ++j;
      }
      emit(TokenKind::Word, i, j);
      i = j;
      continue;
    }

    // Remaining ASCII punctuation: one Word token each.
    emit(TokenKind::Word, i, i + 1);
    ++i;
  }

  return seq;
}

const char* to_string(ContextClass c) {
  switch (c) {
    case ContextClass::Maskable: return "Maskable";
    case ContextClass::Subscript: return "Subscript";
    case ContextClass::InequalityBound: return "InequalityBound";
    case ContextClass::ExponentBase: return "ExponentBase";
    case ContextClass::FunctionArgument: return "FunctionArgument";
  }
  return "?";
}

namespace {

constexpr std::size_t kWindow = 3;

// Up to `kWindow` non-whitespace neighbor indices, nearest first.
std::vector<std::size_t> neighbors(const TokenSequence& seq, std::size_t index, int dir) {
  std::vector<std::size_t> out;
  std::size_t i = index;
  while (out.size() < kWindow) {
    if (dir < 0) {
      if (i == 0) break;
      --i;
    } else {
      ++i;
      if (i >= seq.tokens.size()) break;
    }
    if (seq.tokens[i].kind == TokenKind::Whitespace) continue;
    out.push_back(i);
  }
  return out;
}

bool is_inequality(const Token& t) {
  return t.kind == TokenKind::Relation &&
         (t.text == "<" || t.text == ">" || t.text == "\\leq" || t.text == "\\geq" ||
          t.text == kLeqUtf8 || t.text == kGeqUtf8);
}

}  // namespace

ContextClass classify_context(const TokenSequence& seq, std::size_t index) {
  if (index >= seq.tokens.size() || seq.tokens[index].kind != TokenKind::Number) {
    throw DataError("classify_context: token at index is not a number");
  }
  const auto left = neighbors(seq, index, -1);
  const auto right = neighbors(seq, index, +1);
  const auto& tokens = seq.tokens;

  // Subscript: preceded by `_`, optionally through an opening brace.
  if (!left.empty()) {
    if (tokens[left[0]].kind == TokenKind::SubscriptMarker) return ContextClass::Subscript;
    if (tokens[left[0]].kind == TokenKind::OpenDelim && tokens[left[0]].text == "{" &&
        left.size() > 1 && tokens[left[1]].kind == TokenKind::SubscriptMarker) {
      return ContextClass::Subscript;
    }
  }

  // Inequality bound: the nearest relation on the left decides.
  for (std::size_t idx : left) {
    if (tokens[idx].kind != TokenKind::Relation) continue;
    if (is_inequality(tokens[idx])) return ContextClass::InequalityBound;
    break;  // nearest relation is "=" or similar; rule does not fire
  }

  // Exponent base: only the common bases 2 and 10.
  if (!right.empty() && tokens[right[0]].kind == TokenKind::SuperscriptMarker &&
      (tokens[index].text == "2" || tokens[index].text == "10")) {
    return ContextClass::ExponentBase;
  }

  // Function argument: sole token between `ident(` and `)`.
  if (!left.empty() && !right.empty() && tokens[left[0]].kind == TokenKind::OpenDelim &&
      tokens[left[0]].text == "(" && tokens[right[0]].kind == TokenKind::CloseDelim &&
      tokens[right[0]].text == ")") {
    const std::size_t open = left[0];
    if (open > 0 && tokens[open - 1].kind == TokenKind::Identifier) {
      return ContextClass::FunctionArgument;
    }
  }

  return ContextClass::Maskable;
}

namespace {

// Marks token indices inside \boxed{...} regions (balanced braces).
std::vector<bool> boxed_mask(const TokenSequence& seq) {
  std::vector<bool> mask(seq.tokens.size(), false);
  const auto& tokens = seq.tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind != TokenKind::Word || tokens[i].text != "\\boxed") continue;
    std::size_t j = i + 1;
    while (j < tokens.size() && tokens[j].kind == TokenKind::Whitespace) ++j;
    if (j >= tokens.size() || tokens[j].kind != TokenKind::OpenDelim || tokens[j].text != "{") {
      continue;
    }
    int depth = 1;
    for (std::size_t k = j + 1; k < tokens.size() && depth > 0; ++k) {
      if (tokens[k].kind == TokenKind::OpenDelim && tokens[k].text == "{") ++depth;
      if (tokens[k].kind == TokenKind::CloseDelim && tokens[k].text == "}") {
        --depth;
        if (depth == 0) break;
      }
      mask[k] = true;
    }
  }
  return mask;
}

}  // namespace

std::vector<NumericCandidate> find_numeric_candidates(const TokenSequence& seq) {
  std::vector<NumericCandidate> out;
  const auto boxed = boxed_mask(seq);
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (seq.tokens[i].kind != TokenKind::Number) continue;
    if (boxed[i]) continue;  // answers, not inputs
    out.push_back(NumericCandidate{i, seq.tokens[i].text, classify_context(seq, i)});
  }
  return out;
}

bool is_valid_variable_name(std::string_view name) {
  constexpr std::string_view prefix = "Variable_{";
  if (name.size() < prefix.size() + 2 || name.substr(0, prefix.size()) != prefix ||
      name.back() != '}') {
    return false;
  }
  const std::string_view body = name.substr(prefix.size(), name.size() - prefix.size() - 1);
  return !body.empty() &&
         std::all_of(body.begin(), body.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

VariableId generate_variable_id(std::mt19937_64& rng, std::size_t length) {
  std::string s = "Variable_{";
  for (std::size_t i = 0; i < length; ++i) {
    s.push_back(static_cast<char>('a' + rng() % 26));
  }
  s.push_back('}');
  return VariableId{std::move(s)};
}

MaskedExpression mask_candidate(const TokenSequence& seq, const NumericCandidate& candidate,
                                const VariableId& variable) {
  if (candidate.context != ContextClass::Maskable) {
    throw NotMaskableError(std::string("candidate '") + candidate.value +
                           "' is excluded: " + to_string(candidate.context));
  }
  if (candidate.token_index >= seq.tokens.size()) {
    throw DataError("mask_candidate: token index out of range");
  }
  const Token& tok = seq.tokens[candidate.token_index];
  if (tok.kind != TokenKind::Number || tok.text != candidate.value) {
    throw DataError("mask_candidate: candidate does not match token sequence");
  }
  if (!is_valid_variable_name(variable.name)) {
    throw DataError("mask_candidate: malformed variable id '" + variable.name + "'");
  }
  if (seq.source.find(variable.name) != std::string::npos) {
    throw DataError("mask_candidate: variable name already occurs in source");
  }

  MaskedExpression masked;
  masked.source = seq.source;
  masked.variable = variable;
  masked.hidden_value = tok.text;
  masked.replaced_span = tok.span;
  masked.masked_text = seq.source.substr(0, tok.span.begin) + variable.name +
                       seq.source.substr(tok.span.end);
  return masked;
}

std::string unmask(const MaskedExpression& masked) {
  const std::size_t begin = masked.replaced_span.begin;
  return masked.masked_text.substr(0, begin) + masked.hidden_value +
         masked.masked_text.substr(begin + masked.variable.name.size());
}

}  // namespace dupo::mathexpr
