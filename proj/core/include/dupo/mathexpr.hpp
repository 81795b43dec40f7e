// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace dupo::mathexpr {

enum class TokenKind {
  Number,
  Identifier,
  Operator,
  Relation,
  OpenDelim,
  CloseDelim,
  SubscriptMarker,
  SuperscriptMarker,
  Word,
  Whitespace,
};

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // half-open

  bool operator==(const ByteSpan&) const = default;
};

struct Token {
  TokenKind kind;
  std::string text;
  ByteSpan span;
};

/// Lossless token cover of a question string: concatenating the token texts
/// in order reproduces the source byte-for-byte.
struct TokenSequence {
  std::string source;
  std::vector<Token> tokens;
};

/// Splits plain text with LaTeX-lite markup ($, \frac, ^, _, \leq, \geq,
/// <, >, \boxed{}) into a lossless TokenSequence. Numbers are maximal-munch
/// decimal literals ("13", "3.14"); `_` and `^` become subscript/superscript
/// markers; unknown characters fall through as Word tokens.
TokenSequence tokenize(std::string_view text);

enum class ContextClass {
  Maskable,
  Subscript,
  InequalityBound,
  ExponentBase,
  FunctionArgument,
};

const char* to_string(ContextClass c);

struct NumericCandidate {
  std::size_t token_index = 0;
  std::string value;  // exact decimal text of the number token
  ContextClass context = ContextClass::Maskable;
};

/// Window-based exclusion classification for the number token at `index`.
/// Inspects up to three non-whitespace tokens on each side. Precedence:
/// Subscript > InequalityBound > ExponentBase > FunctionArgument.
ContextClass classify_context(const TokenSequence& tokens, std::size_t index);

/// One candidate per number token, in token order. Numbers inside a
/// \boxed{...} region are answers, not inputs, and yield no candidate.
std::vector<NumericCandidate> find_numeric_candidates(const TokenSequence& tokens);

/// A `Variable_{<lowercase string>}` identifier.
struct VariableId {
  std::string name;

  bool operator==(const VariableId&) const = default;
};

/// True iff `name` matches Variable_{[a-z]+} exactly.
bool is_valid_variable_name(std::string_view name);

inline constexpr std::size_t kDefaultVariableLength = 6;

/// Draws a fresh Variable_{...} id with `length` random lowercase letters.
/// Same seed, same sequence.
VariableId generate_variable_id(std::mt19937_64& rng,
                                std::size_t length = kDefaultVariableLength);

struct MaskedExpression {
  std::string source;
  VariableId variable;
  std::string masked_text;
  std::string hidden_value;
  ByteSpan replaced_span;  // span of hidden_value in source
};

/// Replaces the candidate's occurrence (span-addressed, never string-global)
/// with the variable name. Throws NotMaskableError when the candidate's
/// context is not Maskable, and DataError if the variable name already
/// occurs in the source.
MaskedExpression mask_candidate(const TokenSequence& tokens,
                                const NumericCandidate& candidate,
                                const VariableId& variable);

/// Substitutes hidden_value back at the recorded position; by construction
/// unmask(mask_candidate(...)) equals the source byte-for-byte.
std::string unmask(const MaskedExpression& masked);

}  // namespace dupo::mathexpr
