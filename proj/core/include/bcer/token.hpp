#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bcer {

/// Character offsets [begin, end) into the enclosing argument text.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const SourceSpan&) const = default;
};

/// The four token families: @seq.*, @node.<id>.<field>, @case.*, @runtime.*.
enum class TokenKind { Seq, Node, Case, Runtime };

std::string_view to_string(TokenKind k);

struct SymbolicToken {
  TokenKind kind = TokenKind::Case;
  std::string node_id;                  // present iff kind == Node
  std::vector<std::string> field_path;  // non-empty
  SourceSpan source_span;

  /// Structural equality; spans are positional metadata, not identity.
  bool operator==(const SymbolicToken& o) const {
    return kind == o.kind && node_id == o.node_id && field_path == o.field_path;
  }

  std::string field_path_joined() const;
};

struct TokenParseError {
  std::string message;
  SourceSpan span;
};

using TokenParseResult = std::variant<SymbolicToken, TokenParseError>;

/// Parses a complete token text. The whole input must be consumed;
/// trailing characters are a MalformedToken error.
TokenParseResult parse_token(std::string_view text);

/// Canonical textual form; parse_token(render_token(t)) == t.
std::string render_token(const SymbolicToken& t);

/// An argument string split into literal spans and embedded tokens, in
/// source order. Concatenating the parts reconstructs the input exactly.
struct TokenScan {
  using Part = std::variant<std::string, SymbolicToken>;
  std::vector<Part> parts;

  std::vector<SymbolicToken> tokens() const;
  bool has_tokens() const;
  /// True when the whole input is exactly one token.
  bool single_token() const;
  std::string reconstruct() const;
};

/// Finds every maximal substring starting with `@` that parses as a
/// token. Unparseable `@...` runs stay literal; strictness is the
/// compiler's concern, not the scanner's.
TokenScan scan_arguments(std::string_view arg_text);

bool is_node_id_char(char c);
bool is_field_char(char c);
bool is_ident_start(char c);

}  // namespace bcer
