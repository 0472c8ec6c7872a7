#include "bcer/token.hpp"

#include <optional>

namespace bcer {

namespace {

struct PrefixParse {
  SymbolicToken token;
  std::size_t end;  // one past the last consumed character
};

std::optional<TokenKind> family_from(std::string_view word) {
  if (word == "seq") return TokenKind::Seq;
  if (word == "node") return TokenKind::Node;
  if (word == "case") return TokenKind::Case;
  if (word == "runtime") return TokenKind::Runtime;
  return std::nullopt;
}

// Parses the longest token starting at `pos` (text[pos] must be '@').
// Returns nullopt if no well-formed token starts there.
std::optional<PrefixParse> parse_prefix(std::string_view text, std::size_t pos) {
  std::size_t i = pos;
  if (i >= text.size() || text[i] != '@') return std::nullopt;
  ++i;

  std::size_t fam_begin = i;
  while (i < text.size() && text[i] >= 'a' && text[i] <= 'z') ++i;
  auto family = family_from(text.substr(fam_begin, i - fam_begin));
  if (!family) return std::nullopt;

  SymbolicToken tok;
  tok.kind = *family;

  if (tok.kind == TokenKind::Node) {
    if (i >= text.size() || text[i] != '.') return std::nullopt;
    ++i;
    std::size_t id_begin = i;
    if (i >= text.size() || !is_ident_start(text[i])) return std::nullopt;
    ++i;
    while (i < text.size() && is_node_id_char(text[i])) ++i;
    tok.node_id.assign(text.substr(id_begin, i - id_begin));
  }

  // At least one field segment, then greedily more while `.` + ident-start.
  auto read_field = [&](std::size_t at) -> std::optional<std::size_t> {
    if (at >= text.size() || text[at] != '.') return std::nullopt;
    std::size_t j = at + 1;
    if (j >= text.size() || !is_ident_start(text[j])) return std::nullopt;
    ++j;
    while (j < text.size() && is_field_char(text[j])) ++j;
    tok.field_path.emplace_back(text.substr(at + 1, j - at - 1));
    return j;
  };

  auto first = read_field(i);
  if (!first) return std::nullopt;
  i = *first;
  while (auto next = read_field(i)) i = *next;

  tok.source_span = {pos, i};
  return PrefixParse{std::move(tok), i};
}

}  // namespace

std::string_view to_string(TokenKind k) {
  switch (k) {
    case TokenKind::Seq: return "seq";
    case TokenKind::Node: return "node";
    case TokenKind::Case: return "case";
    case TokenKind::Runtime: return "runtime";
  }
  return "?";
}

std::string SymbolicToken::field_path_joined() const {
  std::string out;
  for (std::size_t i = 0; i < field_path.size(); ++i) {
    if (i) out += '.';
    out += field_path[i];
  }
  return out;
}

TokenParseResult parse_token(std::string_view text) {
  auto p = parse_prefix(text, 0);
  if (!p || p->end != text.size()) {
    return TokenParseError{"MalformedToken", {0, text.size()}};
  }
  return std::move(p->token);
}

std::string render_token(const SymbolicToken& t) {
  std::string out = "@";
  out += to_string(t.kind);
  if (t.kind == TokenKind::Node) {
    out += '.';
    out += t.node_id;
  }
  for (const auto& f : t.field_path) {
    out += '.';
    out += f;
  }
  return out;
}

std::vector<SymbolicToken> TokenScan::tokens() const {
  std::vector<SymbolicToken> out;
  for (const auto& p : parts) {
    if (std::holds_alternative<SymbolicToken>(p)) {
      out.push_back(std::get<SymbolicToken>(p));
    }
  }
  return out;
}

bool TokenScan::has_tokens() const {
  for (const auto& p : parts) {
    if (std::holds_alternative<SymbolicToken>(p)) return true;
  }
  return false;
}

bool TokenScan::single_token() const {
  return parts.size() == 1 && std::holds_alternative<SymbolicToken>(parts[0]);
}

std::string TokenScan::reconstruct() const {
  std::string out;
  for (const auto& p : parts) {
    if (std::holds_alternative<std::string>(p)) {
      out += std::get<std::string>(p);
    } else {
      out += render_token(std::get<SymbolicToken>(p));
    }
  }
  return out;
}

TokenScan scan_arguments(std::string_view arg_text) {
  TokenScan scan;
  std::string literal;
  std::size_t i = 0;
  while (i < arg_text.size()) {
    if (arg_text[i] == '@') {
      if (auto p = parse_prefix(arg_text, i)) {
        if (!literal.empty()) {
          scan.parts.emplace_back(std::move(literal));
          literal.clear();
        }
        scan.parts.emplace_back(std::move(p->token));
        i = p->end;
        continue;
      }
    }
    literal += arg_text[i];
    ++i;
  }
  if (!literal.empty()) scan.parts.emplace_back(std::move(literal));
  return scan;
}

bool is_ident_start(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}

bool is_node_id_char(char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9') || c == '-';
}

bool is_field_char(char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}

}  // namespace bcer
