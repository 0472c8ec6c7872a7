#include <random>

#include "bcer/token.hpp"
#include "doctest.h"

using namespace bcer;

namespace {

SymbolicToken parsed(std::string_view text) {
  auto r = parse_token(text);
  REQUIRE(std::holds_alternative<SymbolicToken>(r));
  return std::get<SymbolicToken>(r);
}

// Brute-force oracle: try every start offset and every end offset,
// keeping the longest substring at each position that parses alone.
std::vector<SymbolicToken> reference_scan(const std::string& text) {
  std::vector<SymbolicToken> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '@') {
      ++i;
      continue;
    }
    std::size_t best = 0;
    SymbolicToken best_tok;
    for (std::size_t end = text.size(); end > i; --end) {
      auto r = parse_token(std::string_view(text).substr(i, end - i));
      if (std::holds_alternative<SymbolicToken>(r)) {
        best = end - i;
        best_tok = std::get<SymbolicToken>(r);
        break;
      }
    }
    if (best > 0) {
      out.push_back(best_tok);
      i += best;
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("token families parse to their kinds") {
  CHECK(parsed("@case.input").kind == TokenKind::Case);
  CHECK(parsed("@seq.cine.kspace").kind == TokenKind::Seq);
  CHECK(parsed("@runtime.ed_frame").kind == TokenKind::Runtime);

  SymbolicToken n = parsed("@node.extract.measurements");
  CHECK(n.kind == TokenKind::Node);
  CHECK(n.node_id == "extract");
  CHECK(n.field_path == std::vector<std::string>{"measurements"});
}

TEST_CASE("node ids allow hyphens, fields do not") {
  SymbolicToken t = parsed("@node.pre-process.volume");
  CHECK(t.node_id == "pre-process");

  // the hyphen terminates the field, so the whole input fails the
  // full-consumption rule
  auto r = parse_token("@node.load.vol-ume");
  CHECK(std::holds_alternative<TokenParseError>(r));
}

TEST_CASE("multi-segment field paths") {
  SymbolicToken t = parsed("@case.meta.body_part");
  CHECK(t.field_path == std::vector<std::string>{"meta", "body_part"});
  CHECK(t.field_path_joined() == "meta.body_part");
}

TEST_CASE("malformed tokens are rejected") {
  for (const char* bad :
       {"@", "@case", "@case.", "@node.load", "@node..volume", "@nod.x",
        "@case.9field", "@node.load.volume extra", "@seq.", "case.input"}) {
    CAPTURE(bad);
    CHECK(std::holds_alternative<TokenParseError>(parse_token(bad)));
  }
}

TEST_CASE("render then parse is identity") {
  for (const char* text :
       {"@case.input", "@case.meta.body_part", "@seq.cine.kspace",
        "@node.extract.measurements", "@node.pre-process.volume",
        "@runtime.ed_frame"}) {
    SymbolicToken t = parsed(text);
    CHECK(render_token(t) == text);
    CHECK(parsed(render_token(t)) == t);
  }
}

TEST_CASE("scan finds embedded tokens and keeps literals") {
  TokenScan scan = scan_arguments(
      "see @node.classify.label for case @case.meta.body_part (email "
      "a@b.c)");
  auto tokens = scan.tokens();
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0].node_id == "classify");
  CHECK(tokens[1].kind == TokenKind::Case);
  CHECK(scan.reconstruct() ==
        "see @node.classify.label for case @case.meta.body_part (email "
        "a@b.c)");
  CHECK_FALSE(scan.single_token());
}

TEST_CASE("scan is prefix-maximal") {
  // the field path swallows every dot-joined identifier run
  TokenScan scan = scan_arguments("@case.a.b.c");
  REQUIRE(scan.tokens().size() == 1);
  CHECK(scan.tokens()[0].field_path == std::vector<std::string>{"a", "b", "c"});
  CHECK(scan.single_token());
}

TEST_CASE("unparseable @ runs stay literal") {
  TokenScan scan = scan_arguments("@@@ @node. @unknown.x 50% @ off");
  CHECK_FALSE(scan.has_tokens());
  CHECK(scan.reconstruct() == "@@@ @node. @unknown.x 50% @ off");
}

TEST_CASE("scanner agrees with the brute-force oracle on random inputs") {
  std::mt19937 rng(1234);
  const std::vector<std::string> atoms = {
      "@case.input", "@node.load.volume",  "@seq.cine.kspace",
      "@runtime.x",  "@node.a-b.f",        " ",
      ".",           "@",                  "@node.",
      "text",        "@case.",             "x.y",
      "@nodeload",   "@node.n.f.g",        "-",
      "_",           "@seq.s.f",           "9",
  };
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    int n = static_cast<int>(rng() % 8);
    for (int k = 0; k < n; ++k) text += atoms[rng() % atoms.size()];
    CAPTURE(text);
    TokenScan scan = scan_arguments(text);
    CHECK(scan.reconstruct() == text);
    auto expect = reference_scan(text);
    auto got = scan.tokens();
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expect[i]);
  }
}

TEST_CASE("round-trip property over generated tokens") {
  std::mt19937 rng(99);
  auto ident = [&](bool node_id) {
    std::string s;
    const std::string starts =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
    const std::string rest = starts + "0123456789" + (node_id ? "-" : "");
    s += starts[rng() % starts.size()];
    int len = static_cast<int>(rng() % 6);
    for (int i = 0; i < len; ++i) s += rest[rng() % rest.size()];
    return s;
  };
  int checked = 0;
  for (int trial = 0; trial < 12000; ++trial) {
    SymbolicToken t;
    switch (rng() % 4) {
      case 0: t.kind = TokenKind::Case; break;
      case 1: t.kind = TokenKind::Seq; break;
      case 2: t.kind = TokenKind::Runtime; break;
      default:
        t.kind = TokenKind::Node;
        t.node_id = ident(true);
    }
    int fields = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < fields; ++i) t.field_path.push_back(ident(false));
    auto r = parse_token(render_token(t));
    REQUIRE(std::holds_alternative<SymbolicToken>(r));
    CHECK(std::get<SymbolicToken>(r) == t);
    ++checked;
  }
  CHECK(checked == 12000);
}
