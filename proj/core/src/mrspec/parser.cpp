#include "mrdebug/mrspec/parser.hpp"

#include <cctype>
#include <set>

namespace mrdebug::mrspec {

ParseError::ParseError(int line, int column, std::string message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      message_(std::move(message)) {}

namespace {

enum class Tok {
  ident, string, number,
  lbrace, rbrace, lparen, rparen, semi, comma, dot, bang,
  and_and, or_or, lt, le, eq_eq, ge, gt, plus, minus,
  end,
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  SourcePos pos;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::end: return "end of input";
    case Tok::string: return "string \"" + t.text + "\"";
    default: return "'" + t.text + "'";
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t;
      t.pos = {line_, col_};
      if (at_end()) {
        out.push_back(t);
        return out;
      }
      const char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::ident;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
          t.text += advance();
        }
        while (!at_end() && peek() == '\'') t.text += advance();
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::number;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) t.text += advance();
        if (!at_end() && peek() == '.' && pos_ + 1 < src_.size() &&
            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
          t.text += advance();
          while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) t.text += advance();
        }
      } else if (c == '"') {
        advance();
        t.kind = Tok::string;
        while (!at_end() && peek() != '"' && peek() != '\n') t.text += advance();
        if (at_end() || peek() != '"') throw ParseError(t.pos.line, t.pos.column, "unterminated string");
        advance();
      } else if (src_.substr(pos_).starts_with("\xE2\x88\x92")) {
        t.kind = Tok::minus;
        t.text = "-";
        pos_ += 3;
        ++col_;
      } else {
        t.text = std::string(1, advance());
        switch (c) {
          case '{': t.kind = Tok::lbrace; break;
          case '}': t.kind = Tok::rbrace; break;
          case '(': t.kind = Tok::lparen; break;
          case ')': t.kind = Tok::rparen; break;
          case ';': t.kind = Tok::semi; break;
          case ',': t.kind = Tok::comma; break;
          case '.': t.kind = Tok::dot; break;
          case '+': t.kind = Tok::plus; break;
          case '-': t.kind = Tok::minus; break;
          case '!': t.kind = Tok::bang; break;
          case '&':
            expect_second('&', t);
            t.kind = Tok::and_and;
            break;
          case '|':
            expect_second('|', t);
            t.kind = Tok::or_or;
            break;
          case '=':
            expect_second('=', t);
            t.kind = Tok::eq_eq;
            break;
          case '<':
            t.kind = Tok::lt;
            if (!at_end() && peek() == '=') {
              t.text += advance();
              t.kind = Tok::le;
            }
            break;
          case '>':
            t.kind = Tok::gt;
            if (!at_end() && peek() == '=') {
              t.text += advance();
              t.kind = Tok::ge;
            }
            break;
          default:
            throw ParseError(t.pos.line, t.pos.column, "unexpected character '" + t.text + "'");
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
      ++col_;
    }
    return c;
  }
  void expect_second(char second, Token& t) {
    if (at_end() || peek() != second) {
      throw ParseError(t.pos.line, t.pos.column, "expected '" + std::string(2, second) + "'");
    }
    t.text += advance();
  }
  void skip_space_and_comments() {
    while (!at_end()) {
      if (std::isspace(static_cast<unsigned char>(peek()))) {
        advance();
      } else if (peek() == '#') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, const Schema* schema)
      : tokens_(std::move(tokens)), schema_(schema) {}

  std::vector<RelationAst> spec() {
    std::vector<RelationAst> out;
    while (cur().kind != Tok::end) out.push_back(relation());
    if (out.empty()) fail(cur(), "expected at least one relation");
    return out;
  }

 private:
  const Token& cur() const { return tokens_[i_]; }
  const Token& next() const { return tokens_[std::min(i_ + 1, tokens_.size() - 1)]; }
  bool is_keyword(std::string_view kw) const { return cur().kind == Tok::ident && cur().text == kw; }

  [[noreturn]] static void fail(const Token& t, const std::string& msg) {
    throw ParseError(t.pos.line, t.pos.column, msg);
  }
  [[noreturn]] static void fail(SourcePos p, const std::string& msg) {
    throw ParseError(p.line, p.column, msg);
  }

  Token take() { return tokens_[i_ < tokens_.size() - 1 ? i_++ : i_]; }
  Token expect(Tok kind, std::string_view what) {
    if (cur().kind != kind) fail(cur(), "expected " + std::string(what) + ", found " + describe(cur()));
    return take();
  }
  void expect_keyword(std::string_view kw) {
    if (!is_keyword(kw)) fail(cur(), "expected '" + std::string(kw) + "', found " + describe(cur()));
    take();
  }
  std::string ident(std::string_view what) { return expect(Tok::ident, what).text; }

  RelationAst relation() {
    RelationAst rel;
    rel.pos = cur().pos;
    expect_keyword("relation");
    rel.name = expect(Tok::string, "relation name string").text;
    if (rel.name.empty()) fail(rel.pos, "relation name must not be empty");
    expect(Tok::lbrace, "'{'");

    bool seen_clause = false;
    int group = 0;
    for (;;) {
      if (is_keyword("forall") || is_keyword("exists")) {
        if (seen_clause) fail(cur(), "quantifier after clause");
        const Quantifier kind = cur().text == "forall" ? Quantifier::forall : Quantifier::exists;
        take();
        do {
          QuantifiedVar v;
          v.kind = kind;
          v.pos = cur().pos;
          v.name = ident("variable name");
          v.group = group;
          rel.quantifiers.push_back(std::move(v));
        } while (cur().kind == Tok::comma && (take(), true));
        expect(Tok::semi, "';'");
        ++group;
      } else if (is_keyword("where")) {
        seen_clause = true;
        WhereClause w;
        w.pos = cur().pos;
        take();
        w.expr = disjunction();
        expect(Tok::semi, "';'");
        rel.clauses.emplace_back(std::move(w));
      } else if (is_keyword("metamorphose")) {
        seen_clause = true;
        MetamorphoseClause m;
        m.pos = cur().pos;
        take();
        m.target = ident("target variable");
        expect_keyword("from");
        m.source = ident("source variable");
        expect_keyword("except");
        expect(Tok::lbrace, "'{'");
        if (cur().kind != Tok::rbrace) {
          m.exceptions.push_back(ident("label"));
          while (cur().kind == Tok::comma) {
            take();
            m.exceptions.push_back(ident("label"));
          }
        }
        expect(Tok::rbrace, "'}'");
        expect(Tok::semi, "';'");
        rel.clauses.emplace_back(std::move(m));
      } else if (is_keyword("assert")) {
        rel.assertion.pos = cur().pos;
        take();
        rel.assertion.lhs = output_expr();
        rel.assertion.op = cmp_op();
        rel.assertion.rhs = output_expr();
        expect(Tok::semi, "';'");
        expect(Tok::rbrace, "'}'");
        break;
      } else {
        fail(cur(), "expected quantifier, clause or assert, found " + describe(cur()));
      }
    }
    if (rel.quantifiers.empty()) fail(rel.pos, "relation needs at least one quantifier");
    check(rel);
    return rel;
  }

  std::optional<CmpOp> peek_cmp() const {
    switch (cur().kind) {
      case Tok::lt: return CmpOp::lt;
      case Tok::le: return CmpOp::le;
      case Tok::eq_eq: return CmpOp::eq;
      case Tok::ge: return CmpOp::ge;
      case Tok::gt: return CmpOp::gt;
      default: return std::nullopt;
    }
  }
  CmpOp cmp_op() {
    auto op = peek_cmp();
    if (!op) fail(cur(), "expected comparison operator, found " + describe(cur()));
    take();
    return *op;
  }

  Decimal number(bool negative) {
    const Token t = expect(Tok::number, "number");
    auto d = Decimal::try_parse(t.text);
    if (!d) fail(t, "number " + t.text + " has more than two fraction digits");
    return negative ? -*d : *d;
  }

  BoolExpr disjunction() {
    BoolExpr first = conjunction();
    if (cur().kind != Tok::or_or) return first;
    BoolExpr out;
    out.kind = BoolExpr::Kind::disjunction;
    out.pos = first.pos;
    out.children.push_back(std::move(first));
    while (cur().kind == Tok::or_or) {
      take();
      out.children.push_back(conjunction());
    }
    return out;
  }

  BoolExpr conjunction() {
    BoolExpr first = unary();
    if (cur().kind != Tok::and_and) return first;
    BoolExpr out;
    out.kind = BoolExpr::Kind::conjunction;
    out.pos = first.pos;
    out.children.push_back(std::move(first));
    while (cur().kind == Tok::and_and) {
      take();
      out.children.push_back(unary());
    }
    return out;
  }

  LabelRef label_ref() {
    LabelRef r;
    r.var = ident("variable");
    expect(Tok::dot, "'.'");
    r.label = ident("label");
    return r;
  }

  Term term() {
    if (cur().kind == Tok::number) return number(false);
    if (cur().kind == Tok::minus && next().kind == Tok::number) {
      take();
      return number(true);
    }
    if (cur().kind == Tok::ident) {
      if (next().kind == Tok::dot) return label_ref();
      return TagLiteral{take().text};
    }
    fail(cur(), "expected term, found " + describe(cur()));
  }

  BoolExpr unary() {
    BoolExpr e;
    e.pos = cur().pos;
    if (cur().kind == Tok::lparen) {
      take();
      BoolExpr inner = disjunction();
      expect(Tok::rparen, "')'");
      inner.pos = e.pos;
      return inner;
    }
    if (cur().kind == Tok::bang) {
      take();
      e.kind = BoolExpr::Kind::atom;
      e.atom.ref = label_ref();
      e.atom.negated = true;
      return e;
    }
    Term lhs = term();
    if (auto op = peek_cmp()) {
      take();
      e.kind = BoolExpr::Kind::comparison;
      e.comparison.lhs = std::move(lhs);
      e.comparison.op = *op;
      e.comparison.rhs = term();
      return e;
    }
    if (const auto* ref = std::get_if<LabelRef>(&lhs)) {
      e.kind = BoolExpr::Kind::atom;
      e.atom.ref = *ref;
      return e;
    }
    fail(e.pos, "expected comparison operator after constant");
  }

  OutputTerm output_term(int sign) {
    OutputTerm t;
    t.sign = sign;
    if (cur().kind == Tok::number) {
      t.constant = number(false);
      return t;
    }
    if (cur().kind == Tok::ident && cur().text == "F") {
      take();
      expect(Tok::lparen, "'('");
      t.var = ident("variable");
      expect(Tok::rparen, "')'");
      return t;
    }
    fail(cur(), "expected F(var) or number, found " + describe(cur()));
  }

  OutputExpr output_expr() {
    OutputExpr e;
    if (cur().kind == Tok::lparen) {
      take();
      e.parenthesized = true;
    }
    int sign = 1;
    if (cur().kind == Tok::minus) {
      take();
      sign = -1;
    }
    e.terms.push_back(output_term(sign));
    while (cur().kind == Tok::plus || cur().kind == Tok::minus) {
      sign = take().kind == Tok::plus ? 1 : -1;
      e.terms.push_back(output_term(sign));
    }
    if (e.parenthesized) expect(Tok::rparen, "')'");
    return e;
  }

  // Well-formedness rules that need the whole relation.
  void check(const RelationAst& rel) const {
    std::set<std::string> names;
    for (const auto& q : rel.quantifiers) {
      if (!names.insert(q.name).second) fail(q.pos, "duplicate variable " + q.name);
      if (q.name == "F") fail(q.pos, "'F' is reserved for the output function");
    }
    if (rel.quantifiers.size() > 4) {
      fail(rel.quantifiers[4].pos, "at most 4 quantified variables allowed");
    }
    auto position = [&](const std::string& var) -> int {
      for (std::size_t i = 0; i < rel.quantifiers.size(); ++i) {
        if (rel.quantifiers[i].name == var) return static_cast<int>(i);
      }
      return -1;
    };
    auto check_label = [&](SourcePos p, const std::string& label) {
      if (schema_ && !schema_->index_of(label)) fail(p, "unknown label " + label);
    };
    auto check_ref = [&](SourcePos p, const LabelRef& r) {
      if (position(r.var) < 0) fail(p, "unquantified variable " + r.var);
      check_label(p, r.label);
    };
    auto check_term = [&](SourcePos p, const Term& t) {
      if (const auto* r = std::get_if<LabelRef>(&t)) check_ref(p, *r);
    };
    auto check_expr = [&](auto&& self, const BoolExpr& e) -> void {
      switch (e.kind) {
        case BoolExpr::Kind::comparison:
          check_term(e.pos, e.comparison.lhs);
          check_term(e.pos, e.comparison.rhs);
          break;
        case BoolExpr::Kind::atom: check_ref(e.pos, e.atom.ref); break;
        default:
          for (const auto& c : e.children) self(self, c);
      }
    };
    for (const auto& clause : rel.clauses) {
      if (const auto* w = std::get_if<WhereClause>(&clause)) {
        check_expr(check_expr, w->expr);
        continue;
      }
      const auto& m = std::get<MetamorphoseClause>(clause);
      const int target = position(m.target);
      const int source = position(m.source);
      if (target < 0) fail(m.pos, "unquantified variable " + m.target);
      if (source < 0) fail(m.pos, "unquantified variable " + m.source);
      if (target <= source) {
        fail(m.pos, "metamorphose target " + m.target + " must be quantified after its source " +
                        m.source);
      }
      for (const auto& label : m.exceptions) check_label(m.pos, label);
    }
    for (const auto* side : {&rel.assertion.lhs, &rel.assertion.rhs}) {
      for (const auto& t : side->terms) {
        if (t.var && position(*t.var) < 0) fail(rel.assertion.pos, "unquantified variable " + *t.var);
      }
    }
  }

  std::vector<Token> tokens_;
  std::size_t i_ = 0;
  const Schema* schema_;
};

}  // namespace

std::vector<RelationAst> parse_spec(std::string_view text, const Schema* schema) {
  Parser parser(Lexer(text).run(), schema);
  return parser.spec();
}

RelationAst parse_relation(std::string_view text, const Schema* schema) {
  auto relations = parse_spec(text, schema);
  if (relations.size() != 1) {
    throw ParseError(relations[1].pos.line, relations[1].pos.column,
                     "expected a single relation");
  }
  return std::move(relations.front());
}

}  // namespace mrdebug::mrspec
