#include "slicesim/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <system_error>
#include <vector>

namespace slicesim {

ParseError::ParseError(std::size_t line, std::size_t column, std::string message,
                       std::set<std::string> expected)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << line << ':' << column << ": " << message;
        if (!expected.empty()) {
          os << " (expected";
          const char* sep = " ";
          for (const auto& e : expected) {
            os << sep << e;
            sep = ", ";
          }
          os << ')';
        }
        return os.str();
      }()),
      line_(line),
      column_(column),
      expected_(std::move(expected)) {}

namespace {

enum class Tok { Ident, Number, LParen, RParen, Comma, Dot, Plus, Equals, Semi, LAngle, RAngle, LBracket, RBracket, End };

std::string_view tok_name(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Plus: return "'+'";
    case Tok::Equals: return "'='";
    case Tok::Semi: return "';'";
    case Tok::LAngle: return "'<'";
    case Tok::RAngle: return "'>'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::End: return "end of input";
  }
  return "?";
}

struct Token {
  Tok kind;
  std::string text;
  std::size_t line, column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t{Tok::End, {}, line_, col_};
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
          advance();
        t.kind = Tok::Ident;
        t.text = std::string(text_.substr(start, pos_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::Number;
        t.text = number();
      } else {
        static const std::map<char, Tok> punct = {
            {'(', Tok::LParen}, {')', Tok::RParen}, {',', Tok::Comma},    {'.', Tok::Dot},
            {'+', Tok::Plus},   {'=', Tok::Equals}, {';', Tok::Semi},     {'<', Tok::LAngle},
            {'>', Tok::RAngle}, {'[', Tok::LBracket}, {']', Tok::RBracket}};
        auto it = punct.find(c);
        if (it == punct.end()) {
          std::string shown = std::isprint(static_cast<unsigned char>(c))
                                  ? std::string(1, c)
                                  : "byte 0x" + [&] {
                                      static const char* hex = "0123456789abcdef";
                                      auto u = static_cast<unsigned char>(c);
                                      return std::string{hex[u >> 4], hex[u & 15]};
                                    }();
          throw ParseError(line_, col_, "unexpected character '" + shown + "'");
        }
        t.kind = it->second;
        t.text = std::string(1, c);
        advance();
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  bool digit_at(std::size_t i) const {
    return i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]));
  }

  std::string number() {
    std::size_t start = pos_;
    while (digit_at(pos_)) advance();
    if (pos_ < text_.size() && text_[pos_] == '.' && digit_at(pos_ + 1)) {
      advance();
      while (digit_at(pos_)) advance();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (digit_at(look)) {
        while (pos_ < look) advance();
        while (digit_at(pos_)) advance();
      }
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0, line_ = 1, col_ = 1;
};

struct StateDef {
  NamedState state;  // possibly chained prefixes
  std::size_t line, column;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Model run() {
    // Definitions are `Ident = ...;`; the first statement not of that form is
    // the system line.
    while (peek().kind == Tok::Ident && peek(1).kind == Tok::Equals) definition();
    if (peek().kind == Tok::End) fail("missing system line", {"identifier", "'('"});
    build_components();
    model_.system = system_expr();
    if (peek().kind == Tok::Semi) next();
    if (peek().kind != Tok::End) fail("unexpected input after system line", {std::string(tok_name(Tok::End))});
    return std::move(model_);
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& msg, std::set<std::string> expected) const {
    throw ParseError(peek().line, peek().column, msg, std::move(expected));
  }
  const Token& expect(Tok kind) {
    if (peek().kind != kind) {
      std::string got = peek().kind == Tok::End ? "end of input" : "'" + peek().text + "'";
      fail("unexpected " + got, {std::string(tok_name(kind))});
    }
    return next();
  }

  double number_value(const Token& t) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size() || !std::isfinite(v))
      throw ParseError(t.line, t.column, "number out of range: " + t.text);
    return v;
  }

  void definition() {
    const Token name = next();
    expect(Tok::Equals);
    if (peek().kind == Tok::Number) {
      const Token& num = next();
      if (model_.rates.count(name.text) || state_index_.count(name.text))
        throw ParseError(name.line, name.column, "duplicate definition of " + name.text);
      model_.rates[name.text] = number_value(num);
    } else {
      if (model_.rates.count(name.text) || state_index_.count(name.text))
        throw ParseError(name.line, name.column, "duplicate definition of " + name.text);
      NamedState st{name.text, {}};
      st.branches.push_back(branch());
      while (peek().kind == Tok::Plus) {
        next();
        st.branches.push_back(branch());
      }
      state_index_[name.text] = defs_.size();
      defs_.push_back({std::move(st), name.line, name.column});
    }
    expect(Tok::Semi);
  }

  Branch branch() {
    Branch b;
    b.prefixes.push_back(prefix());
    for (;;) {
      expect(Tok::Dot);
      if (peek().kind == Tok::LParen) {
        b.prefixes.push_back(prefix());
      } else if (peek().kind == Tok::Ident) {
        b.successor = next().text;
        return b;
      } else {
        fail("expected a prefix or a successor state", {"'('", "identifier"});
      }
    }
  }

  Prefix prefix() {
    expect(Tok::LParen);
    Prefix p;
    p.action = expect(Tok::Ident).text;
    expect(Tok::Comma);
    if (peek().kind == Tok::Ident) {
      p.rate = Rate::named(next().text);
    } else if (peek().kind == Tok::Number) {
      p.rate = Rate::literal(number_value(next()));
    } else {
      fail("expected a rate", {"identifier", "number"});
    }
    expect(Tok::RParen);
    return p;
  }

  // Weakly connected components of the successor graph, in order of first
  // definition.
  void build_components() {
    std::vector<std::size_t> parent(defs_.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < defs_.size(); ++i)
      for (const auto& b : defs_[i].state.branches) {
        auto it = state_index_.find(b.successor);
        if (it == state_index_.end()) continue;
        auto a = find(i), c = find(it->second);
        if (a != c) parent[std::max(a, c)] = std::min(a, c);
      }
    std::map<std::size_t, std::size_t> root_to_component;
    std::set<std::string> used_names;
    for (std::size_t i = 0; i < defs_.size(); ++i) {
      auto root = find(i);
      auto [it, inserted] = root_to_component.emplace(root, model_.components.size());
      if (inserted) {
        std::string cname = component_name_for_state(defs_[i].state.name);
        if (used_names.count(cname)) cname = defs_[i].state.name;
        used_names.insert(cname);
        model_.components.push_back(SequentialComponent{cname, {}});
      }
      model_.components[it->second].states.push_back(defs_[i].state);
      component_of_state_[defs_[i].state.name] = it->second;
    }
    for (auto& c : model_.components) c = desugar(c);
  }

  SystemComposition system_expr() {
    SystemComposition lhs = system_operand();
    while (peek().kind == Tok::LAngle) {
      CooperationSet set = coop_set();
      SystemComposition rhs = system_operand();
      lhs = SystemComposition::cooperate(std::move(lhs), std::move(set), std::move(rhs));
    }
    return lhs;
  }

  SystemComposition system_operand() {
    if (peek().kind == Tok::LParen) {
      next();
      auto inner = system_expr();
      expect(Tok::RParen);
      return inner;
    }
    if (peek().kind != Tok::Ident) fail("expected a population group", {"identifier", "'('"});
    const Token name = next();
    auto it = component_of_state_.find(name.text);
    if (it == component_of_state_.end())
      throw ParseError(name.line, name.column, "undefined state '" + name.text + "' in system line");
    expect(Tok::LBracket);
    const Token& count_tok = expect(Tok::Number);
    double count = number_value(count_tok);
    if (count != std::floor(count) || count > 1e15)
      throw ParseError(count_tok.line, count_tok.column, "population must be an integer");
    expect(Tok::RBracket);
    return SystemComposition::leaf(
        PopulationGroup{model_.components[it->second].name, name.text, static_cast<std::int64_t>(count)});
  }

  CooperationSet coop_set() {
    expect(Tok::LAngle);
    CooperationSet set;
    if (peek().kind != Tok::RAngle) {
      set.actions.insert(expect(Tok::Ident).text);
      while (peek().kind == Tok::Comma) {
        next();
        set.actions.insert(expect(Tok::Ident).text);
      }
    }
    expect(Tok::RAngle);
    return set;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Model model_;
  std::vector<StateDef> defs_;
  std::map<std::string, std::size_t> state_index_;
  std::map<std::string, std::size_t> component_of_state_;
};

void render_system(std::ostream& os, const SystemComposition& s, bool parenthesize) {
  if (s.is_leaf()) {
    os << s.group().initial_state << '[' << s.group().count << ']';
    return;
  }
  if (parenthesize) os << '(';
  render_system(os, s.left(), false);
  os << " <";
  const char* sep = "";
  for (const auto& a : s.sync().actions) {
    os << sep << a;
    sep = ", ";
  }
  os << "> ";
  render_system(os, s.right(), true);
  if (parenthesize) os << ')';
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

Model parse(std::string_view text) {
  // A leading UTF-8 byte-order mark is tolerated.
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  return Parser(Lexer(text).run()).run();
}

std::string render(const Model& model) {
  std::ostringstream os;
  if (!model.rates.empty()) {
    for (const auto& [name, value] : model.rates) os << name << " = " << format_number(value) << ";\n";
    os << '\n';
  }
  for (const auto& raw : model.components) {
    const SequentialComponent c = desugar(raw);
    os << "// " << c.name << '\n';
    for (const auto& s : c.states) {
      os << s.name << " = ";
      const char* sep = "";
      for (const auto& b : s.branches) {
        const auto& p = b.head();
        os << sep << '(' << p.action << ", "
           << (p.rate.is_named() ? p.rate.name() : format_number(p.rate.literal_value())) << ")." << b.successor;
        sep = " + ";
      }
      os << ";\n";
    }
    os << '\n';
  }
  if (!model.system.empty()) render_system(os, model.system, false);
  os << '\n';
  return os.str();
}

}  // namespace slicesim
