#include "kgm/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace kgm {

bool GraphletPattern::has_wildcard() const {
  return std::any_of(edges.begin(), edges.end(),
                     [](const PatternEdge& e) { return e.slot == Slot::kWildcard; });
}

bool GraphletPattern::is_two_path() const {
  return edges.size() == 2 && edges[0].slot == Slot::kRel1 &&
         edges[1].slot == Slot::kRel2;
}

bool GraphletPattern::connected() const {
  if (num_vars == 0) return false;
  std::vector<int> comp(num_vars);
  for (int i = 0; i < num_vars; ++i) comp[i] = i;
  auto root = [&](int v) {
    while (comp[v] != v) v = comp[v] = comp[comp[v]];
    return v;
  };
  for (const PatternEdge& e : edges) comp[root(e.src)] = root(e.dst);
  for (int i = 0; i < num_vars; ++i) {
    if (root(i) != root(0)) return false;
  }
  return true;
}

bool GraphletPattern::requires_distinct(int a, int b) const {
  auto key = std::minmax(a, b);
  return std::binary_search(distinct_pairs.begin(), distinct_pairs.end(),
                            std::make_pair(key.first, key.second));
}

const GraphletPattern* Vocabulary::find(std::string_view pattern_name) const {
  for (const auto& p : patterns) {
    if (p.name == pattern_name) return &p;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// ASK template parsing
// ---------------------------------------------------------------------------

namespace {

struct Token {
  enum Kind { kWord, kEntityVar, kRelVar, kRel1, kRel2, kPunct, kEnd } kind;
  std::string text;
  int index = 0;  // variable index for kEntityVar/kRelVar
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : s_(text) {}

  Token next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
    }
    if (pos_ >= s_.size()) return {Token::kEnd, ""};
    char c = s_[pos_];
    if (c == '{') {
      if (s_.compare(pos_, 6, "{rel1}") == 0) {
        pos_ += 6;
        return {Token::kRel1, "{rel1}"};
      }
      if (s_.compare(pos_, 6, "{rel2}") == 0) {
        pos_ += 6;
        return {Token::kRel2, "{rel2}"};
      }
      ++pos_;
      return {Token::kPunct, "{"};
    }
    if (c == '}' || c == '.' || c == '(' || c == ')') {
      ++pos_;
      return {Token::kPunct, std::string(1, c)};
    }
    if (c == '&' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '&') {
      pos_ += 2;
      return {Token::kPunct, "&&"};
    }
    if (c == '!' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '=') {
      pos_ += 2;
      return {Token::kPunct, "!="};
    }
    if (c == '?') {
      std::size_t start = ++pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      std::string name = s_.substr(start, pos_ - start);
      if (name.size() > 1 && name[0] == 'e' &&
          std::all_of(name.begin() + 1, name.end(),
                      [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
        return {Token::kEntityVar, "?" + name, std::stoi(name.substr(1))};
      }
      if (name.rfind("rel", 0) == 0) {
        std::string suffix = name.substr(3);
        if (!suffix.empty() && suffix[0] == '_') suffix = suffix.substr(1);
        if (!suffix.empty() &&
            std::all_of(suffix.begin(), suffix.end(),
                        [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
          return {Token::kRelVar, "?" + name, std::stoi(suffix)};
        }
      }
      throw Error("query parse error: unsupported variable ?" + name);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      return {Token::kWord, s_.substr(start, pos_ - start)};
    }
    throw Error(std::string("query parse error: unsupported character '") + c + "'");
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

void expect_word(const Token& t, const std::string& word) {
  if (t.kind != Token::kWord || t.text != word) {
    if (t.kind == Token::kWord) {
      throw Error("query parse error: unsupported construct " + t.text);
    }
    throw Error("query parse error: expected " + word);
  }
}

void expect_punct(const Token& t, const std::string& p) {
  if (t.kind != Token::kPunct || t.text != p) {
    if (t.kind == Token::kWord) {
      throw Error("query parse error: unsupported construct " + t.text);
    }
    throw Error("query parse error: expected '" + p + "'");
  }
}

}  // namespace

GraphletPattern pattern_from_query_text(const std::string& text) {
  Lexer lex(text);
  expect_word(lex.next(), "ASK");
  expect_word(lex.next(), "WHERE");
  expect_punct(lex.next(), "{");

  GraphletPattern p;
  std::set<int> rel_vars_seen;
  std::set<int> entity_vars;

  Token t = lex.next();
  // triple atoms
  while (t.kind == Token::kEntityVar) {
    PatternEdge edge{};
    edge.src = t.index;
    entity_vars.insert(t.index);
    Token pred = lex.next();
    switch (pred.kind) {
      case Token::kRel1:
        edge.slot = Slot::kRel1;
        break;
      case Token::kRel2:
        edge.slot = Slot::kRel2;
        break;
      case Token::kRelVar:
        edge.slot = Slot::kWildcard;
        if (!rel_vars_seen.insert(pred.index).second) {
          throw Error(
              "query parse error: shared wildcard relation variables are not "
              "supported");
        }
        break;
      case Token::kWord:
        throw Error("query parse error: unsupported construct " + pred.text);
      default:
        throw Error("query parse error: expected a predicate");
    }
    Token obj = lex.next();
    if (obj.kind != Token::kEntityVar) {
      if (obj.kind == Token::kWord) {
        throw Error("query parse error: unsupported construct " + obj.text);
      }
      throw Error("query parse error: expected an object variable");
    }
    edge.dst = obj.index;
    entity_vars.insert(obj.index);
    expect_punct(lex.next(), ".");
    p.edges.push_back(edge);
    t = lex.next();
  }

  if (p.edges.empty()) throw Error("query parse error: no triple atoms");

  // optional FILTER(...)
  if (t.kind == Token::kWord && t.text == "FILTER") {
    expect_punct(lex.next(), "(");
    while (true) {
      Token a = lex.next();
      if (a.kind != Token::kEntityVar) {
        throw Error("query parse error: FILTER supports entity variables only");
      }
      expect_punct(lex.next(), "!=");
      Token b = lex.next();
      if (b.kind != Token::kEntityVar) {
        throw Error("query parse error: FILTER supports entity variables only");
      }
      if (a.index == b.index) {
        throw Error("query parse error: FILTER compares a variable to itself");
      }
      p.distinct_pairs.emplace_back(std::min(a.index, b.index),
                                    std::max(a.index, b.index));
      Token sep = lex.next();
      if (sep.kind == Token::kPunct && sep.text == "&&") continue;
      expect_punct(sep, ")");
      break;
    }
    t = lex.next();
  } else if (t.kind == Token::kWord) {
    throw Error("query parse error: unsupported construct " + t.text);
  }

  expect_punct(t, "}");
  if (lex.next().kind != Token::kEnd) {
    throw Error("query parse error: trailing input after '}'");
  }

  // entity variables must be contiguous 0..k-1
  int max_var = *entity_vars.rbegin();
  if (static_cast<int>(entity_vars.size()) != max_var + 1 ||
      *entity_vars.begin() != 0) {
    throw Error("query parse error: entity variables must be ?e0..?eN");
  }
  p.num_vars = max_var + 1;

  for (const auto& [a, b] : p.distinct_pairs) {
    if (b >= p.num_vars) {
      throw Error("query parse error: FILTER references an undeclared variable");
    }
  }
  std::sort(p.distinct_pairs.begin(), p.distinct_pairs.end());
  p.distinct_pairs.erase(
      std::unique(p.distinct_pairs.begin(), p.distinct_pairs.end()),
      p.distinct_pairs.end());

  bool has_rel1 = false;
  bool has_rel2 = false;
  for (const auto& e : p.edges) {
    has_rel1 |= e.slot == Slot::kRel1;
    has_rel2 |= e.slot == Slot::kRel2;
  }
  if (!has_rel1 || !has_rel2) {
    throw Error("query parse error: both {rel1} and {rel2} anchors are required");
  }
  if (!p.connected()) {
    throw Error("query parse error: pattern graph is not connected");
  }
  return p;
}

std::string render_query(const GraphletPattern& p) {
  std::ostringstream out;
  out << "ASK WHERE { ";
  int wildcards = 0;
  for (const auto& e : p.edges) {
    out << "?e" << e.src << ' ';
    switch (e.slot) {
      case Slot::kRel1:
        out << "{rel1}";
        break;
      case Slot::kRel2:
        out << "{rel2}";
        break;
      case Slot::kWildcard:
        out << "?rel_" << wildcards++;
        break;
    }
    out << " ?e" << e.dst << " . ";
  }
  if (!p.distinct_pairs.empty()) {
    out << "FILTER(";
    for (std::size_t i = 0; i < p.distinct_pairs.size(); ++i) {
      if (i) out << " && ";
      out << "?e" << p.distinct_pairs[i].first << " != ?e"
          << p.distinct_pairs[i].second;
    }
    out << ") ";
  }
  out << "}";
  return out.str();
}

// ---------------------------------------------------------------------------
// Built-in catalogue
// ---------------------------------------------------------------------------

namespace {

struct CatalogueEntry {
  const char* name;
  bool closed;
  const char* query;
};

// The pattern catalogue as ASK query texts. Note the star filter sets
// are weaker than all-pairs distinctness (e.g. e1 vs e3 is not
// constrained in ffo_1-2); strict variants are derived on demand.
constexpr CatalogueEntry kCatalogue[] = {
    // 2-paths, open and closed
    {"ffo", false,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e1 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},
    {"ffc", true,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e1 {rel2} ?e0 . FILTER(?e0 != ?e1) }"},
    {"fro", false,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e2 {rel2} ?e1 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},
    {"frc", true,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e0 {rel2} ?e1 . FILTER(?e0 != ?e1) }"},
    {"rfo", false,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e1 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},
    {"rfc", true,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e1 {rel2} ?e0 . FILTER(?e0 != ?e1) }"},
    {"rro", false,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e2 {rel2} ?e1 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},
    {"rrc", true,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e0 {rel2} ?e1 . FILTER(?e0 != ?e1) }"},

    // 3-paths; the middle relation is a free variable
    {"fffo", false,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e1 ?rel_0 ?e2 . ?e2 {rel2} ?e3 . "
     "FILTER(?e0 != ?e1 && ?e0 != ?e2 && ?e1 != ?e2 && ?e1 != ?e3 && "
     "?e2 != ?e3 && ?e0 != ?e3) }"},
    {"fffc", true,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e1 ?rel_0 ?e2 . ?e2 {rel2} ?e0 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},
    {"ffro", false,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e1 ?rel_0 ?e2 . ?e3 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e0 != ?e2 && ?e1 != ?e2 && ?e1 != ?e3 && "
     "?e2 != ?e3 && ?e0 != ?e3) }"},
    {"ffrc", true,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e1 ?rel_0 ?e2 . ?e0 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},
    {"frfo", false,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e2 ?rel_0 ?e1 . ?e2 {rel2} ?e3 . "
     "FILTER(?e0 != ?e1 && ?e0 != ?e2 && ?e1 != ?e2 && ?e1 != ?e3 && "
     "?e2 != ?e3 && ?e0 != ?e3) }"},
    {"frfc", true,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e2 ?rel_0 ?e1 . ?e2 {rel2} ?e0 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},
    {"frro", false,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e2 ?rel_0 ?e1 . ?e3 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e0 != ?e2 && ?e1 != ?e2 && ?e1 != ?e3 && "
     "?e2 != ?e3 && ?e0 != ?e3) }"},
    {"frrc", true,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e2 ?rel_0 ?e1 . ?e0 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},
    {"rffo", false,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e1 ?rel_0 ?e2 . ?e2 {rel2} ?e3 . "
     "FILTER(?e0 != ?e1 && ?e0 != ?e2 && ?e1 != ?e2 && ?e1 != ?e3 && "
     "?e2 != ?e3 && ?e0 != ?e3) }"},
    {"rffc", true,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e1 ?rel_0 ?e2 . ?e2 {rel2} ?e0 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},
    {"rfro", false,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e1 ?rel_0 ?e2 . ?e3 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e0 != ?e2 && ?e1 != ?e2 && ?e1 != ?e3 && "
     "?e2 != ?e3 && ?e0 != ?e3) }"},
    {"rfrc", true,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e1 ?rel_0 ?e2 . ?e0 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},
    {"rrfo", false,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e2 ?rel_0 ?e1 . ?e2 {rel2} ?e3 . "
     "FILTER(?e0 != ?e1 && ?e0 != ?e2 && ?e1 != ?e2 && ?e1 != ?e3 && "
     "?e2 != ?e3 && ?e0 != ?e3) }"},
    {"rrfc", true,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e2 ?rel_0 ?e1 . ?e2 {rel2} ?e0 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},
    {"rrro", false,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e2 ?rel_0 ?e1 . ?e3 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e0 != ?e2 && ?e1 != ?e2 && ?e1 != ?e3 && "
     "?e2 != ?e3 && ?e0 != ?e3) }"},
    {"rrrc", true,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e2 ?rel_0 ?e1 . ?e0 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e0 != ?e2) }"},

    // stars: one rel1 edge and two rel2 edges around a center
    {"ffo_1-2", false,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e1 {rel2} ?e2 . ?e1 {rel2} ?e3 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e2 != ?e3 && ?e3 != ?e0 && "
     "?e0 != ?e2 && ?e1 != ?e2) }"},
    {"fro_1-2", false,
     "ASK WHERE { ?e0 {rel1} ?e1 . ?e2 {rel2} ?e1 . ?e3 {rel2} ?e1 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e2 != ?e3 && ?e3 != ?e0 && "
     "?e0 != ?e2 && ?e1 != ?e2) }"},
    {"rfo_1-2", false,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e1 {rel2} ?e2 . ?e1 {rel2} ?e3 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e2 != ?e3 && ?e3 != ?e0 && "
     "?e0 != ?e2 && ?e1 != ?e2) }"},
    {"rro_1-2", false,
     "ASK WHERE { ?e1 {rel1} ?e0 . ?e2 {rel2} ?e1 . ?e3 {rel2} ?e1 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e2 != ?e3 && ?e3 != ?e0 && "
     "?e0 != ?e2 && ?e1 != ?e2) }"},

    // stars: two rel1 edges and two rel2 edges around a center
    {"ffo_2-2", false,
     "ASK WHERE { ?e0 {rel1} ?e2 . ?e1 {rel1} ?e2 . ?e2 {rel2} ?e3 . "
     "?e2 {rel2} ?e4 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e2 != ?e3 && ?e3 != ?e0 && "
     "?e0 != ?e2 && ?e1 != ?e2 && ?e4 != ?e0 && ?e4 != ?e1 && "
     "?e4 != ?e2 && ?e4 != ?e3) }"},
    {"fro_2-2", false,
     "ASK WHERE { ?e0 {rel1} ?e2 . ?e1 {rel1} ?e2 . ?e3 {rel2} ?e2 . "
     "?e4 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e2 != ?e3 && ?e3 != ?e0 && "
     "?e0 != ?e2 && ?e1 != ?e2 && ?e4 != ?e0 && ?e4 != ?e1 && "
     "?e4 != ?e2 && ?e4 != ?e3) }"},
    {"rfo_2-2", false,
     "ASK WHERE { ?e2 {rel1} ?e0 . ?e2 {rel1} ?e1 . ?e2 {rel2} ?e3 . "
     "?e2 {rel2} ?e4 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e2 != ?e3 && ?e3 != ?e0 && "
     "?e0 != ?e2 && ?e1 != ?e2 && ?e4 != ?e0 && ?e4 != ?e1 && "
     "?e4 != ?e2 && ?e4 != ?e3) }"},
    {"rro_2-2", false,
     "ASK WHERE { ?e2 {rel1} ?e0 . ?e2 {rel1} ?e1 . ?e3 {rel2} ?e2 . "
     "?e4 {rel2} ?e2 . "
     "FILTER(?e0 != ?e1 && ?e1 != ?e2 && ?e2 != ?e3 && ?e3 != ?e0 && "
     "?e0 != ?e2 && ?e1 != ?e2 && ?e4 != ?e0 && ?e4 != ?e1 && "
     "?e4 != ?e2 && ?e4 != ?e3) }"},

    // undistinguished 2-paths: no closed/open split, no filters
    {"ff", false, "ASK WHERE { ?e0 {rel1} ?e1 . ?e1 {rel2} ?e2 . }"},
    {"fr", false, "ASK WHERE { ?e0 {rel1} ?e1 . ?e2 {rel2} ?e1 . }"},
    {"rf", false, "ASK WHERE { ?e1 {rel1} ?e0 . ?e1 {rel2} ?e2 . }"},
    {"rr", false, "ASK WHERE { ?e1 {rel1} ?e0 . ?e2 {rel2} ?e1 . }"},
};

std::vector<GraphletPattern> build_catalogue() {
  std::vector<GraphletPattern> out;
  for (const auto& entry : kCatalogue) {
    GraphletPattern p = pattern_from_query_text(entry.query);
    p.name = entry.name;
    p.closed = entry.closed;
    out.push_back(std::move(p));
  }
  return out;
}

bool is_star(const GraphletPattern& p) {
  return p.name.find('_') != std::string::npos;
}

GraphletPattern strictified(GraphletPattern p) {
  p.distinct_pairs.clear();
  for (int a = 0; a < p.num_vars; ++a) {
    for (int b = a + 1; b < p.num_vars; ++b) {
      p.distinct_pairs.emplace_back(a, b);
    }
  }
  return p;
}

}  // namespace

const std::vector<GraphletPattern>& pattern_catalogue() {
  static const std::vector<GraphletPattern> catalogue = build_catalogue();
  return catalogue;
}

const GraphletPattern& builtin_pattern(std::string_view name) {
  for (const auto& p : pattern_catalogue()) {
    if (p.name == name) return p;
  }
  throw Error("unknown pattern: " + std::string(name));
}

std::vector<std::string> builtin_vocabulary_names() {
  return {"v2-", "u2", "v2", "v2+", "v3-", "v3", "v3+", "m3", "m4'"};
}

Vocabulary builtin_vocabulary(std::string_view name, MatchMode mode,
                              bool strict_stars) {
  static const std::vector<std::string> two_open = {"ffo", "fro", "rfo", "rro"};
  static const std::vector<std::string> two_all = {"ffo", "ffc", "fro", "frc",
                                                   "rfo", "rfc", "rro", "rrc"};
  static const std::vector<std::string> three_all = {
      "fffo", "fffc", "ffro", "ffrc", "frfo", "frfc", "frro", "frrc",
      "rffo", "rffc", "rfro", "rfrc", "rrfo", "rrfc", "rrro", "rrrc"};
  static const std::vector<std::string> three_open = {
      "fffo", "ffro", "frfo", "frro", "rffo", "rfro", "rrfo", "rrro"};
  static const std::vector<std::string> undistinguished = {"ff", "fr", "rf", "rr"};
  static const std::vector<std::string> stars_12 = {"ffo_1-2", "fro_1-2",
                                                    "rfo_1-2", "rro_1-2"};
  static const std::vector<std::string> stars_22 = {"ffo_2-2", "fro_2-2",
                                                    "rfo_2-2", "rro_2-2"};

  std::vector<std::string> pattern_names;
  auto append = [&](const std::vector<std::string>& group) {
    pattern_names.insert(pattern_names.end(), group.begin(), group.end());
  };

  std::string canonical(name);
  if (canonical == "m4p") canonical = "m4'";

  if (canonical == "v2-") {
    append(two_open);
  } else if (canonical == "u2") {
    append(undistinguished);
  } else if (canonical == "v2") {
    append(two_all);
  } else if (canonical == "v2+") {
    append(two_all);
    append(stars_12);
    append(stars_22);
  } else if (canonical == "v3-") {
    append(two_all);
    append(three_open);
  } else if (canonical == "v3") {
    append(two_all);
    append(three_all);
  } else if (canonical == "v3+") {
    append(two_all);
    append(three_all);
    append(stars_12);
    append(stars_22);
  } else if (canonical == "m3") {
    append(stars_12);
  } else if (canonical == "m4'") {
    append(stars_12);
    append(stars_22);
  } else {
    throw Error("unknown vocabulary: " + std::string(name));
  }

  Vocabulary v;
  v.name = canonical;
  v.mode = mode;
  for (const auto& pname : pattern_names) {
    GraphletPattern p = builtin_pattern(pname);
    if (strict_stars && is_star(p)) p = strictified(std::move(p));
    v.patterns.push_back(std::move(p));
  }
  return v;
}

// ---------------------------------------------------------------------------
// JSON vocabulary files
// ---------------------------------------------------------------------------

namespace {

const char* slot_name(Slot s) {
  switch (s) {
    case Slot::kRel1:
      return "rel1";
    case Slot::kRel2:
      return "rel2";
    case Slot::kWildcard:
      return "wildcard";
  }
  return "";
}

Slot slot_from_name(const std::string& s) {
  if (s == "rel1") return Slot::kRel1;
  if (s == "rel2") return Slot::kRel2;
  if (s == "wildcard") return Slot::kWildcard;
  throw Error("vocabulary json: unknown slot " + s);
}

}  // namespace

std::string vocabulary_to_json(const Vocabulary& v) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : v.patterns) {
    nlohmann::ordered_json jp;
    jp["name"] = p.name;
    auto edges = nlohmann::ordered_json::array();
    for (const auto& e : p.edges) {
      edges.push_back({"e" + std::to_string(e.src), slot_name(e.slot),
                       "e" + std::to_string(e.dst)});
    }
    jp["edges"] = edges;
    auto filters = nlohmann::ordered_json::array();
    for (const auto& [a, b] : p.distinct_pairs) {
      filters.push_back({"e" + std::to_string(a), "e" + std::to_string(b)});
    }
    jp["filters"] = filters;
    jp["anchor"] = {"rel1", "rel2"};
    jp["closed"] = p.closed;
    arr.push_back(std::move(jp));
  }
  return arr.dump(2) + "\n";
}

namespace {

int var_index(const std::string& s) {
  if (s.size() < 2 || s[0] != 'e') throw Error("vocabulary json: bad variable " + s);
  return std::stoi(s.substr(1));
}

}  // namespace

Vocabulary vocabulary_from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("vocabulary json: ") + e.what());
  }
  if (!arr.is_array()) throw Error("vocabulary json: expected a top-level array");
  Vocabulary v;
  v.name = "custom";
  for (const auto& jp : arr) {
    GraphletPattern p;
    p.name = jp.at("name").get<std::string>();
    p.closed = jp.value("closed", false);
    int max_var = -1;
    for (const auto& je : jp.at("edges")) {
      PatternEdge e{};
      e.src = var_index(je.at(0).get<std::string>());
      e.slot = slot_from_name(je.at(1).get<std::string>());
      e.dst = var_index(je.at(2).get<std::string>());
      max_var = std::max({max_var, e.src, e.dst});
      p.edges.push_back(e);
    }
    p.num_vars = max_var + 1;
    if (jp.contains("filters")) {
      for (const auto& jf : jp.at("filters")) {
        int a = var_index(jf.at(0).get<std::string>());
        int b = var_index(jf.at(1).get<std::string>());
        if (a == b || std::max(a, b) >= p.num_vars) {
          throw Error("vocabulary json: bad filter in pattern " + p.name);
        }
        p.distinct_pairs.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
    std::sort(p.distinct_pairs.begin(), p.distinct_pairs.end());
    p.distinct_pairs.erase(
        std::unique(p.distinct_pairs.begin(), p.distinct_pairs.end()),
        p.distinct_pairs.end());
    if (!p.connected()) {
      throw Error("vocabulary json: pattern " + p.name + " is not connected");
    }
    v.patterns.push_back(std::move(p));
  }
  return v;
}

Vocabulary load_vocabulary_file(const std::filesystem::path& path,
                                MatchMode mode) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Vocabulary v = vocabulary_from_json(ss.str());
  v.mode = mode;
  return v;
}

void save_vocabulary_file(const std::filesystem::path& path,
                          const Vocabulary& v) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << vocabulary_to_json(v);
}

// ---------------------------------------------------------------------------
// Positional orders
// ---------------------------------------------------------------------------

std::vector<std::vector<int>> spans(const PositionalOrder& order) {
  const int n = order.full_arity;
  if (n <= 0) throw Error("spans: arity must be positive");
  std::vector<int> fixed(n + 1, 0);  // 1-based positions; 0 = free
  for (const auto& [pos, idx] : order.anchors) {
    if (pos < 1 || pos > n || idx < 1 || idx > n) {
      throw Error("spans: anchor out of range");
    }
    if (fixed[pos] != 0) throw Error("spans: duplicate anchor position");
    fixed[pos] = idx;
  }
  std::vector<std::vector<int>> out;
  std::vector<int> tuple(n, 1);
  for (int p = 0; p < n; ++p) {
    if (fixed[p + 1] != 0) tuple[p] = fixed[p + 1];
  }
  // odometer over the free positions
  while (true) {
    out.push_back(tuple);
    int p = n - 1;
    while (p >= 0) {
      if (fixed[p + 1] != 0) {
        --p;
        continue;
      }
      if (tuple[p] < n) {
        ++tuple[p];
        break;
      }
      tuple[p] = 1;
      --p;
    }
    if (p < 0) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace kgm
