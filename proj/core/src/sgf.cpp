#include "kibitz/sgf.hpp"

#include <charconv>
#include <cmath>
#include <functional>

namespace kibitz {

ParseError::ParseError(std::size_t offset, std::string expected, std::string detail)
    : Error("SGF parse error at byte " + std::to_string(offset) + ": expected " + expected +
            (detail.empty() ? std::string() : " (" + detail + ")")),
      offset_(offset),
      expected_(std::move(expected)) {}

const SgfProperty* SgfNode::find(std::string_view ident) const {
  for (const auto& p : properties)
    if (p.ident == ident) return &p;
  return nullptr;
}

SgfProperty* SgfNode::find(std::string_view ident) {
  for (auto& p : properties)
    if (p.ident == ident) return &p;
  return nullptr;
}

namespace {

constexpr int kMaxTreeDepth = 1000;

bool isSpace(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool isUpper(char c) { return c >= 'A' && c <= 'Z'; }
bool isLower(char c) { return c >= 'a' && c <= 'z'; }

// Replaces malformed UTF-8 sequences with U+FFFD. Returns true if anything changed.
bool sanitizeUtf8(std::string& s) {
  std::string out;
  bool changed = false;
  std::size_t i = 0;
  const auto n = s.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    if (c < 0x80) len = 1;
    else if ((c & 0xE0) == 0xC0 && c >= 0xC2) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0 && c <= 0xF4) len = 4;
    bool ok = len > 0 && i + len <= n;
    for (std::size_t k = 1; ok && k < len; ++k) ok = (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    if (ok && len == 3) {
      const auto c1 = static_cast<unsigned char>(s[i + 1]);
      ok = !(c == 0xE0 && c1 < 0xA0) && !(c == 0xED && c1 >= 0xA0);
    } else if (ok && len == 4) {
      const auto c1 = static_cast<unsigned char>(s[i + 1]);
      ok = !(c == 0xF0 && c1 < 0x90) && !(c == 0xF4 && c1 >= 0x90);
    }
    if (ok) {
      out.append(s, i, len);
      i += len;
    } else {
      out += "\xEF\xBF\xBD";
      changed = true;
      ++i;
    }
  }
  if (changed) s = std::move(out);
  return changed;
}

class Parser {
 public:
  Parser(std::string_view in, std::vector<std::string>& warnings) : in_(in), warnings_(warnings) {}

  std::vector<SgfTree> collection() {
    skipToFirstTree();
    std::vector<SgfTree> trees;
    if (atEnd()) throw ParseError(pos_, "'('", "no game tree found");
    while (true) {
      skipSpace();
      if (atEnd() || peek() != '(') break;
      trees.push_back(gameTree(0));
    }
    skipSpace();
    if (!atEnd()) warnings_.push_back("ignored " + std::to_string(in_.size() - pos_) + " trailing bytes after the last game tree");
    if (invalidUtf8_) warnings_.push_back("input is not valid UTF-8; malformed bytes replaced with U+FFFD");
    return trees;
  }

 private:
  bool atEnd() const { return pos_ >= in_.size(); }
  char peek() const { return in_[pos_]; }
  void skipSpace() {
    while (!atEnd() && isSpace(peek())) ++pos_;
  }

  void skipToFirstTree() {
    const std::size_t start = pos_;
    bool junk = false;
    while (!atEnd() && peek() != '(') {
      if (!isSpace(peek())) junk = true;
      ++pos_;
    }
    if (junk && !atEnd()) warnings_.push_back("skipped " + std::to_string(pos_ - start) + " bytes before the first game tree");
  }

  void expect(char c, const char* what) {
    skipSpace();
    if (atEnd()) throw ParseError(pos_, what, "end of input");
    if (peek() != c) throw ParseError(pos_, what, std::string("found '") + peek() + "'");
    ++pos_;
  }

  SgfTree gameTree(int depth) {
    if (depth > kMaxTreeDepth) throw ParseError(pos_, "shallower nesting", "game tree nested deeper than " + std::to_string(kMaxTreeDepth));
    expect('(', "'('");
    SgfTree tree;
    skipSpace();
    if (atEnd() || peek() != ';') throw ParseError(pos_, "';'", atEnd() ? "end of input" : "game tree without a node");
    while (true) {
      skipSpace();
      if (atEnd() || peek() != ';') break;
      ++pos_;
      tree.nodes.push_back(node());
    }
    while (true) {
      skipSpace();
      if (atEnd() || peek() != '(') break;
      tree.children.push_back(gameTree(depth + 1));
    }
    expect(')', "')'");
    return tree;
  }

  SgfNode node() {
    SgfNode n;
    while (true) {
      skipSpace();
      if (atEnd() || !(isUpper(peek()) || isLower(peek()))) break;
      const std::size_t identStart = pos_;
      std::string ident;
      bool hadLower = false;
      while (!atEnd() && (isUpper(peek()) || isLower(peek()))) {
        if (isUpper(peek())) ident += peek();
        else hadLower = true;
        ++pos_;
      }
      if (ident.empty()) throw ParseError(identStart, "property identifier", "identifier has no uppercase letters");
      if (hadLower) warnings_.push_back("lowercase letters dropped from property identifier at byte " + std::to_string(identStart));
      SgfProperty prop{ident, {}};
      skipSpace();
      if (atEnd() || peek() != '[') throw ParseError(pos_, "'['", atEnd() ? "end of input" : "property " + ident + " has no value");
      while (true) {
        skipSpace();
        if (atEnd() || peek() != '[') break;
        ++pos_;
        prop.values.push_back(value());
      }
      if (SgfProperty* existing = n.find(ident)) {
        warnings_.push_back("duplicate property " + ident + " merged at byte " + std::to_string(identStart));
        existing->values.insert(existing->values.end(), prop.values.begin(), prop.values.end());
      } else {
        n.properties.push_back(std::move(prop));
      }
    }
    return n;
  }

  std::string value() {
    std::string v;
    while (true) {
      if (atEnd()) throw ParseError(pos_, "']'", "end of input inside property value");
      const char c = peek();
      ++pos_;
      if (c == ']') break;
      if (c == '\\') {
        if (atEnd()) throw ParseError(pos_, "']'", "end of input after escape");
        const char e = peek();
        ++pos_;
        if (e == '\n' || e == '\r') {
          // soft line break
          if (!atEnd() && (peek() == '\n' || peek() == '\r') && peek() != e) ++pos_;
          continue;
        }
        v += e;
        continue;
      }
      v += c;
    }
    if (sanitizeUtf8(v)) invalidUtf8_ = true;
    return v;
  }

  std::string_view in_;
  std::vector<std::string>& warnings_;
  std::size_t pos_ = 0;
  bool invalidUtf8_ = false;
};

template <typename Tree, typename Fn>
void forEachMainLineNode(Tree& tree, Fn&& fn) {
  Tree* t = &tree;
  while (t) {
    for (auto& n : t->nodes) fn(n);
    t = t->children.empty() ? nullptr : &t->children.front();
  }
}

int parseInt(std::string_view s, const char* what) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ParseError(0, what, "got '" + std::string(s) + "'");
  return v;
}

std::string trim(std::string_view s) {
  while (!s.empty() && isSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && isSpace(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::vector<Point> expandPointList(const std::string& v, int size) {
  const auto colon = v.find(':');
  try {
    if (colon == std::string::npos) {
      auto p = fromSgfCoord(v, size);
      if (!p) return {};
      return {*p};
    }
    const auto a = fromSgfCoord(std::string_view(v).substr(0, colon), size);
    const auto b = fromSgfCoord(std::string_view(v).substr(colon + 1), size);
    if (!a || !b) throw ParseError(0, "point rectangle", "got '" + v + "'");
    std::vector<Point> pts;
    for (int y = std::min(a->y, b->y); y <= std::max(a->y, b->y); ++y)
      for (int x = std::min(a->x, b->x); x <= std::max(a->x, b->x); ++x) pts.push_back({x, y});
    return pts;
  } catch (const MalformedCoordinate& e) {
    throw ParseError(0, "point on the board", e.what());
  }
}

void interpret(ParsedGame& out) {
  GameRecord& rec = out.record;
  auto& warnings = out.warnings;
  const SgfTree& tree = rec.rawTrees.front();
  const SgfNode& root = tree.nodes.front();

  if (const auto* sz = root.find("SZ")) {
    const std::string v = trim(sz->values.front());
    const auto colon = v.find(':');
    if (colon != std::string::npos) {
      const int w = parseInt(std::string_view(v).substr(0, colon), "board size");
      const int h = parseInt(std::string_view(v).substr(colon + 1), "board size");
      if (w != h) throw ParseError(0, "square board", "SZ[" + v + "]");
      rec.size = w;
    } else {
      rec.size = parseInt(v, "board size");
    }
  }
  if (rec.size < kMinBoardSize || rec.size > kMaxBoardSize)
    throw ParseError(0, "board size 9..19", "SZ[" + std::to_string(rec.size) + "]");

  if (const auto* km = root.find("KM")) {
    const std::string v = trim(km->values.front());
    double k = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), k);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(k))
      warnings.push_back("unreadable komi KM[" + v + "], using 0");
    else
      rec.komi = k;
  }
  if (const auto* ha = root.find("HA")) {
    try {
      rec.handicap = std::max(0, parseInt(trim(ha->values.front()), "handicap"));
    } catch (const ParseError&) {
      warnings.push_back("unreadable handicap HA[" + ha->values.front() + "], using 0");
    }
  }
  if (const auto* pb = root.find("PB")) rec.blackName = pb->values.front();
  if (const auto* pw = root.find("PW")) rec.whiteName = pw->values.front();
  if (const auto* re = root.find("RE")) rec.result = re->values.front();
  if (const auto* ca = root.find("CA")) {
    std::string cs = trim(ca->values.front());
    for (auto& c : cs) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (cs != "UTF-8" && cs != "UTF8") warnings.push_back("charset CA[" + ca->values.front() + "] ignored; decoded as UTF-8");
  }
  if (rec.rawTrees.size() > 1)
    warnings.push_back("collection holds " + std::to_string(rec.rawTrees.size()) + " games; only the first is analyzed");

  forEachMainLineNode(tree, [&](const SgfNode& n) {
    for (const auto& [ident, color] : {std::pair{"AB", Color::Black}, std::pair{"AW", Color::White}}) {
      const auto* prop = n.find(ident);
      if (!prop) continue;
      if (!rec.moves.empty()) {
        warnings.push_back(std::string("setup property ") + ident + " after move " + std::to_string(rec.moves.size()) + " ignored");
        continue;
      }
      for (const auto& v : prop->values)
        for (const Point& p : expandPointList(v, rec.size)) rec.setupStones.push_back({color, p});
    }
    if (n.find("AE") && rec.moves.empty()) warnings.push_back("AE setup property ignored");

    const std::size_t firstMove = rec.moves.size();
    for (const auto& [ident, color] : {std::pair{"B", Color::Black}, std::pair{"W", Color::White}}) {
      const auto* prop = n.find(ident);
      if (!prop) continue;
      if (prop->values.size() > 1) warnings.push_back(std::string("move property ") + ident + " with several values; using the first");
      std::optional<Point> pt;
      try {
        pt = fromSgfCoord(trim(prop->values.front()), rec.size);
      } catch (const MalformedCoordinate& e) {
        throw ParseError(0, "move coordinate", e.what());
      }
      if (!rec.moves.empty() && rec.moves.back().color == color)
        warnings.push_back("move " + std::to_string(rec.moves.size() + 1) + ": " + std::string(colorName(color)) +
                           " moves twice in a row");
      rec.moves.push_back(Move{color, pt});
      rec.comments.emplace_back();
      rec.timeLeft.emplace_back();
      const auto* tl = n.find(color == Color::Black ? "BL" : "WL");
      if (tl) {
        double t = 0;
        const std::string v = trim(tl->values.front());
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), t);
        if (ec == std::errc() && p == v.data() + v.size() && std::isfinite(t)) rec.timeLeft.back() = t;
      }
    }
    if (rec.moves.size() > firstMove) {
      if (const auto* c = n.find("C")) rec.comments[firstMove] = c->values.front();
    }
  });

  if (rec.handicap > 0 && rec.setupStones.empty())
    warnings.push_back("HA[" + std::to_string(rec.handicap) + "] without AB stones");
}

void writeTree(std::string& out, const SgfTree& t) {
  out += '(';
  bool first = true;
  for (const auto& n : t.nodes) {
    if (!first) out += '\n';
    first = false;
    out += ';';
    for (const auto& p : n.properties) {
      out += p.ident;
      for (const auto& v : p.values) {
        out += '[';
        out += escapeSgfValue(v);
        out += ']';
      }
    }
  }
  for (const auto& c : t.children) {
    out += '\n';
    writeTree(out, c);
  }
  out += ')';
}

std::string shortNumber(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// A minimal game tree for records that were built in code rather than parsed.
SgfTree synthesizeTree(const GameRecord& rec) {
  SgfTree t;
  SgfNode root;
  auto add = [&root](std::string ident, std::string value) { root.properties.push_back({std::move(ident), {std::move(value)}}); };
  add("GM", "1");
  add("FF", "4");
  add("CA", "UTF-8");
  add("SZ", std::to_string(rec.size));
  add("KM", shortNumber(rec.komi));
  if (rec.handicap > 0) add("HA", std::to_string(rec.handicap));
  if (!rec.blackName.empty()) add("PB", rec.blackName);
  if (!rec.whiteName.empty()) add("PW", rec.whiteName);
  if (rec.result) add("RE", *rec.result);
  for (Color c : {Color::Black, Color::White}) {
    SgfProperty setup{c == Color::Black ? "AB" : "AW", {}};
    for (const auto& s : rec.setupStones)
      if (s.color == c) setup.values.push_back(toSgfCoord(s.point));
    if (!setup.values.empty()) root.properties.push_back(std::move(setup));
  }
  t.nodes.push_back(std::move(root));
  for (std::size_t i = 0; i < rec.moves.size(); ++i) {
    const Move& m = rec.moves[i];
    SgfNode n;
    n.properties.push_back({m.color == Color::Black ? "B" : "W", {m.point ? toSgfCoord(m.point) : std::string()}});
    if (i < rec.timeLeft.size() && rec.timeLeft[i])
      n.properties.push_back({m.color == Color::Black ? "BL" : "WL", {shortNumber(*rec.timeLeft[i])}});
    t.nodes.push_back(std::move(n));
  }
  return t;
}

}  // namespace

std::string escapeSgfValue(std::string_view raw) {
  std::string s;
  s.reserve(raw.size());
  for (char c : raw) {
    if (c == ']' || c == '\\') s += '\\';
    s += c;
  }
  return s;
}

ParsedGame parseSgf(std::string_view bytes) {
  ParsedGame out;
  Parser parser(bytes, out.warnings);
  out.record.rawTrees = parser.collection();
  interpret(out);
  return out;
}

std::string writeSgf(const GameRecord& record) {
  std::vector<SgfTree> trees = record.rawTrees;
  if (trees.empty()) trees.push_back(synthesizeTree(record));
  {
    std::size_t moveIndex = 0;
    forEachMainLineNode(trees.front(), [&](SgfNode& n) {
      const bool hasMove = n.find("B") || n.find("W");
      if (!hasMove) return;
      const std::size_t count = (n.find("B") ? 1 : 0) + (n.find("W") ? 1 : 0);
      if (moveIndex < record.comments.size()) {
        const auto& comment = record.comments[moveIndex];
        SgfProperty* c = n.find("C");
        if (comment) {
          if (c) c->values = {*comment};
          else n.properties.push_back({"C", {*comment}});
        } else if (c) {
          std::erase_if(n.properties, [](const SgfProperty& p) { return p.ident == "C"; });
        }
      }
      moveIndex += count;
    });
  }
  std::string out;
  for (const auto& t : trees) {
    writeTree(out, t);
    out += '\n';
  }
  return out;
}

void annotateMove(GameRecord& record, std::size_t moveIndex, std::string_view text) {
  if (moveIndex >= record.moves.size()) throw std::out_of_range("annotateMove: no move " + std::to_string(moveIndex));
  record.comments.resize(record.moves.size());
  auto& c = record.comments[moveIndex];
  if (c && !c->empty()) {
    *c += '\n';
    *c += text;
  } else {
    c = std::string(text);
  }
}

}  // namespace kibitz
