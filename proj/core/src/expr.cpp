#include "ccgeo/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace ccgeo {

Poly Poly::constant(double c, int nvars) {
  Poly p(nvars);
  if (c != 0.0) p.terms_.push_back({Exps{}, c});
  return p;
}

Poly Poly::variable(int index, int nvars) {
  if (index < 0 || index >= nvars)
    throw ArgumentError("polynomial variable index out of range");
  Poly p(nvars);
  Exps e{};
  e[index] = 1;
  p.terms_.push_back({e, 1.0});
  return p;
}

int Poly::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) {
    int t = 0;
    for (int i = 0; i < nvars_; ++i) t += e[i];
    d = std::max(d, t);
  }
  return d;
}

double Poly::eval(const Vec& x) const {
  double acc = 0.0;
  for (const auto& [e, c] : terms_) {
    double m = c;
    for (int i = 0; i < nvars_; ++i) {
      for (int k = 0; k < e[i]; ++k) m *= x[i];
    }
    acc += m;
  }
  return acc;
}

Poly Poly::derivative(int var) const {
  Poly out(nvars_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    Exps d = e;
    d[var] -= 1;
    out.add_term(d, c * e[var]);
  }
  out.normalize();
  return out;
}

void Poly::add_term(const Exps& e, double c) { terms_.push_back({e, c}); }

void Poly::normalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<Exps, double>> merged;
  for (const auto& t : terms_) {
    if (!merged.empty() && merged.back().first == t.first)
      merged.back().second += t.second;
    else
      merged.push_back(t);
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const auto& t) { return t.second == 0.0; }),
               merged.end());
  terms_ = std::move(merged);
}

Poly Poly::operator+(const Poly& o) const {
  Poly out(nvars_);
  out.terms_ = terms_;
  for (const auto& t : o.terms_) out.terms_.push_back(t);
  out.normalize();
  return out;
}

Poly Poly::operator-(const Poly& o) const { return *this + (o * -1.0); }

Poly Poly::operator*(const Poly& o) const {
  Poly out(nvars_);
  for (const auto& [ea, ca] : terms_) {
    for (const auto& [eb, cb] : o.terms_) {
      Exps e{};
      for (int i = 0; i < kMaxDim; ++i) {
        int s = ea[i] + eb[i];
        if (s > 255) throw ArgumentError("polynomial degree overflow");
        e[i] = static_cast<std::uint8_t>(s);
      }
      out.add_term(e, ca * cb);
    }
  }
  out.normalize();
  return out;
}

Poly Poly::operator*(double c) const {
  Poly out(nvars_);
  out.terms_ = terms_;
  for (auto& t : out.terms_) t.second *= c;
  out.normalize();
  return out;
}

Poly Poly::pow(int k) const {
  if (k < 0) throw ArgumentError("negative polynomial exponent");
  Poly acc = Poly::constant(1.0, nvars_);
  for (int i = 0; i < k; ++i) acc = acc * (*this);
  return acc;
}

std::string Poly::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << (c >= 0 ? " + " : " - ");
    else if (c < 0) os << "-";
    first = false;
    os << std::abs(c);
    for (int i = 0; i < nvars_; ++i) {
      if (e[i] == 0) continue;
      os << "*x" << (i + 1);
      if (e[i] > 1) os << "^" << int(e[i]);
    }
  }
  return os.str();
}

// --- parser ---------------------------------------------------------------
//
// expr   := term (('+'|'-') term)*
// term   := factor ('*' factor)*
// factor := ('-')* base ('^' uint)?
// base   := number | 'x'<digits> | '(' expr ')'

namespace {

struct Parser {
  const std::string& s;
  std::size_t pos = 0;
  int nvars;

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip();
    return pos < s.size() ? s[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& what) {
    throw ArgumentError("expression parse error at position " +
                        std::to_string(pos) + ": " + what + " in \"" + s + "\"");
  }

  Poly expr() {
    Poly acc = term();
    while (true) {
      if (eat('+')) acc = acc + term();
      else if (eat('-')) acc = acc - term();
      else return acc;
    }
  }

  Poly term() {
    Poly acc = factor();
    while (eat('*')) acc = acc * factor();
    return acc;
  }

  Poly factor() {
    int sign = 1;
    while (eat('-')) sign = -sign;
    Poly b = base();
    if (eat('^')) {
      skip();
      std::size_t start = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos == start) fail("expected integer exponent");
      b = b.pow(std::stoi(s.substr(start, pos - start)));
    }
    return sign < 0 ? -b : b;
  }

  Poly base() {
    skip();
    if (eat('(')) {
      Poly in = expr();
      if (!eat(')')) fail("expected ')'");
      return in;
    }
    char c = peek();
    if (c == 'x') {
      ++pos;
      std::size_t start = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos == start) fail("expected variable index after 'x'");
      int idx = std::stoi(s.substr(start, pos - start));
      if (idx < 1 || idx > nvars)
        fail("variable x" + std::to_string(idx) + " out of range (n=" +
             std::to_string(nvars) + ")");
      return Poly::variable(idx - 1, nvars);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos;
      while (pos < s.size() &&
             (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' ||
              s[pos] == 'e' || s[pos] == 'E' ||
              ((s[pos] == '+' || s[pos] == '-') && pos > start &&
               (s[pos - 1] == 'e' || s[pos - 1] == 'E'))))
        ++pos;
      try {
        return Poly::constant(std::stod(s.substr(start, pos - start)), nvars);
      } catch (const std::exception&) {
        fail("malformed number");
      }
    }
    fail("unexpected character");
  }
};

}  // namespace

Poly Poly::parse(const std::string& text, int nvars) {
  if (nvars < 1 || nvars > kMaxDim)
    throw ArgumentError("polynomial variable count must be in [1, " +
                        std::to_string(kMaxDim) + "]");
  Parser p{text, 0, nvars};
  Poly out = p.expr();
  p.skip();
  if (p.pos != text.size()) p.fail("trailing input");
  return out;
}

}  // namespace ccgeo
