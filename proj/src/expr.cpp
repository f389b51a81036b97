#include "torspec/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

namespace torspec::expr {

namespace {

ExprPtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

}  // namespace

ExprPtr constant(double v) {
  Node n;
  n.op = Node::Op::Const;
  n.value = v;
  return make(std::move(n));
}

ExprPtr variable(VarKind kind, int ax0, int ax1) {
  Node n;
  n.op = Node::Op::Var;
  n.var = kind;
  n.ax0 = ax0;
  n.ax1 = ax1;
  if (kind == VarKind::D2U && ax1 < ax0) std::swap(n.ax0, n.ax1);  // Hessian symmetry
  return make(std::move(n));
}

ExprPtr add(std::vector<ExprPtr> kids) {
  std::vector<ExprPtr> out;
  double c = 0.0;
  for (auto& k : kids) {
    if (k->op == Node::Op::Const)
      c += k->value;
    else if (k->op == Node::Op::Add)
      out.insert(out.end(), k->kids.begin(), k->kids.end());
    else
      out.push_back(std::move(k));
  }
  if (c != 0.0 || out.empty()) out.push_back(constant(c));
  if (out.size() == 1) return out[0];
  Node n;
  n.op = Node::Op::Add;
  n.kids = std::move(out);
  return make(std::move(n));
}

ExprPtr mul(std::vector<ExprPtr> kids) {
  std::vector<ExprPtr> out;
  double c = 1.0;
  for (auto& k : kids) {
    if (k->op == Node::Op::Const)
      c *= k->value;
    else if (k->op == Node::Op::Mul)
      out.insert(out.end(), k->kids.begin(), k->kids.end());
    else
      out.push_back(std::move(k));
  }
  if (c == 0.0) return constant(0.0);
  if (c != 1.0 || out.empty()) out.insert(out.begin(), constant(c));
  if (out.size() == 1) return out[0];
  Node n;
  n.op = Node::Op::Mul;
  n.kids = std::move(out);
  return make(std::move(n));
}

ExprPtr pow(ExprPtr base, int exponent) {
  if (exponent < 0) throw ParseError("negative powers are not supported");
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return base;
  if (base->op == Node::Op::Const) return constant(std::pow(base->value, exponent));
  Node n;
  n.op = Node::Op::Pow;
  n.exponent = exponent;
  n.kids.push_back(std::move(base));
  return make(std::move(n));
}

ExprPtr neg(ExprPtr e) { return mul({constant(-1.0), std::move(e)}); }

namespace {
ExprPtr unary(Node::Op op, ExprPtr e) {
  if (e->op == Node::Op::Const) {
    const double v = e->value;
    switch (op) {
      case Node::Op::Sin: return constant(std::sin(v));
      case Node::Op::Cos: return constant(std::cos(v));
      case Node::Op::Exp: return constant(std::exp(v));
      default: break;
    }
  }
  Node n;
  n.op = op;
  n.kids.push_back(std::move(e));
  return make(std::move(n));
}
}  // namespace

ExprPtr sin(ExprPtr e) { return unary(Node::Op::Sin, std::move(e)); }
ExprPtr cos(ExprPtr e) { return unary(Node::Op::Cos, std::move(e)); }
ExprPtr exp(ExprPtr e) { return unary(Node::Op::Exp, std::move(e)); }

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(std::string_view src, int freq_axes, int space_axes)
      : src_(src), b_(freq_axes), d_(space_axes) {}

  ExprPtr run() {
    ExprPtr e = expression();
    skip_ws();
    if (pos_ != src_.size()) fail("trailing input");
    return e;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int b_, d_;

  [[noreturn]] void fail(const std::string& what) {
    std::ostringstream os;
    os << "parse error at offset " << pos_ << ": " << what;
    throw ParseError(os.str());
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  ExprPtr expression() {
    std::vector<ExprPtr> terms;
    bool negate = eat('-');
    for (;;) {
      ExprPtr t = term();
      terms.push_back(negate ? neg(std::move(t)) : std::move(t));
      if (eat('+'))
        negate = false;
      else if (eat('-'))
        negate = true;
      else
        break;
    }
    return add(std::move(terms));
  }

  ExprPtr term() {
    std::vector<ExprPtr> factors{factor()};
    for (;;) {
      if (eat('*')) {
        factors.push_back(factor());
      } else if (eat('/')) {
        ExprPtr den = factor();
        if (den->op != Node::Op::Const || den->value == 0.0)
          fail("division is only supported by nonzero constants");
        factors.push_back(constant(1.0 / den->value));
      } else {
        break;
      }
    }
    return mul(std::move(factors));
  }

  ExprPtr factor() {
    skip_ws();
    ExprPtr base;
    if (eat('-')) return neg(factor());
    if (eat('(')) {
      base = expression();
      if (!eat(')')) fail("missing ')'");
    } else if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
      base = number();
    } else if (std::isalpha(static_cast<unsigned char>(peek()))) {
      base = identifier();
    } else {
      fail("expected a factor");
    }
    while (eat('^')) base = pow(std::move(base), integer());
    return base;
  }

  ExprPtr number() {
    skip_ws();
    std::size_t end = pos_;
    while (end < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.' ||
            src_[end] == 'e' || src_[end] == 'E' ||
            ((src_[end] == '+' || src_[end] == '-') && end > pos_ &&
             (src_[end - 1] == 'e' || src_[end - 1] == 'E'))))
      ++end;
    const std::string text(src_.substr(pos_, end - pos_));
    try {
      const double v = std::stod(text);
      pos_ = end;
      return constant(v);
    } catch (...) {
      fail("bad numeric literal '" + text + "'");
    }
  }

  int integer() {
    skip_ws();
    bool negative = eat('-');
    std::size_t end = pos_;
    while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    if (end == pos_) fail("expected an integer exponent");
    const int v = std::stoi(std::string(src_.substr(pos_, end - pos_)));
    pos_ = end;
    return negative ? -v : v;
  }

  int trailing_index(std::string_view name, std::size_t prefix_len) {
    if (name.size() <= prefix_len) fail("missing axis index in '" + std::string(name) + "'");
    int v = 0;
    for (std::size_t i = prefix_len; i < name.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(name[i])))
        fail("bad axis index in '" + std::string(name) + "'");
      v = v * 10 + (name[i] - '0');
    }
    return v;
  }

  ExprPtr identifier() {
    skip_ws();
    std::size_t end = pos_;
    while (end < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[end])) ||
                                 src_[end] == '_'))
      ++end;
    std::string name(src_.substr(pos_, end - pos_));
    pos_ = end;
    for (char& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));

    if (name == "sin" || name == "cos" || name == "exp") {
      if (!eat('(')) fail("'" + name + "' must be followed by '('");
      ExprPtr arg = expression();
      if (!eat(')')) fail("missing ')' after '" + name + "'");
      if (name == "sin") return sin(std::move(arg));
      if (name == "cos") return cos(std::move(arg));
      return exp(std::move(arg));
    }
    if (name == "pi") return constant(std::numbers::pi);
    if (name == "u") return variable(VarKind::U);

    if (name.starts_with("u_x") || name.starts_with("ux")) {
      const std::size_t skip = name.starts_with("u_x") ? 3 : 2;
      std::string rest = name.substr(skip);
      // forms: "<i>", "<i>x<j>", "<i>_x<j>"
      std::size_t split = rest.find('x');
      if (split == std::string::npos) {
        const int i = trailing_index("x" + rest, 1);
        if (i < 1 || i > d_) fail("derivative axis out of range in '" + name + "'");
        return variable(VarKind::DU, i - 1);
      }
      std::string first = rest.substr(0, split);
      if (!first.empty() && first.back() == '_') first.pop_back();
      std::string second = rest.substr(split + 1);
      const int i = trailing_index("x" + first, 1);
      const int j = trailing_index("x" + second, 1);
      if (i < 1 || i > d_ || j < 1 || j > d_)
        fail("derivative axis out of range in '" + name + "'");
      return variable(VarKind::D2U, i - 1, j - 1);
    }

    if (name.starts_with("theta") || name.starts_with("th")) {
      const std::size_t skip = name.starts_with("theta") ? 5 : 2;
      const int i = trailing_index(name, skip);
      if (i < 1 || i > b_) fail("frequency axis out of range in '" + name + "'");
      return variable(VarKind::Coord, i - 1);
    }
    if (name.starts_with("x")) {
      const int i = trailing_index(name, 1);
      if (i < 1 || i > d_) fail("spatial axis out of range in '" + name + "'");
      return variable(VarKind::Coord, b_ + i - 1);
    }
    fail("unsupported symbol '" + name + "'");
  }
};

}  // namespace

ExprPtr parse(std::string_view src, int freq_axes, int space_axes) {
  return Parser(src, freq_axes, space_axes).run();
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

Complex eval(const ExprPtr& e, const Point& pt) {
  switch (e->op) {
    case Node::Op::Const:
      return {e->value, 0.0};
    case Node::Op::Var:
      switch (e->var) {
        case VarKind::Coord: return {pt.coords[static_cast<std::size_t>(e->ax0)], 0.0};
        case VarKind::U: return pt.u;
        case VarKind::DU: return pt.du[static_cast<std::size_t>(e->ax0)];
        case VarKind::D2U: {
          const auto d = pt.du.size();
          return pt.d2u[static_cast<std::size_t>(e->ax0) * d + static_cast<std::size_t>(e->ax1)];
        }
      }
      return {};
    case Node::Op::Add: {
      Complex s{0.0, 0.0};
      for (const auto& k : e->kids) s += eval(k, pt);
      return s;
    }
    case Node::Op::Mul: {
      Complex p{1.0, 0.0};
      for (const auto& k : e->kids) p *= eval(k, pt);
      return p;
    }
    case Node::Op::Pow: {
      const Complex b = eval(e->kids[0], pt);
      Complex p{1.0, 0.0};
      for (int i = 0; i < e->exponent; ++i) p *= b;
      return p;
    }
    case Node::Op::Neg:
      return -eval(e->kids[0], pt);
    case Node::Op::Sin:
      return std::sin(eval(e->kids[0], pt));
    case Node::Op::Cos:
      return std::cos(eval(e->kids[0], pt));
    case Node::Op::Exp:
      return std::exp(eval(e->kids[0], pt));
  }
  return {};
}

// ---------------------------------------------------------------------------
// Symbolic differentiation
// ---------------------------------------------------------------------------

ExprPtr diff(const ExprPtr& e, VarKind kind, int ax0, int ax1) {
  if (kind == VarKind::D2U && ax1 < ax0) std::swap(ax0, ax1);
  switch (e->op) {
    case Node::Op::Const:
      return constant(0.0);
    case Node::Op::Var:
      return constant(e->var == kind && e->ax0 == ax0 && e->ax1 == ax1 ? 1.0 : 0.0);
    case Node::Op::Add: {
      std::vector<ExprPtr> kids;
      for (const auto& k : e->kids) kids.push_back(diff(k, kind, ax0, ax1));
      return add(std::move(kids));
    }
    case Node::Op::Mul: {
      std::vector<ExprPtr> terms;
      for (std::size_t i = 0; i < e->kids.size(); ++i) {
        std::vector<ExprPtr> factors;
        for (std::size_t j = 0; j < e->kids.size(); ++j)
          factors.push_back(i == j ? diff(e->kids[j], kind, ax0, ax1) : e->kids[j]);
        terms.push_back(mul(std::move(factors)));
      }
      return add(std::move(terms));
    }
    case Node::Op::Pow:
      return mul({constant(static_cast<double>(e->exponent)), pow(e->kids[0], e->exponent - 1),
                  diff(e->kids[0], kind, ax0, ax1)});
    case Node::Op::Neg:
      return neg(diff(e->kids[0], kind, ax0, ax1));
    case Node::Op::Sin:
      return mul({cos(e->kids[0]), diff(e->kids[0], kind, ax0, ax1)});
    case Node::Op::Cos:
      return neg(mul({sin(e->kids[0]), diff(e->kids[0], kind, ax0, ax1)}));
    case Node::Op::Exp:
      return mul({exp(e->kids[0]), diff(e->kids[0], kind, ax0, ax1)});
  }
  return constant(0.0);
}

// ---------------------------------------------------------------------------
// Structural analysis
// ---------------------------------------------------------------------------

namespace {

// Sum of |integer coefficients| when e is a linear combination of coordinates
// and constants; nullopt otherwise.
std::optional<double> linear_coord_weight(const ExprPtr& e) {
  switch (e->op) {
    case Node::Op::Const:
      return 0.0;
    case Node::Op::Var:
      return e->var == VarKind::Coord ? std::optional<double>(1.0) : std::nullopt;
    case Node::Op::Add: {
      double s = 0.0;
      for (const auto& k : e->kids) {
        auto w = linear_coord_weight(k);
        if (!w) return std::nullopt;
        s += *w;
      }
      return s;
    }
    case Node::Op::Neg:
      return linear_coord_weight(e->kids[0]);
    case Node::Op::Mul: {
      double scale = 1.0;
      double coord_w = 0.0;
      int coord_terms = 0;
      for (const auto& k : e->kids) {
        if (k->op == Node::Op::Const) {
          scale *= std::abs(k->value);
        } else {
          auto w = linear_coord_weight(k);
          if (!w) return std::nullopt;
          coord_w += *w;
          ++coord_terms;
        }
      }
      if (coord_terms > 1) return std::nullopt;
      return scale * coord_w;
    }
    default:
      return std::nullopt;
  }
}

bool uses_coords(const ExprPtr& e) {
  if (e->op == Node::Op::Var) return e->var == VarKind::Coord;
  for (const auto& k : e->kids)
    if (uses_coords(k)) return true;
  return false;
}

void merge_deg(int& into, int other, bool additive) {
  if (into < 0 || other < 0) {
    into = -1;
    return;
  }
  into = additive ? into + other : std::max(into, other);
}

}  // namespace

Analysis analyze(const ExprPtr& e) {
  Analysis a;
  switch (e->op) {
    case Node::Op::Const:
      return a;
    case Node::Op::Var:
      switch (e->var) {
        case VarKind::Coord:
          a.bare_coords = true;
          a.coord_bandwidth = -1;  // non-periodic unless wrapped in sin/cos
          break;
        case VarKind::U:
          a.uses_u = true;
          a.u_degree = 1;
          break;
        case VarKind::DU:
          a.uses_du = true;
          a.u_degree = 1;
          break;
        case VarKind::D2U:
          a.uses_d2u = true;
          a.u_degree = 1;
          break;
      }
      return a;
    case Node::Op::Add:
    case Node::Op::Mul: {
      const bool additive = e->op == Node::Op::Mul;
      for (const auto& k : e->kids) {
        const Analysis ka = analyze(k);
        a.uses_u |= ka.uses_u;
        a.uses_du |= ka.uses_du;
        a.uses_d2u |= ka.uses_d2u;
        a.bare_coords |= ka.bare_coords;
        merge_deg(a.u_degree, ka.u_degree, additive);
        if (a.coord_bandwidth >= 0 && ka.coord_bandwidth >= 0)
          a.coord_bandwidth = additive ? a.coord_bandwidth + ka.coord_bandwidth
                                       : std::max(a.coord_bandwidth, ka.coord_bandwidth);
        else
          a.coord_bandwidth = -1;
      }
      return a;
    }
    case Node::Op::Pow: {
      a = analyze(e->kids[0]);
      if (a.u_degree >= 0) a.u_degree *= e->exponent;
      if (a.coord_bandwidth >= 0) a.coord_bandwidth *= e->exponent;
      return a;
    }
    case Node::Op::Neg:
      return analyze(e->kids[0]);
    case Node::Op::Sin:
    case Node::Op::Cos:
    case Node::Op::Exp: {
      const Analysis ka = analyze(e->kids[0]);
      a.uses_u = ka.uses_u;
      a.uses_du = ka.uses_du;
      a.uses_d2u = ka.uses_d2u;
      a.u_degree = (ka.uses_u || ka.uses_du || ka.uses_d2u) ? -1 : 0;
      if (uses_coords(e->kids[0])) {
        if (e->op != Node::Op::Exp && !ka.uses_u && !ka.uses_du && !ka.uses_d2u) {
          const auto w = linear_coord_weight(e->kids[0]);
          a.coord_bandwidth = w ? static_cast<int>(std::ceil(*w)) : -1;
          a.bare_coords = w ? false : ka.bare_coords;
        } else {
          a.coord_bandwidth = -1;
          a.bare_coords = true;
        }
      }
      return a;
    }
  }
  return a;
}

std::string to_string(const ExprPtr& e) {
  std::ostringstream os;
  switch (e->op) {
    case Node::Op::Const:
      os << e->value;
      break;
    case Node::Op::Var:
      switch (e->var) {
        case VarKind::Coord: os << "c" << e->ax0; break;
        case VarKind::U: os << "u"; break;
        case VarKind::DU: os << "u_x" << (e->ax0 + 1); break;
        case VarKind::D2U: os << "u_x" << (e->ax0 + 1) << "x" << (e->ax1 + 1); break;
      }
      break;
    case Node::Op::Add: {
      os << "(";
      for (std::size_t i = 0; i < e->kids.size(); ++i)
        os << (i ? " + " : "") << to_string(e->kids[i]);
      os << ")";
      break;
    }
    case Node::Op::Mul: {
      os << "(";
      for (std::size_t i = 0; i < e->kids.size(); ++i)
        os << (i ? "*" : "") << to_string(e->kids[i]);
      os << ")";
      break;
    }
    case Node::Op::Pow:
      os << to_string(e->kids[0]) << "^" << e->exponent;
      break;
    case Node::Op::Neg:
      os << "-" << to_string(e->kids[0]);
      break;
    case Node::Op::Sin:
      os << "sin(" << to_string(e->kids[0]) << ")";
      break;
    case Node::Op::Cos:
      os << "cos(" << to_string(e->kids[0]) << ")";
      break;
    case Node::Op::Exp:
      os << "exp(" << to_string(e->kids[0]) << ")";
      break;
  }
  return os.str();
}

}  // namespace torspec::expr
