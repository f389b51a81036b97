#pragma once

#include <complex>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace torspec::expr {

using Complex = std::complex<double>;

/// Variables an expression may reference: torus coordinates (frequency axes
/// first, then spatial axes), the unknown u, and its spatial derivatives.
enum class VarKind { Coord, U, DU, D2U };

struct Node;
using ExprPtr = std::shared_ptr<const Node>;

struct Node {
  enum class Op { Const, Var, Add, Mul, Pow, Neg, Sin, Cos, Exp };
  Op op = Op::Const;
  double value = 0.0;  // Const
  VarKind var = VarKind::U;
  int ax0 = -1, ax1 = -1;  // Var axes (absolute for Coord, spatial for DU/D2U)
  int exponent = 0;        // Pow
  std::vector<ExprPtr> kids;
};

ExprPtr constant(double v);
ExprPtr variable(VarKind kind, int ax0 = -1, int ax1 = -1);
ExprPtr add(std::vector<ExprPtr> kids);
ExprPtr mul(std::vector<ExprPtr> kids);
ExprPtr pow(ExprPtr base, int exponent);
ExprPtr neg(ExprPtr e);
ExprPtr sin(ExprPtr e);
ExprPtr cos(ExprPtr e);
ExprPtr exp(ExprPtr e);

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Grammar: + - * /const ^int, sin/cos/exp, parentheses, pi. Variable names:
/// u; spatial coordinates x1..xd; frequency coordinates th1../theta1..;
/// derivatives u_x1, ux1, u_x1x2, ...
ExprPtr parse(std::string_view src, int freq_axes, int space_axes);

struct Point {
  std::span<const double> coords;  // all axes, angles
  Complex u;
  std::span<const Complex> du;   // spatial gradient
  std::span<const Complex> d2u;  // spatial Hessian, row-major d*d
};

Complex eval(const ExprPtr& e, const Point& pt);

/// Symbolic partial derivative with respect to one variable.
ExprPtr diff(const ExprPtr& e, VarKind kind, int ax0 = -1, int ax1 = -1);

struct Analysis {
  bool uses_u = false;
  bool uses_du = false;
  bool uses_d2u = false;
  bool bare_coords = false;  // coordinates outside sin/cos: not torus-periodic
  int u_degree = 0;          // polynomial degree in (u, Du, D2u); -1 transcendental
  int coord_bandwidth = 0;   // Fourier bandwidth of coordinate deps; -1 unbounded
};

Analysis analyze(const ExprPtr& e);

std::string to_string(const ExprPtr& e);

}  // namespace torspec::expr
