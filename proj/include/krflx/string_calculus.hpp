#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace krflx {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Near the origin every supported string has a pure power density:
// dm = C x^p dx on (0, x_end], so m = D + C x^{p+1}/(p+1), or D + C log x when p = -1.
struct Germ {
  double x_end = kInf;
  double C = 1.0;
  double p = 0.0;
  double D = 0.0;

  double beta() const { return p + 2.0; }
  double m(double x) const;
  double G(double x) const;
};

class StringMeasure;
using String = std::shared_ptr<const StringMeasure>;

// A non-decreasing right-continuous m on (0, ∞), natural scale. Instances are
// immutable and shared.
class StringMeasure : public std::enable_shared_from_this<StringMeasure> {
 public:
  virtual ~StringMeasure() = default;

  virtual double m(double x) const = 0;
  virtual double density(double x) const = 0;
  virtual double m_inf() const = 0;
  // m(0+)
  virtual double m0() const = 0;
  virtual Germ germ() const = 0;
  // ∫_0^x m(y) dy
  virtual double G(double x) const = 0;
  // ∫_0^x y^k dm(y), k ≥ 1
  virtual double moment(double x, int k) const = 0;
  // m(∞) − m(x)
  virtual double tail(double x) const;
  // inf{x > 0 : m(x) > y}
  virtual double inverse(double y) const;
  // points where the density is not smooth
  virtual std::vector<double> breakpoints() const { return {}; }
  virtual std::string describe() const = 0;

  std::optional<double> alpha_hint() const { return alpha_hint_; }
  bool closed_form() const { return closed_form_; }

  double G1(double x) const { return G(x) - m(1.0) * x; }
  // (m•s)(x) = ∫_0^x y dm(y)
  double ms(double x) const { return moment(x, 1); }

 protected:
  std::optional<double> alpha_hint_;
  bool closed_form_ = false;
};

// m(x) = D + k x^e (e ≠ 0), or D + k log x (e = 0)
class PowerString final : public StringMeasure {
 public:
  PowerString(double k, double e, double D = 0.0, std::optional<double> alpha = std::nullopt);

  double m(double x) const override;
  double density(double x) const override;
  double m_inf() const override;
  double m0() const override;
  Germ germ() const override;
  double G(double x) const override;
  double moment(double x, int k) const override;
  double tail(double x) const override;
  double inverse(double y) const override;
  std::string describe() const override;

  double k() const { return k_; }
  double e() const { return e_; }
  double D() const { return D_; }

 private:
  double k_, e_, D_;
};

// Geometric-grid table of m with power-law density on every cell. Cell
// exponents are read off neighbouring cell masses, so tables of exact power
// laws are reproduced exactly. Outside the grid the density is continued as
// a power law with the declared exponent of m (e_left, e_right; 0 means log).
class TableString final : public StringMeasure {
 public:
  TableString(std::vector<double> x, std::vector<double> m, std::optional<double> left_exponent,
              std::optional<double> right_exponent, std::optional<double> alpha = std::nullopt);

  double m(double x) const override;
  double density(double x) const override;
  double m_inf() const override { return m_inf_; }
  double m0() const override;
  Germ germ() const override { return left_; }
  double G(double x) const override;
  double moment(double x, int k) const override;
  double tail(double x) const override;
  std::vector<double> breakpoints() const override { return x_; }
  std::string describe() const override;

 private:
  struct Cell {
    double c, p;  // density c x^p
  };
  int cell_of(double x) const;

  std::vector<double> x_, m_;
  std::vector<Cell> cells_;
  Germ left_;
  Cell right_{};
  double m_inf_ = kInf;
  std::vector<double> G_nodes_;
};

// a · m(b x) + shift over another string.
class ScaledString final : public StringMeasure {
 public:
  ScaledString(String inner, double a, double b, double shift);

  double m(double x) const override;
  double density(double x) const override;
  double m_inf() const override;
  double m0() const override;
  Germ germ() const override;
  double G(double x) const override;
  double moment(double x, int k) const override;
  double tail(double x) const override;
  double inverse(double y) const override;
  std::vector<double> breakpoints() const override;
  std::string describe() const override;

  const String& inner() const { return inner_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double shift() const { return shift_; }

 private:
  String inner_;
  double a_, b_, shift_;
};

// ── constructors and accessors ─────────────────────────────────────────────
double eval_m(const StringMeasure& m, double x);
double tail(const StringMeasure& m, double x);
double G(const StringMeasure& m, double x);
double G1(const StringMeasure& m, double x);

String make_power_string(double alpha);
String make_linear_string(double slope = 1.0, double intercept = 0.0);
String make_table_string(std::vector<double> x, std::vector<double> m,
                         std::optional<double> left_exponent = std::nullopt,
                         std::optional<double> right_exponent = std::nullopt);
String rescale(const String& m, double a, double b);
String shift(const String& m, double c);
// shifts a string with finite m(∞) so that m(∞) = 0
String normalize_tail(const String& m);

// U•f(x) = ∫_0^x f dU for U given by its density u on (0, ∞)
double bullet(const std::function<double(double)>& dU, const std::function<double(double)>& f,
              double x);

// m*(y) = inf{x > 0 : m(x) > y} on the whole line
class DualString {
 public:
  explicit DualString(String m) : m_(std::move(m)) {}
  double operator()(double y) const;
  // ℓ = inf{y : m*(y) = ∞}
  double ell() const { return m_->m_inf(); }
  // inf{y : m*(y) > x}; equals m(x) for continuous strictly increasing m
  double dual(double x) const;
  const String& primal() const { return m_; }

 private:
  String m_;
};

DualString dual(const String& m);

// ── classification and checks ──────────────────────────────────────────────
enum class Boundary { regular, exit, entrance, natural };
const char* to_string(Boundary b);

struct BoundaryClass {
  Boundary kind;
  double I;  // ∫_0^1 dy ∫_0^y dm
  double J;  // ∫_0^1 dm(y) ∫_0^y dz
};

BoundaryClass classify_boundary(const StringMeasure& m);

enum class Verdict { yes, no, inconclusive };
const char* to_string(Verdict v);

struct Certificate {
  Verdict verdict = Verdict::inconclusive;
  std::string detail;
  double value = 0.0;  // the integral that decided, when finite
};

Certificate check_M1(const StringMeasure& m);

// ── jumping-in measures ────────────────────────────────────────────────────
class JumpMeasure {
 public:
  struct PowerPiece {
    double c, q, lo, hi;  // density c x^q on (lo, hi]
  };
  struct Atom {
    double x, w;
  };

  JumpMeasure() = default;
  static JumpMeasure power(double exponent, double lo, double hi, double scale = 1.0);
  static JumpMeasure atom(double x, double w);

  JumpMeasure operator+(const JumpMeasure& o) const;
  JumpMeasure scaled(double c) const;
  // j_γ(dx) = γ j(d(γ x))
  JumpMeasure pushforward(double gamma) const;
  JumpMeasure restricted(double a, double b) const;

  // j((a, b])
  double mass(double a, double b) const;
  // ∫_(a,b] x^k j(dx)
  double moment(double k, double a, double b) const;
  double kappa() const { return moment(1.0, 0.0, kInf); }
  // ∫_(a,b] f dj; singular power pieces at 0 are handled by geometric panels
  double integrate(const std::function<double(double)>& f, double a = 0.0, double b = kInf,
                   double rel_tol = 1e-12) const;
  // smallest power exponent q of a piece touching 0, +∞ if none
  double singular_exponent() const;
  double support_max() const;
  bool empty() const { return pieces_.empty() && atoms_.empty(); }

  const std::vector<PowerPiece>& pieces() const { return pieces_; }
  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  std::vector<PowerPiece> pieces_;
  std::vector<Atom> atoms_;
};

Certificate check_condition_C(const StringMeasure& m, const JumpMeasure& j);

// ∫_0^b c x^q dx pieces used across modules
double power_integral(double c, double q, double a, double b);

}  // namespace krflx
