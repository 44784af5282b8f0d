#include "krflx/spec.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace krflx {

using nlohmann::json;

namespace {

struct TagInfo {
  Tag tag;
  const char* name;
  const char* about;
};

const TagInfo kTags[] = {
    {Tag::conv_jump, "conv_jump",
     "deterministic: centred exponent of the scaled pair (m_γ, j_γ) vs κλH of the stable limit along the γ ladder"},
    {Tag::conv_bm, "conv_bm",
     "deterministic: as conv_jump for a string with square-integrable tail, limit −κ̃λ²/2 (Brownian)"},
    {Tag::ilt_alpha, "ilt_alpha",
     "Monte Carlo: (η(γt) − bγt)/(γ^{1/α}K) vs the spectrally positive α-stable law, α ∈ (1,2)"},
    {Tag::ilt_alpha2, "ilt_alpha2",
     "Monte Carlo: (η(γt) − bγt)/(γ^{1/2}K(γ)) vs N(0, κ̃t), with a normality check"},
    {Tag::ilt_alpha1, "ilt_alpha1",
     "Monte Carlo: (η(γt) − b_γγt)/(γK) vs the 1-stable law T(m^(1); κt), centring b_γ at level m(γ)"},
    {Tag::tail, "tail",
     "Monte Carlo: log-log slope and constant of n[T₀ > s] over one decade of s"},
    {Tag::occupation_alpha, "occupation_alpha",
     "Monte Carlo: g(γ)(A(γt)/γ − pt) of the bilateral process vs a difference of stable laws, α ∈ (1,2)"},
    {Tag::occupation_alpha2, "occupation_alpha2",
     "Monte Carlo: occupation fluctuations in the Gaussian regime"},
    {Tag::occupation_alpha1, "occupation_alpha1",
     "Monte Carlo: occupation fluctuations for α = 1; the m(∞) = ∞ branch is experimental"},
    {Tag::arcsine, "arcsine",
     "Monte Carlo: A(t)/t vs the generalized arcsine law μ_{α,p}, α ∈ (0,1)"},
    {Tag::double_laplace, "double_laplace",
     "Monte Carlo: ∫e^{−μt}E e^{−λA(t)}dt vs the closed form in χ₊, χ₋, plus the Williams identity"},
};

const std::set<std::string> kTopKeys = {
    "tag", "name", "seed", "n", "gamma", "lambda", "mu", "t", "pairs", "alpha", "alpha_ref",
    "negative_controls", "eps", "chunk", "em_step", "local_time", "s_range", "K", "string", "jump", "plus",
    "minus", "tolerances"};

class Reader {
 public:
  Reader(const json& j, std::string ptr, std::vector<std::string>& errs)
      : j_(j), ptr_(std::move(ptr)), errs_(errs) {}

  void fail(const std::string& key, const std::string& what) const {
    errs_.push_back(ptr_ + "/" + key + ": " + what);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double def, bool required = false) const {
    if (!j_.contains(key)) {
      if (required) fail(key, "required number missing");
      return def;
    }
    const json& v = j_.at(key);
    if (!v.is_number()) {
      fail(key, "expected a number");
      return def;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  std::optional<double> optional_number(const std::string& key) const {
    if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
    return number(key, 0.0);
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) const {
    if (!j_.contains(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array()) {
      fail(key, "expected an array of numbers");
      return def;
    }
    std::vector<double> out;
    for (size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(key + "/" + std::to_string(i), "expected a number");
        continue;
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::string text(const std::string& key, std::string def, bool required = false) const {
    if (!j_.contains(key)) {
      if (required) fail(key, "required string missing");
      return def;
    }
    if (!j_.at(key).is_string()) {
      fail(key, "expected a string");
      return def;
    }
    return j_.at(key).get<std::string>();
  }

  void only(const std::set<std::string>& allowed) const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!allowed.count(it.key())) fail(it.key(), "unknown key");
  }

 private:
  const json& j_;
  std::string ptr_;
  std::vector<std::string>& errs_;
};

std::string join_errors(const std::vector<std::string>& p) {
  std::ostringstream os;
  os << "invalid experiment spec:";
  for (const auto& s : p) os << "\n  " << s;
  return os.str();
}

bool strictly_increasing(const std::vector<double>& v) {
  for (size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

bool all_positive(const std::vector<double>& v) {
  for (double x : v)
    if (!(x > 0.0)) return false;
  return true;
}

}  // namespace

const char* to_string(Tag t) {
  for (const auto& i : kTags)
    if (i.tag == t) return i.name;
  return "?";
}

std::optional<Tag> parse_tag(const std::string& s) {
  for (const auto& i : kTags)
    if (s == i.name) return i.tag;
  return std::nullopt;
}

const std::vector<Tag>& all_tags() {
  static const std::vector<Tag> v = [] {
    std::vector<Tag> out;
    for (const auto& i : kTags) out.push_back(i.tag);
    return out;
  }();
  return v;
}

const char* describe(Tag t) {
  for (const auto& i : kTags)
    if (i.tag == t) return i.about;
  return "";
}

SpecError::SpecError(std::vector<std::string> p) : std::runtime_error(join_errors(p)), problems(std::move(p)) {}

String parse_string(const json& j, const std::string& ptr, std::vector<std::string>& errs) {
  if (!j.is_object()) {
    errs.push_back(ptr + ": expected an object");
    return nullptr;
  }
  Reader r(j, ptr, errs);
  r.only({"type", "alpha", "slope", "intercept", "x", "m", "left_exponent", "right_exponent", "rescale",
          "shift"});
  const std::string type = r.text("type", "", true);
  String m;
  try {
    if (type == "power") {
      const double a = r.number("alpha", 1.5, true);
      if (!(a > 0.0 && a < 2.0))
        r.fail("alpha", "must lie in (0,2)");
      else
        m = make_power_string(a);
    } else if (type == "linear") {
      const double s = r.number("slope", 1.0);
      if (!(s > 0.0))
        r.fail("slope", "must be positive");
      else
        m = make_linear_string(s, r.number("intercept", 0.0));
    } else if (type == "table") {
      const size_t before = errs.size();
      const auto x = r.numbers("x", {});
      const auto v = r.numbers("m", {});
      if (x.size() < 3) r.fail("x", "a table needs at least 3 nodes");
      if (x.size() != v.size()) r.fail("m", "length differs from x");
      if (!strictly_increasing(x) || !all_positive(x)) r.fail("x", "nodes must be positive and increasing");
      for (size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) r.fail("m", "values must be strictly increasing");
      if (errs.size() == before)
        m = make_table_string(x, v, r.optional_number("left_exponent"), r.optional_number("right_exponent"));
    } else if (!type.empty()) {
      r.fail("type", "unknown string type '" + type + "' (power, linear, table)");
    }
  } catch (const std::exception& e) {
    errs.push_back(ptr + ": " + e.what());
    return nullptr;
  }
  if (!m) return nullptr;
  if (j.contains("rescale")) {
    const json& s = j.at("rescale");
    Reader rs(s, ptr + "/rescale", errs);
    if (!s.is_object()) {
      r.fail("rescale", "expected {\"a\":…, \"b\":…}");
    } else {
      rs.only({"a", "b"});
      const double a = rs.number("a", 1.0), b = rs.number("b", 1.0);
      if (!(a > 0.0)) rs.fail("a", "must be positive");
      if (!(b > 0.0)) rs.fail("b", "must be positive");
      if (a > 0.0 && b > 0.0) m = rescale(m, a, b);
    }
  }
  if (j.contains("shift")) m = shift(m, r.number("shift", 0.0));
  return m;
}

JumpMeasure parse_jump(const json& j, const std::string& ptr, std::vector<std::string>& errs) {
  JumpMeasure out;
  if (!j.is_object()) {
    errs.push_back(ptr + ": expected an object");
    return out;
  }
  Reader r(j, ptr, errs);
  r.only({"pieces", "atoms"});
  if (j.contains("pieces")) {
    const json& ps = j.at("pieces");
    if (!ps.is_array()) r.fail("pieces", "expected an array");
    for (size_t i = 0; ps.is_array() && i < ps.size(); ++i) {
      const std::string p = ptr + "/pieces/" + std::to_string(i);
      if (!ps[i].is_object()) {
        errs.push_back(p + ": expected an object");
        continue;
      }
      Reader rp(ps[i], p, errs);
      rp.only({"exponent", "lo", "hi", "scale"});
      const double q = rp.number("exponent", 0.0, true);
      const double lo = rp.number("lo", 0.0);
      const double hi = ps[i].contains("hi") && ps[i].at("hi").is_null() ? kInf : rp.number("hi", kInf);
      const double c = rp.number("scale", 1.0);
      if (!(lo >= 0.0 && hi > lo)) {
        rp.fail("hi", "need 0 ≤ lo < hi");
        continue;
      }
      if (!(c > 0.0)) {
        rp.fail("scale", "must be positive");
        continue;
      }
      out = out + JumpMeasure::power(q, lo, hi, c);
    }
  }
  if (j.contains("atoms")) {
    const json& as = j.at("atoms");
    if (!as.is_array()) r.fail("atoms", "expected an array");
    for (size_t i = 0; as.is_array() && i < as.size(); ++i) {
      const std::string p = ptr + "/atoms/" + std::to_string(i);
      if (!as[i].is_object()) {
        errs.push_back(p + ": expected an object");
        continue;
      }
      Reader ra(as[i], p, errs);
      ra.only({"x", "w"});
      const double x = ra.number("x", 1.0, true), w = ra.number("w", 1.0, true);
      if (!(x > 0.0 && w > 0.0)) {
        ra.fail("x", "atom needs x > 0 and w > 0");
        continue;
      }
      out = out + JumpMeasure::atom(x, w);
    }
  }
  if (out.empty()) errs.push_back(ptr + ": jumping-in measure is empty");
  return out;
}

namespace {

void parse_side(const json& j, const std::string& ptr, SideSpec& side, std::vector<std::string>& errs) {
  if (!j.is_object()) {
    errs.push_back(ptr + ": expected an object");
    return;
  }
  Reader r(j, ptr, errs);
  r.only({"string", "jump", "w", "c"});
  if (!j.contains("string"))
    r.fail("string", "required");
  else {
    side.m = parse_string(j.at("string"), ptr + "/string", errs);
    side.m_json = j.at("string");
  }
  if (!j.contains("jump"))
    r.fail("jump", "required");
  else {
    side.j = parse_jump(j.at("jump"), ptr + "/jump", errs);
    side.j_json = j.at("jump");
  }
  side.w = r.number("w", 1.0);
  side.c = r.number("c", 1.0);
  if (!(side.w > 0.0)) r.fail("w", "must be positive");
  if (!(side.c > 0.0)) r.fail("c", "must be positive");
}

bool is_bilateral(Tag t) {
  return t == Tag::occupation_alpha || t == Tag::occupation_alpha2 || t == Tag::occupation_alpha1 ||
         t == Tag::arcsine || t == Tag::double_laplace;
}

bool is_monte_carlo(Tag t) { return t != Tag::conv_jump && t != Tag::conv_bm; }

}  // namespace

ExperimentSpec parse_spec(const json& j) {
  std::vector<std::string> errs;
  if (!j.is_object()) throw SpecError({": expected a JSON object"});
  ExperimentSpec s;
  s.source = j;
  Reader r(j, "", errs);
  r.only(kTopKeys);
  const std::string tag = r.text("tag", "", true);
  if (auto t = parse_tag(tag))
    s.tag = *t;
  else if (!tag.empty())
    r.fail("tag", "unknown experiment tag '" + tag + "'");
  s.name = r.text("name", tag);
  if (j.contains("seed")) {
    if (j.at("seed").is_number_unsigned())
      s.seed = j.at("seed").get<std::uint64_t>();
    else
      r.fail("seed", "expected a non-negative integer");
  }
  if (j.contains("n")) {
    if (j.at("n").is_number_integer())
      s.n = j.at("n").get<long>();
    else
      r.fail("n", "expected an integer");
  }
  s.gamma = r.numbers("gamma", s.gamma);
  s.lambda = r.numbers("lambda", s.lambda);
  s.mu = r.numbers("mu", s.mu);
  s.t = r.numbers("t", s.t);
  if (j.contains("pairs")) {
    const json& p = j.at("pairs");
    bool ok = p.is_array();
    for (size_t i = 0; ok && i < p.size(); ++i) {
      if (!(p[i].is_array() && p[i].size() == 2 && p[i][0].is_number() && p[i][1].is_number())) {
        errs.push_back("/pairs/" + std::to_string(i) + ": expected [t1, t2]");
        continue;
      }
      const double a = p[i][0].get<double>(), b = p[i][1].get<double>();
      if (!(a > 0.0 && b > a)) errs.push_back("/pairs/" + std::to_string(i) + ": need 0 < t1 < t2");
      s.pairs.emplace_back(a, b);
    }
    if (!ok) r.fail("pairs", "expected an array of [t1, t2]");
  }
  s.alpha = r.number("alpha", s.tag == Tag::conv_bm || s.tag == Tag::ilt_alpha2 ||
                                      s.tag == Tag::occupation_alpha2
                                  ? 2.0
                              : s.tag == Tag::ilt_alpha1 || s.tag == Tag::occupation_alpha1 ? 1.0
                              : s.tag == Tag::arcsine                                       ? 0.5
                                                                                            : 1.5);
  s.alpha_ref = r.optional_number("alpha_ref");
  s.negative_controls = r.numbers("negative_controls", {});
  s.eps = r.number("eps", s.eps);
  s.chunk = r.number("chunk", s.chunk);
  s.em_step = r.number("em_step", s.em_step);
  s.local_time = r.number("local_time", s.local_time);
  {
    const auto sr = r.numbers("s_range", {s.s_range.first, s.s_range.second});
    if (sr.size() != 2 || !(sr[0] > 0.0 && sr[1] > sr[0]))
      r.fail("s_range", "expected [s_lo, s_hi] with 0 < s_lo < s_hi");
    else
      s.s_range = {sr[0], sr[1]};
  }
  s.K = r.number("K", 1.0);

  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    if (!t.is_object())
      r.fail("tolerances", "expected an object");
    else {
      Reader rt(t, "/tolerances", errs);
      rt.only({"rel", "ks", "drift_se", "slope", "constant", "min_exceed", "p_rel", "dlt_rel", "level"});
      s.tol.rel = rt.number("rel", s.tol.rel);
      s.tol.ks = rt.number("ks", s.tol.ks);
      s.tol.drift_se = rt.number("drift_se", s.tol.drift_se);
      s.tol.slope = rt.number("slope", s.tol.slope);
      s.tol.constant = rt.number("constant", s.tol.constant);
      s.tol.min_exceed = static_cast<long>(rt.number("min_exceed", static_cast<double>(s.tol.min_exceed)));
      s.tol.p_rel = rt.number("p_rel", s.tol.p_rel);
      s.tol.dlt_rel = rt.number("dlt_rel", s.tol.dlt_rel);
      s.tol.level = rt.number("level", s.tol.level);
      if (!(s.tol.level > 0.0 && s.tol.level < 1.0)) rt.fail("level", "must lie in (0,1)");
    }
  }

  // sides
  const bool has_single = j.contains("string") || j.contains("jump");
  const bool has_pair = j.contains("plus") || j.contains("minus");
  s.bilateral = is_bilateral(s.tag);
  if (has_single && has_pair) r.fail("plus", "give either string/jump or plus/minus, not both");
  if (has_pair) {
    if (!s.bilateral) r.fail("plus", "plus/minus sides only apply to bilateral experiments");
    if (!j.contains("plus")) r.fail("plus", "required with minus");
    if (!j.contains("minus")) r.fail("minus", "required with plus");
    if (j.contains("plus")) parse_side(j.at("plus"), "/plus", s.plus, errs);
    if (j.contains("minus")) parse_side(j.at("minus"), "/minus", s.minus, errs);
  } else {
    if (!j.contains("string")) r.fail("string", "required");
    if (!j.contains("jump")) r.fail("jump", "required");
    if (j.contains("string")) {
      s.plus.m = parse_string(j.at("string"), "/string", errs);
      s.plus.m_json = j.at("string");
    }
    if (j.contains("jump")) {
      s.plus.j = parse_jump(j.at("jump"), "/jump", errs);
      s.plus.j_json = j.at("jump");
    }
    s.minus = s.plus;
  }

  // invariants
  if (s.gamma.empty()) r.fail("gamma", "ladder must not be empty");
  if (!strictly_increasing(s.gamma)) r.fail("gamma", "ladder must be strictly increasing");
  if (!all_positive(s.gamma)) r.fail("gamma", "entries must be positive");
  if (!all_positive(s.lambda)) r.fail("lambda", "entries must be positive");
  if (!all_positive(s.t)) r.fail("t", "entries must be positive");
  if (!all_positive(s.mu)) r.fail("mu", "entries must be positive");
  if (is_monte_carlo(s.tag) && s.tag != Tag::tail && s.n < 100) r.fail("n", "need n ≥ 100");
  if (!(s.eps > 0.0 && s.eps < 1.0)) r.fail("eps", "must lie in (0,1)");
  if (!(s.chunk > 0.0)) r.fail("chunk", "must be positive");
  if (!(s.em_step > 0.0 && s.em_step <= 0.1)) r.fail("em_step", "must lie in (0, 0.1]");
  if (!(s.local_time > 0.0)) r.fail("local_time", "must be positive");
  if (!(s.K > 0.0)) r.fail("K", "must be positive");
  switch (s.tag) {
    case Tag::conv_jump:
    case Tag::ilt_alpha:
    case Tag::occupation_alpha:
    case Tag::tail:
      if (!(s.alpha > 1.0 && s.alpha <= 2.0) && s.tag == Tag::tail) r.fail("alpha", "tail needs α ∈ (1,2]");
      if (s.tag != Tag::tail && s.tag != Tag::conv_jump && !(s.alpha > 1.0 && s.alpha < 2.0))
        r.fail("alpha", "needs α ∈ (1,2)");
      if (s.tag == Tag::conv_jump && !(s.alpha >= 1.0 && s.alpha < 2.0)) r.fail("alpha", "needs α ∈ [1,2)");
      break;
    case Tag::conv_bm:
    case Tag::ilt_alpha2:
    case Tag::occupation_alpha2:
      if (s.alpha != 2.0) r.fail("alpha", "this experiment is the α = 2 case");
      break;
    case Tag::ilt_alpha1:
    case Tag::occupation_alpha1:
      if (s.alpha != 1.0) r.fail("alpha", "this experiment is the α = 1 case");
      break;
    case Tag::arcsine:
      if (!(s.alpha > 0.0 && s.alpha < 1.0)) r.fail("alpha", "arcsine needs α ∈ (0,1)");
      break;
    case Tag::double_laplace:
      if (s.lambda.size() != s.mu.size() || s.lambda.size() < 3)
        r.fail("mu", "need ≥ 3 (λ, μ) points with lambda and mu of equal length");
      break;
  }
  for (double a : s.negative_controls)
    if (!(a > 0.0 && a <= 2.0)) r.fail("negative_controls", "entries must lie in (0,2]");
  if (!errs.empty()) throw SpecError(errs);
  return s;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j = json::parse(in);  // json::parse_error on malformed input
  return parse_spec(j);
}

}  // namespace krflx
