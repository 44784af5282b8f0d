#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "krflx/harness.hpp"
#include "krflx/krein.hpp"
#include "krflx/parallel.hpp"

using namespace krflx;
using doctest::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json kConv = json::parse(R"({
  "tag": "conv_jump", "name": "c", "alpha": 1.5,
  "string": {"type": "power", "alpha": 1.5},
  "jump": {"pieces": [{"exponent": -1.5, "lo": 0, "hi": 1}]},
  "gamma": [1, 10, 100], "lambda": [1, 2]
})");

std::vector<std::string> problems(const json& j) {
  try {
    parse_spec(j);
  } catch (const SpecError& e) {
    return e.problems;
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& s) {
  for (const auto& p : v)
    if (p.find(s) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("spec validation reports JSON pointers") {
  CHECK(problems(kConv).empty());

  json j = kConv;
  j["gamma"] = {10, 1};
  CHECK(mentions(problems(j), "/gamma"));

  j = kConv;
  j["bogus"] = 1;
  CHECK(mentions(problems(j), "/bogus"));

  j = kConv;
  j["tag"] = "nope";
  CHECK(mentions(problems(j), "/tag"));

  j = kConv;
  j["string"]["alpha"] = "x";
  CHECK(mentions(problems(j), "/string/alpha"));

  j = kConv;
  j["tag"] = "ilt_alpha";
  j["n"] = 10;
  CHECK(mentions(problems(j), "/n"));

  j = kConv;
  j["tag"] = "double_laplace";
  j["lambda"] = {1};
  j["mu"] = {1};
  j["n"] = 1000;
  CHECK(mentions(problems(j), "/mu"));
}

TEST_CASE("tags round-trip through their names") {
  for (Tag t : all_tags()) {
    CHECK(parse_tag(to_string(t)) == t);
    CHECK(std::string(describe(t)).size() > 10);
  }
  CHECK(all_tags().size() == 11);
}

TEST_CASE("report round-trips through JSON and rejects other schemas") {
  Report r;
  r.name = "x";
  r.tag = "tail";
  r.seed = 42;
  r.check_le("a", 0.1, 0.2);
  r.check_ge("b", 1.0, 2.0, "too small");
  r.add({"c", Status::info, kInf, 0.0, "<=", ""});
  Table& t = r.table("t", {"s", "v"});
  r.table("u", {"k"}).add({3});
  t.add({1, 2});
  r.notes.push_back("note");
  r.runtime_s = 12.0;
  CHECK(r.overall() == Status::fail);
  CHECK(exit_code(Status::fail) == 2);
  CHECK(exit_code(Status::inconclusive) == 3);
  CHECK(exit_code(Status::pass) == 0);

  const json j = r.to_json();
  CHECK(j.at("schema") == kReportSchema);
  CHECK_FALSE(j.contains("runtime_s"));
  const Report b = Report::from_json(j);
  CHECK(b.to_json() == j);
  CHECK(b.tables[0].rows[0][1] == 2.0);
  CHECK(std::isinf(b.criteria[2].value));

  json bad = j;
  bad["schema"] = "other/9";
  CHECK_THROWS(Report::from_json(bad));

  const fs::path dir = fs::temp_directory_path() / "krflx_report_test";
  fs::remove_all(dir);
  write_report(r, dir);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "tables" / "t.csv"));
  CHECK(fs::exists(dir / "timing.json"));
  std::ifstream in(dir / "tables" / "t.csv");
  std::string head;
  std::getline(in, head);
  CHECK(head == "s,v");
  fs::remove_all(dir);
}

TEST_CASE("overall status ordering") {
  Report r;
  r.add({"i", Status::info});
  CHECK(r.overall() == Status::pass);
  r.add({"q", Status::inconclusive});
  CHECK(r.overall() == Status::inconclusive);
  r.add({"f", Status::fail});
  CHECK(r.overall() == Status::fail);
}

TEST_CASE("parallel_for fills each slot once, whatever the worker count") {
  for (int w : {1, 2, 4}) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), w, [&](size_t i) { hits[i] += static_cast<int>(i); });
    for (size_t i = 0; i < hits.size(); ++i) CHECK(hits[i] == static_cast<int>(i));
  }
  CHECK_THROWS_WITH(parallel_for(10, 2,
                                 [](size_t i) {
                                   if (i >= 3) throw std::runtime_error(std::to_string(i));
                                 }),
                    "3");
}

TEST_CASE("conv: linear in j and exact at γ = 1") {
  const Report a = run_experiment(parse_spec(kConv));
  json j2 = kConv;
  j2["jump"]["pieces"][0]["scale"] = 2.0;
  const Report b = run_experiment(parse_spec(j2));
  const auto& ta = a.tables.at(0).rows;
  const auto& tb = b.tables.at(0).rows;
  REQUIRE(ta.size() == 6);
  for (size_t i = 0; i < ta.size(); ++i) {
    CHECK(tb[i][2] == Approx(2.0 * ta[i][2]).epsilon(1e-10));
    CHECK(tb[i][3] == Approx(2.0 * ta[i][3]).epsilon(1e-12));
  }
  bool found = false;
  for (const auto& c : a.criteria)
    if (c.name == "identity_at_gamma_1") {
      found = true;
      CHECK(c.status == Status::pass);
    }
  CHECK(found);
  // the limit is κλH(α, λ) with κ = 2
  CHECK(ta[0][3] == Approx(2.0 * H_closed(1.5, 1.0)));
}

TEST_CASE("K², κ⁰ and b_γ against closed forms") {
  // m^(1.5): m(x,∞) = 2x^{−1/3}, K(γ)² = ∫_0^γ 4x^{−2/3} dx = 12γ^{1/3}
  const auto m = make_power_string(1.5);
  for (double g : {1.0, 8.0, 1000.0}) CHECK(K2(*m, g) == Approx(12.0 * std::cbrt(g)).epsilon(1e-8));
  // j = δ₁: κ⁰ = ∫_0^1 (1 − z) M(z) dm(z), M = 3z^{2/3}, dm = (2/3)z^{−4/3}dz
  //       = ∫_0^1 2(1 − z) z^{−2/3} dz = 2(3 − 3/4)
  CHECK(kappa0(*m, JumpMeasure::atom(1.0, 1.0)) == Approx(4.5).epsilon(1e-7));
  // log string, j = x^{−3/2} on (0,1]: ∫_0^1 (log γ + 1 − log x) x^{−1/2} dx
  const auto lg = make_power_string(1.0);
  const auto j = JumpMeasure::power(-1.5, 0.0, 1.0);
  for (double g : {1.0, 10.0, 1e4}) CHECK(b_gamma(*lg, j, g) == Approx(2.0 * std::log(g) + 6.0).epsilon(1e-8));
}

TEST_CASE("κ̃ for the designed string is positive and consistent") {
  const auto m = make_table_string({1, 2, 4}, {-2, -1, -0.5}, -1.0 / 3.0, -1.0);
  const auto j = JumpMeasure::power(-1.5, 0.0, 1.0);
  const double k2 = K2(*m, kInf), k0 = kappa0(*m, j);
  // m = −2/x on [1, ∞); the left germ continues the density 2 at x = 1 as
  // d(4 − 6x^{−1/3}), so K² = ∫_0^1 (6x^{−1/3} − 4)² dx + ∫_1^∞ 4/x² dx = 52 + 4
  CHECK(k2 == Approx(56.0).epsilon(1e-8));
  CHECK(kappa_tilde(*m, j) == Approx(2.0 * 2.0 - 2.0 * k0 / k2).epsilon(1e-12));
  CHECK(kappa_tilde(*m, j) > 0.0);
}

TEST_CASE("Tauberian self-test: Pareto and log measures pass, a point mass fails") {
  std::vector<double> xs, ls;
  for (int i = 0; i < 8; ++i) {
    xs.push_back(std::pow(10.0, 3.0 + 0.5 * i));
    // for β = 1.5 the second derivative carries an O(λ^{1/2}) relative correction
    ls.push_back(std::pow(10.0, -6.0 - 0.5 * i));
  }
  for (double b : {0.5, 1.5}) CHECK(tauberian_check(pareto_measure(b), b, xs, ls).overall() == Status::pass);
  CHECK(tauberian_log_check(log_measure(), 2.0, xs, ls).overall() == Status::pass);
  CHECK(tauberian_check(point_mass(1.0), 0.5, xs, ls).overall() == Status::fail);
  // μ[x,∞) = x^{−1/2} on [1,∞)
  const auto p = pareto_measure(0.5);
  CHECK(p.tail(4.0) == Approx(0.5));
  CHECK(p.tail(0.5) == Approx(1.0));
}
