#include "orbitbounce/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "orbitbounce/version.hpp"

namespace orbitbounce {

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ProblemFileError("problem file: missing numeric field '" + key + "'");
  return j[key].get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number())
    throw ProblemFileError("problem file: field '" + key + "' must be a number");
  return j[key].get<double>();
}

/// Trig-polynomial mini-language for the h± certificates: a sum of terms
///   {"kind":"const","c":..}
///   {"kind":"sin"|"cos","amp":..,"num":..,"den":..,"phase":..}
/// with frequency 2*pi*num/(den*T).
std::function<double(double)> parse_trig_poly(const json& terms, double T,
                                              const std::string& what) {
  if (!terms.is_array())
    throw ProblemFileError("problem file: " + what + " must be an array of terms");
  struct Term {
    int kind;  // 0 const, 1 sin, 2 cos
    double a, w, phase;
  };
  std::vector<Term> parsed;
  for (const auto& t : terms) {
    if (!t.is_object() || !t.contains("kind"))
      throw ProblemFileError("problem file: bad term in " + what);
    std::string kind = t["kind"].get<std::string>();
    if (kind == "const") {
      parsed.push_back({0, require_number(t, "c"), 0.0, 0.0});
    } else if (kind == "sin" || kind == "cos") {
      double num = number_or(t, "num", 1.0);
      double den = number_or(t, "den", 1.0);
      if (den == 0.0) throw ProblemFileError("problem file: zero denominator in " + what);
      parsed.push_back({kind == "sin" ? 1 : 2, require_number(t, "amp"),
                        2.0 * M_PI * num / (den * T), number_or(t, "phase", 0.0)});
    } else {
      throw ProblemFileError("problem file: unknown term kind '" + kind + "' in " + what);
    }
  }
  return [parsed](double t) {
    double s = 0.0;
    for (const auto& p : parsed) {
      if (p.kind == 0)
        s += p.a;
      else if (p.kind == 1)
        s += p.a * std::sin(p.w * t + p.phase);
      else
        s += p.a * std::cos(p.w * t + p.phase);
    }
    return s;
  };
}

}  // namespace

ProblemFile parse_problem(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ProblemFileError(std::string("problem file: JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw ProblemFileError("problem file: top level must be an object");
  if (!j.contains("schema") || j["schema"] != kSchema)
    throw ProblemFileError(std::string("problem file: schema must be \"") + kSchema + "\"");

  ProblemFile pf;
  auto& p = pf.problem;
  p.T = require_number(j, "T");
  p.R0 = require_number(j, "R0");
  p.L0 = number_or(j, "L0", 10.0);
  if (!(p.T > 0.0) || !(p.R0 > 0.0) || !(p.L0 > 0.0))
    throw ProblemFileError("problem file: T, R0 and L0 must be > 0");

  if (!j.contains("force") || !j["force"].is_object())
    throw ProblemFileError("problem file: missing force object");
  const json& fj = j["force"];
  if (!fj.contains("kind") || !fj["kind"].is_string())
    throw ProblemFileError("problem file: force.kind must be a string");
  std::string kind = fj["kind"].get<std::string>();
  const json params = fj.contains("params") ? fj["params"] : json::object();
  if (kind == "affine") {
    double mu = require_number(params, "mu");
    double A = number_or(params, "A", 0.0);
    double omega = number_or(params, "omega", 0.0);
    double phi = number_or(params, "phi", 0.0);
    double B = number_or(params, "B", 0.0);
    p.f = affine_force(mu, A, omega, phi, B, p.R0);
    p.mu_check = p.mu_hat = mu;
    p.name = "affine";
  } else if (kind == "affine_bounded") {
    double mu = require_number(params, "mu");
    double A = number_or(params, "A", 0.0);
    double omega = number_or(params, "omega", 0.0);
    double phi = number_or(params, "phi", 0.0);
    double B = number_or(params, "B", 0.0);
    double C = number_or(params, "C", 0.0);
    p.f = affine_bounded_force(mu, A, omega, phi, B, C, p.R0);
    p.mu_check = p.mu_hat = mu;
    p.name = "affine_bounded";
  } else {
    throw ProblemFileError("problem file: unknown force kind '" + kind + "'");
  }

  if (j.contains("rates")) {
    const json& r = j["rates"];
    p.mu_check = require_number(r, "mu_check");
    p.mu_hat = require_number(r, "mu_hat");
    if (!(p.mu_check <= p.mu_hat))
      throw ProblemFileError("problem file: rates must satisfy mu_check <= mu_hat");
  }

  if (j.contains("ll")) {
    const json& l = j["ll"];
    LLSpec ll;
    ll.N = static_cast<int>(number_or(l, "N", -1));
    if (ll.N < 0) throw ProblemFileError("problem file: ll.N must be >= 0");
    ll.eta_hat = number_or(l, "eta_hat", 0.0);
    if (l.contains("eps_bar")) ll.eps_bar = require_number(l, "eps_bar");
    if (l.contains("h_plus")) ll.h_plus = parse_trig_poly(l["h_plus"], p.T, "ll.h_plus");
    if (l.contains("h_minus")) ll.h_minus = parse_trig_poly(l["h_minus"], p.T, "ll.h_minus");
    pf.ll = std::move(ll);
  }
  return pf;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemFileError("problem file: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

std::string affine_problem_json(double T, double R0, double L0, double mu, double A,
                                double omega, double phi, double B) {
  json j;
  j["schema"] = kSchema;
  j["T"] = T;
  j["R0"] = R0;
  j["L0"] = L0;
  j["force"] = {{"kind", "affine"},
                {"params", {{"mu", mu}, {"A", A}, {"omega", omega}, {"phi", phi}, {"B", B}}}};
  return j.dump(2);
}

}  // namespace orbitbounce
