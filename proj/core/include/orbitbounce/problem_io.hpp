#pragma once
#include <optional>
#include <stdexcept>
#include <string>

#include "orbitbounce/model.hpp"

namespace orbitbounce {

struct ProblemFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Landesman-Lazer data attached to a problem file: the band index and the
/// user-supplied residual certificates h± as trig-polynomial expressions.
struct LLSpec {
  int N = -1;
  double eta_hat = 0.0;
  std::optional<double> eps_bar;  ///< growth floor for the N=0 one-sided case
  std::function<double(double)> h_plus, h_minus;
};

struct ProblemFile {
  CentralForceProblem problem;
  std::optional<LLSpec> ll;
};

/// Parses the JSON problem format (schema "orbit-bounce/1"):
///   {schema, T, R0, L0, force: {kind, params}, rates?, ll?}
/// Throws ProblemFileError with a readable message on any malformation.
ProblemFile parse_problem(const std::string& json_text);
ProblemFile load_problem(const std::string& path);

/// Serializes a catalog problem back to the file format (used by tests and
/// the examples the CLI can emit).
std::string affine_problem_json(double T, double R0, double L0, double mu, double A,
                                double omega, double phi, double B);

}  // namespace orbitbounce
