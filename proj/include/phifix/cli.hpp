#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "phifix/counterexample.hpp"
#include "phifix/exprparse.hpp"
#include "phifix/hammerstein.hpp"
#include "phifix/mnc.hpp"
#include "phifix/phi_ops.hpp"
#include "phifix/version.hpp"

// Batch front door: spec files in, reports out. Exit codes are a stable
// contract: 0 success, 1 a hypothesis/convergence/assertion failure, 2 an
// input error (malformed file, schema violation, expression parse error).

namespace phifix::cli {

using Json = nlohmann::ordered_json;

/// Input rejected before any computation ran: missing or mistyped fields,
/// unreadable files, bad enum values.
class SchemaError : public std::runtime_error {
public:
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GlobalOptions {
  std::string out_dir;  // empty: write next to the working directory
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read spec file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::filesystem::path resolve_output(const GlobalOptions& opts,
                                            const std::optional<std::string>& declared,
                                            const std::string& default_name) {
  std::filesystem::path p = declared ? std::filesystem::path(*declared)
                                     : std::filesystem::path(default_name);
  if (p.is_relative() && !opts.out_dir.empty())
    p = std::filesystem::path(opts.out_dir) / p;
  return p;
}

inline const Json& require_field(const Json& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaError(std::string("missing field '") + key + "' in " + where);
  return *it;
}

inline std::string require_string(const Json& j, const char* key, const char* where) {
  const Json& v = require_field(j, key, where);
  if (!v.is_string())
    throw SchemaError(std::string("field '") + key + "' in " + where + " must be a string");
  return v.get<std::string>();
}

inline double require_number(const Json& j, const char* key, const char* where) {
  const Json& v = require_field(j, key, where);
  if (!v.is_number())
    throw SchemaError(std::string("field '") + key + "' in " + where + " must be a number");
  return v.get<double>();
}

inline double number_or(const Json& j, const char* key, double fallback, const char* where) {
  if (!j.contains(key)) return fallback;
  return require_number(j, key, where);
}

inline int int_or(const Json& j, const char* key, int fallback, const char* where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer())
    throw SchemaError(std::string("field '") + key + "' in " + where + " must be an integer");
  return v.get<int>();
}

inline std::string string_or(const Json& j, const char* key, const char* fallback,
                             const char* where) {
  if (!j.contains(key)) return fallback;
  return require_string(j, key, where);
}

inline Eigen::MatrixXd parse_matrix(const Json& rows, const char* where) {
  if (!rows.is_array() || rows.empty())
    throw SchemaError(std::string(where) + " must be a non-empty array of rows");
  const std::size_t n = rows.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Json& row = rows[i];
    if (!row.is_array())
      throw SchemaError(std::string(where) + " row " + std::to_string(i) +
                        " must be an array");
    if (i == 0) m.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(row.size()));
    if (row.size() != static_cast<std::size_t>(m.cols()))
      throw SchemaError(std::string(where) + " rows have inconsistent lengths");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!row[c].is_number())
        throw SchemaError(std::string(where) + " entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

inline std::vector<std::string> string_list(const Json& v, const char* where) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
    return out;
  }
  if (!v.is_array())
    throw SchemaError(std::string(where) + " must be a string or an array of strings");
  for (const auto& e : v) {
    if (!e.is_string())
      throw SchemaError(std::string(where) + " entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline QuadKind parse_quadrature(const std::string& s) {
  if (s == "trapezoid") return QuadKind::Trapezoid;
  if (s == "simpson") return QuadKind::Simpson;
  throw SchemaError("quadrature must be 'trapezoid' or 'simpson', got '" + s + "'");
}

inline VectorNorm parse_norm(const std::string& s) {
  if (s == "max") return VectorNorm::Max;
  if (s == "euclid") return VectorNorm::Euclid;
  if (s == "l1") return VectorNorm::L1;
  throw SchemaError("vector_norm must be 'max', 'euclid' or 'l1', got '" + s + "'");
}

inline std::optional<std::uint64_t> env_seed_override() {
  const char* env = std::getenv("PHIFIX_SEED");
  if (!env || *env == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw SchemaError(std::string("PHIFIX_SEED must be an unsigned integer, got '") +
                      env + "'");
  return static_cast<std::uint64_t>(v);
}

inline ProblemConfig build_problem_config(const Json& spec) {
  const Json& problem = require_field(spec, "problem", "spec");
  if (!problem.is_object()) throw SchemaError("'problem' must be an object");

  ProblemConfig cfg;
  cfg.dim = int_or(problem, "dim", 1, "problem");
  cfg.grid = int_or(problem, "grid", 64, "problem");
  if (problem.contains("kernel_table")) {
    cfg.kernel_table = parse_matrix(problem.at("kernel_table"), "problem.kernel_table");
  } else {
    cfg.kernel = require_string(problem, "kernel", "problem");
  }
  cfg.f = string_list(require_field(problem, "f", "problem"), "problem.f");
  cfg.h = string_list(require_field(problem, "h", "problem"), "problem.h");
  cfg.omega = require_string(problem, "omega", "problem");
  cfg.quadrature = parse_quadrature(string_or(problem, "quadrature", "trapezoid", "problem"));
  cfg.norm = parse_norm(string_or(problem, "vector_norm", "max", "problem"));
  cfg.tol = number_or(problem, "tol", cfg.tol, "problem");
  cfg.max_iter = int_or(problem, "max_iter", cfg.max_iter, "problem");
  cfg.damping = number_or(problem, "damping", cfg.damping, "problem");
  cfg.alpha_samples = int_or(problem, "alpha_samples", cfg.alpha_samples, "problem");
  if (problem.contains("seed")) {
    const Json& s = problem.at("seed");
    if (!s.is_number_integer() || s.get<double>() < 0)
      throw SchemaError("problem.seed must be a nonnegative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (problem.contains("R_override"))
    cfg.r_override = require_number(problem, "R_override", "problem");

  const Json& phi = require_field(spec, "phi", "spec");
  const std::string variant = require_string(phi, "variant", "phi");
  if (variant == "lifted" || variant == "matrix") {
    cfg.phi_matrix = parse_matrix(require_field(phi, "matrix", "phi"), "phi.matrix");
  } else {
    throw SchemaError("phi variant '" + variant +
                      "' does not act on grid functions; the integral pipeline needs "
                      "'lifted' or 'matrix' (sequence-space variants belong to the mnc "
                      "and counterexample commands)");
  }

  if (const auto seed = env_seed_override()) cfg.seed = *seed;
  return cfg;
}

inline SeqVec parse_seqvec(const Json& pairs, const char* where) {
  if (!pairs.is_array())
    throw SchemaError(std::string(where) + " must be an array of [index, value] pairs");
  SeqVec v;
  for (const auto& p : pairs) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number())
      throw SchemaError(std::string(where) + " entries must be [index, value] pairs");
    v.set(p[0].get<int>(), p[1].get<double>());
  }
  return v;
}

inline Atom parse_atom(const Json& j, const char* where) {
  const std::string type = require_string(j, "type", where);
  if (type == "finite_points") {
    const Json& pts = require_field(j, "points", where);
    if (!pts.is_array() || pts.empty())
      throw SchemaError(std::string(where) + ".points must be a non-empty array");
    std::vector<SeqVec> points;
    for (const auto& p : pts) points.push_back(parse_seqvec(p, where));
    return Atom::finite_points(std::move(points));
  }
  if (type == "basis_ray") {
    SeqVec center;
    if (j.contains("center")) center = parse_seqvec(j.at("center"), where);
    const double radius = require_number(j, "radius", where);
    const int start_index = int_or(j, "start_index", 1, where);
    if (j.contains("tail")) {
      const Expr tail = parse(require_string(j, "tail", where), {"k"});
      return Atom::basis_ray(std::move(center), radius, start_index, tail,
                             require_number(j, "tail_limit", where));
    }
    return Atom::basis_ray(std::move(center), radius, start_index);
  }
  throw SchemaError(std::string(where) + ": unknown atom type '" + type + "'");
}

inline SetDescriptor parse_descriptor(const Json& j, const char* where) {
  const Json& atoms = require_field(j, "atoms", where);
  if (!atoms.is_array() || atoms.empty())
    throw SchemaError(std::string(where) + ".atoms must be a non-empty array");
  std::vector<Atom> parsed;
  for (const auto& a : atoms) parsed.push_back(parse_atom(a, where));
  const bool hull = j.contains("hull") && j.at("hull").is_boolean() && j.at("hull").get<bool>();
  const bool closed =
      j.contains("closed") && j.at("closed").is_boolean() && j.at("closed").get<bool>();
  return SetDescriptor(std::move(parsed), hull, closed);
}

inline PhiOperator parse_sequence_operator(const Json& j) {
  const std::string variant = require_string(j, "variant", "mnc.operator");
  if (variant == "right_shift") return PhiOperator::right_shift();
  if (variant == "diagonal") {
    const Expr symbol = parse(require_string(j, "symbol", "mnc.operator"), {"k"});
    return PhiOperator::diagonal(symbol, require_number(j, "limit", "mnc.operator"));
  }
  throw SchemaError("mnc.operator variant must be 'right_shift' or 'diagonal', got '" +
                    variant + "'");
}

inline Json premise_json(const PremiseReport& rep, const std::string& applicability) {
  Json j;
  j["verdict"] = rep.verdict;
  j["premises_hold"] = rep.premises_hold;
  j["not_in_span_of_identity"] = rep.not_in_span_of_identity;
  j["kernel_trivial_on_samples"] = rep.kernel_trivial_on_samples;
  if (rep.inverse_bound_c)
    j["inverse_bound_c"] = *rep.inverse_bound_c;
  else
    j["inverse_bound_c"] = nullptr;
  j["operator_norm"] = rep.operator_norm;
  j["kernel_samples"] = rep.kernel_samples;
  j["min_kernel_ratio"] = rep.min_kernel_ratio;
  j["span_note"] = rep.span_note;
  if (!applicability.empty()) j["applicability"] = applicability;
  return j;
}

struct VerifyOutcome {
  Json report;
  bool passed = false;
  std::vector<std::string> failures;
};

inline VerifyOutcome run_verify(const ProblemSpec& spec) {
  VerifyOutcome out;

  const PremiseReport premises = check_phi_space_premises(spec.phi(), 32, spec.seed(),
                                                          spec.norm());
  bool span_ok = premises.not_in_span_of_identity;
  std::string applicability;
  if (!span_ok && spec.dim() == 1) {
    span_ok = true;
    applicability = "not applicable: scalar state dimension";
  }
  const bool premises_ok = span_ok && premises.kernel_trivial_on_samples;
  if (!premises_ok) out.failures.push_back("premises");

  const double k_bound = compute_K(spec);
  const GrowthReport growth = check_growth(spec, spec.alpha_samples());
  if (!growth.holds) out.failures.push_back("growth");
  const AsymptoticReport asym = check_asymptotic(spec);
  if (!asym.holds) out.failures.push_back("asymptotic");

  Json radius;
  bool radius_ok = false;
  try {
    radius["value"] = find_R(spec);
    radius["source"] = spec.r_override() ? "override" : "scan";
    radius["feasible"] = true;
    radius_ok = true;
  } catch (const NoFeasibleRadius& e) {
    radius["feasible"] = false;
    radius["error"] = e.what();
    out.failures.push_back("radius");
  }

  out.report["premises"] = premise_json(premises, applicability);
  out.report["K"] = k_bound;
  Json g;
  g["samples"] = growth.samples;
  g["radius"] = growth.radius;
  g["radius_source"] = growth.radius_source;
  g["max_violation"] = growth.max_violation;
  g["holds"] = growth.holds;
  out.report["growth"] = g;
  Json a;
  a["probes"] = asym.probes;
  a["values"] = asym.values;
  a["holds"] = asym.holds;
  a["method"] = asym.method;
  out.report["asymptotic"] = a;
  out.report["radius"] = radius;

  out.passed = premises_ok && growth.holds && asym.holds && radius_ok;
  out.report["passed"] = out.passed;
  out.report["failures"] = out.failures;
  return out;
}

inline Json solve_json(const SolveReport& rep) {
  Json j;
  j["status"] = rep.status;
  j["converged"] = rep.converged;
  j["iterations"] = rep.iterations;
  j["certificate"] = to_string(rep.certificate);
  j["K"] = rep.K;
  j["R"] = rep.R;
  j["r_source"] = rep.r_source;
  j["alpha_hat"] = rep.alpha_hat;
  j["q"] = rep.q;
  j["residual_history"] = rep.residual_history;
  j["apriori_history"] = rep.apriori_history;
  return j;
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_text(const ProblemSpec& spec, const GridFunction& y) {
  std::string out = "t";
  for (int c = 1; c <= spec.dim(); ++c) out += ",y" + std::to_string(c);
  out += '\n';
  for (int i = 0; i <= spec.grid(); ++i) {
    out += format_double(spec.disc().nodes(i));
    for (int c = 0; c < spec.dim(); ++c) {
      out += ',';
      out += format_double(y.values()(i, c));
    }
    out += '\n';
  }
  return out;
}

struct LoadedSpec {
  Json json;
  std::string bytes;
  std::string stem;
  std::optional<std::string> report_path;
  std::optional<std::string> csv_path;
};

inline LoadedSpec load_spec(const std::string& path) {
  LoadedSpec s;
  s.bytes = read_file(path);
  s.json = Json::parse(s.bytes);  // parse_error carries the byte position
  s.stem = std::filesystem::path(path).stem().string();
  if (s.json.contains("output")) {
    const Json& o = s.json.at("output");
    if (!o.is_object()) throw SchemaError("'output' must be an object");
    if (o.contains("report")) s.report_path = require_string(o, "report", "output");
    if (o.contains("csv")) s.csv_path = require_string(o, "csv", "output");
  }
  return s;
}

inline Json report_shell(const char* command, const std::string& path,
                         const LoadedSpec& spec) {
  Json j;
  j["phifix_version"] = kVersion;
  j["report_format"] = kReportFormat;
  j["generated_at"] = timestamp_utc();
  j["command"] = command;
  Json input;
  input["path"] = path;
  input["bytes"] = spec.bytes.size();
  input["fnv1a64"] = hex64(fnv1a64(spec.bytes));
  j["input"] = input;
  return j;
}

}  // namespace detail

/// phifix verify <spec.json>: premise, growth, asymptotic and radius checks;
/// exit 0 iff every verdict holds. The report is written in all cases that
/// get past input validation.
inline int cmd_verify(const std::string& path, const GlobalOptions& opts) {
  const detail::LoadedSpec spec = detail::load_spec(path);
  const ProblemSpec problem{detail::build_problem_config(spec.json)};

  Json report = detail::report_shell("verify", path, spec);
  report["seed"] = problem.seed();
  const detail::VerifyOutcome outcome = detail::run_verify(problem);
  report["verify"] = outcome.report;
  const int exit_code = outcome.passed ? 0 : 1;
  report["exit_code"] = exit_code;

  const auto report_path = detail::resolve_output(opts, spec.report_path,
                                                  spec.stem + ".report.json");
  detail::write_atomic(report_path, report.dump(2) + "\n");
  std::fprintf(stderr, "verify: %s (report: %s)\n", outcome.passed ? "pass" : "FAIL",
               report_path.string().c_str());
  return exit_code;
}

/// phifix solve <spec.json> [--force]: verification first (unless forced),
/// then damped Picard iteration. Exit 0 iff converged; the CSV is written on
/// convergence, the report always.
inline int cmd_solve(const std::string& path, bool force, const GlobalOptions& opts) {
  const detail::LoadedSpec spec = detail::load_spec(path);
  const ProblemSpec problem{detail::build_problem_config(spec.json)};

  Json report = detail::report_shell("solve", path, spec);
  report["seed"] = problem.seed();
  report["force"] = force;

  bool may_solve = true;
  if (!force) {
    const detail::VerifyOutcome outcome = detail::run_verify(problem);
    report["verify"] = outcome.report;
    may_solve = outcome.passed;
  }

  int exit_code = 1;
  const auto report_path = detail::resolve_output(opts, spec.report_path,
                                                  spec.stem + ".report.json");
  if (may_solve) {
    const SolveReport solved = solve(problem, force);
    report["solve"] = detail::solve_json(solved);
    if (solved.converged) {
      const auto csv_path = detail::resolve_output(opts, spec.csv_path,
                                                   spec.stem + ".csv");
      detail::write_atomic(csv_path, detail::csv_text(problem, solved.y));
      report["solve"]["csv"] = csv_path.string();
      exit_code = 0;
    } else {
      report["solve"]["csv"] = nullptr;
    }
  }
  report["exit_code"] = exit_code;
  detail::write_atomic(report_path, report.dump(2) + "\n");
  std::fprintf(stderr, "solve: %s (report: %s)\n", exit_code == 0 ? "converged" : "FAIL",
               report_path.string().c_str());
  return exit_code;
}

/// phifix mnc <spec.json>: evaluate kuratowski and chi_phi for each listed
/// descriptor under the declared sequence operator.
inline int cmd_mnc_file(const std::string& path, const GlobalOptions& opts) {
  const detail::LoadedSpec spec = detail::load_spec(path);
  const Json& mnc = detail::require_field(spec.json, "mnc", "spec");
  const PhiOperator op =
      detail::parse_sequence_operator(detail::require_field(mnc, "operator", "mnc"));
  const Json& list = detail::require_field(mnc, "descriptors", "mnc");
  if (!list.is_array() || list.empty())
    throw SchemaError("mnc.descriptors must be a non-empty array");

  Json report = detail::report_shell("mnc", path, spec);
  report["operator"] = op.kind_name();
  Json rows = Json::array();
  for (const auto& d : list) {
    const SetDescriptor descriptor = detail::parse_descriptor(d, "mnc.descriptors");
    Json row;
    row["descriptor"] = to_string(descriptor);
    row["kuratowski"] = kuratowski(descriptor);
    row["chi_phi"] = chi_phi(descriptor, op);
    row["image"] = to_string(image_under(op, descriptor));
    rows.push_back(std::move(row));
  }
  report["descriptors"] = rows;
  report["exit_code"] = 0;

  const auto report_path = detail::resolve_output(opts, spec.report_path,
                                                  spec.stem + ".mnc.json");
  detail::write_atomic(report_path, report.dump(2) + "\n");
  std::fprintf(stderr, "mnc: %zu descriptors (report: %s)\n",
               static_cast<std::size_t>(rows.size()), report_path.string().c_str());
  return 0;
}

/// phifix mnc --suite N --seed S: the seeded axiom suite; exit 0 iff no
/// property is violated.
inline int cmd_mnc_suite(int n_cases, std::uint64_t seed, const GlobalOptions& opts) {
  const PropertyReport rep = check_properties(seed, n_cases);

  Json report;
  report["phifix_version"] = kVersion;
  report["report_format"] = kReportFormat;
  report["generated_at"] = detail::timestamp_utc();
  report["command"] = "mnc-suite";
  report["seed"] = seed;
  report["cases"] = rep.cases;
  report["checks"] = rep.checks;
  Json violations = Json::array();
  for (const auto& v : rep.violations) {
    Json row;
    row["case"] = v.case_index;
    row["property"] = v.property;
    row["details"] = v.details;
    violations.push_back(std::move(row));
  }
  report["violations"] = violations;
  report["passed"] = rep.passed();
  const int exit_code = rep.passed() ? 0 : 1;
  report["exit_code"] = exit_code;

  const auto report_path = detail::resolve_output(opts, std::nullopt, "mnc-suite.json");
  detail::write_atomic(report_path, report.dump(2) + "\n");
  std::fprintf(stderr, "mnc suite: %d cases, %zu violations (report: %s)\n", rep.cases,
               rep.violations.size(), report_path.string().c_str());
  return exit_code;
}

/// phifix counterexample [--steps N] [--seed S]: the shift-on-the-simplex
/// demonstration. Exit 0 iff every exact claim holds on this run.
inline int cmd_counterexample(int steps, std::uint64_t seed, const GlobalOptions& opts) {
  Json report;
  report["phifix_version"] = kVersion;
  report["report_format"] = kReportFormat;
  report["generated_at"] = detail::timestamp_utc();
  report["command"] = "counterexample";
  report["seed"] = seed;

  bool ok = true;

  const IsometryReport iso = verify_isometry(seed, 1000);
  ok = ok && iso.exact();
  Json iso_json;
  iso_json["pairs"] = iso.pairs;
  iso_json["violations"] = iso.violations;
  iso_json["exact"] = iso.exact();
  if (!iso.first_violation.empty()) iso_json["first_violation"] = iso.first_violation;
  report["isometry"] = iso_json;

  Json gaps = Json::array();
  for (int n = 1; n <= 1024; n *= 2) {
    const double vertex_gap = fixed_point_gap(GapFamily::Vertex, n);
    const double uniform_gap = fixed_point_gap(GapFamily::Uniform, n);
    ok = ok && vertex_gap == 2.0 && uniform_gap == 2.0 / n;
    Json row;
    row["n"] = n;
    row["vertex"] = vertex_gap;
    row["uniform"] = uniform_gap;
    row["uniform_expected"] = 2.0 / n;
    gaps.push_back(std::move(row));
  }
  report["fixed_point_gaps"] = gaps;

  const std::vector<double> orbit = picard_orbit(SimplexPoint::vertex(1), steps);
  bool orbit_flat = true;
  for (double r : orbit) orbit_flat = orbit_flat && r == 2.0;
  ok = ok && orbit_flat;
  Json orbit_json;
  orbit_json["steps"] = steps;
  orbit_json["all_residuals_exactly_two"] = orbit_flat;
  orbit_json["first"] = orbit.front();
  orbit_json["last"] = orbit.back();
  report["picard_orbit"] = orbit_json;

  const CondensingCertificate cert = condensing_violation_certificate(seed, 200);
  ok = ok && cert.holds;
  Json cert_json;
  cert_json["chi_phi_ray"] = cert.chi_phi_ray;
  cert_json["chi_phi_ray_image"] = cert.chi_phi_ray_image;
  cert_json["chi_phi_finite"] = cert.chi_phi_finite;
  cert_json["chi_phi_finite_image"] = cert.chi_phi_finite_image;
  cert_json["alpha_hat"] = cert.alpha_hat;
  cert_json["alpha_pairs"] = cert.alpha_pairs;
  cert_json["holds"] = cert.holds;
  report["condensing_certificate"] = cert_json;

  const int exit_code = ok ? 0 : 1;
  report["passed"] = ok;
  report["exit_code"] = exit_code;

  const auto report_path =
      detail::resolve_output(opts, std::nullopt, "counterexample.json");
  detail::write_atomic(report_path, report.dump(2) + "\n");
  std::fprintf(stderr, "counterexample: %s (report: %s)\n", ok ? "pass" : "FAIL",
               report_path.string().c_str());
  return exit_code;
}

/// Maps the exception taxonomy onto exit codes; every command body runs
/// through here.
template <typename Fn>
int run_guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const EvalError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const Json::parse_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const NoFeasibleRadius& e) {
    std::fprintf(stderr, "hypothesis failure: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace phifix::cli
