#pragma once

#include <string>
#include <vector>

#include "greenlab/coefficients.hpp"
#include "greenlab/io.hpp"
#include "greenlab/polygon.hpp"
#include "greenlab/vec2.hpp"

namespace greenlab {

// Archivable description of one experiment: domain, operator, mesh,
// averaging-radius ladder, probe layout, and the suites to execute.
struct ExperimentPlan {
  std::string domain_name = "domain";
  PolygonalDomain domain;
  CoefficientField coeff = CoefficientField::identity();

  double mesh_h = 0.05;
  double grade_ratio = 6.0;

  std::vector<Vec2> poles;
  double eps0 = 0.0;  // 0: certificate scale / 4
  int eps_levels = 4;

  double K = 0.0;       // log-range constant, 0: domain diameter
  double R_base = 0.0;  // scale-ladder top, 0: certificate scale
  int R_levels = 3;

  std::vector<double> q_local{1.0, 1.5};
  std::vector<double> q_annulus{2.2, 2.5};
  int holder_budget = 1024;

  int chain_pairs = 100;
  int chain_averages = 2;

  int two_scale_samples = 200;
  int escape_samples = 100;

  std::vector<std::string> suites{"m1", "symmetry", "chain"};
  std::string outdir = "out";
  unsigned seed = 7;
  int threads = 1;

  static ExperimentPlan from_json(const json& j);
  json to_json() const;

  // Precondition gate shared by every suite; throws with the violated
  // requirement spelled out.
  void validate() const;

  double cert_scale() const;
  double eps_base() const;
  double range_K() const;
};

struct SuiteReport {
  std::string suite;
  bool pass = false;
  std::vector<std::string> notes;      // findings, deterministic order
  json data;                           // all measured values
  std::vector<std::string> artifacts;  // files written (paths)

  // Baseline regression outcome ("", "established", "match", "drift").
  // Kept out of to_json: the serialized report must not depend on whether
  // a baseline file already existed, only on the measurements.
  std::string baseline_status;

  json to_json() const;
};

// Ratio families (a)-(d) for the main estimate: local small-exponent
// gradient ratios, annulus/holder ratios above exponent 2, restricted
// weak-L2 values, and the log-bound ratio at sampled probes.  Establishes
// a baseline file on first run and regression-checks against it after.
SuiteReport run_theorem_m1(const ExperimentPlan& plan);

// Adjoint-pairing identity over all pole pairs plus a deliberately
// corrupted pairing that must be flagged.
SuiteReport run_symmetry_suite(const ExperimentPlan& plan);

// Chain construction over random admissible pairs, all chain invariants,
// count-versus-log-separation bound, and averaged-column telescoping
// along evaluated chains.
SuiteReport run_chain_suite(const ExperimentPlan& plan);

// Averaged reproduction identity for bundled data sets, same-system and
// across meshes.
SuiteReport run_representation_suite(const ExperimentPlan& plan);

// Two-scale point pairs and escape segments sampled over the domain.
SuiteReport run_appendix_suite(const ExperimentPlan& plan);

// Dispatch by name ("m1", "symmetry", "chain", "representation",
// "appendix"); unknown names are rejected.
SuiteReport run_suite(const std::string& name, const ExperimentPlan& plan);

// Writes <outdir>/<suite>_report.json and the suite artifacts; returns the
// report path.
std::string write_report(const SuiteReport& r, const std::string& outdir);

// Order-independent merge of suite reports into one summary.
json merge_reports(std::vector<SuiteReport> reports);

}  // namespace greenlab
