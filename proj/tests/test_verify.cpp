#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "greenlab/errors.hpp"
#include "greenlab/io.hpp"
#include "greenlab/polygon.hpp"
#include "greenlab/verify.hpp"

using namespace greenlab;

namespace {

std::string scratch(const std::string& leaf) {
  std::string dir = std::string(GL_SCRATCH_DIR) + "/" + leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

json square_plan_json(const std::string& outdir) {
  json j;
  j["domain"] = {{"name", "square"},
                 {"vertices", {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}},
                 {"lipschitz", {{"L", 1.01}, {"R0", 0.5}}}};
  j["coefficients"] = {{"kind", "checkerboard"},
                       {"contrast", 3.0},
                       {"grid", 4},
                       {"skew", 0.2},
                       {"lambda", 0.2}};
  j["mesh"] = {{"h", 0.07}, {"grade_ratio", 4.0}};
  j["poles"] = {{0.4, 0.45}, {0.7, 0.6}, {0.3, 0.72}};
  j["eps"] = {{"base", 0.1}, {"levels", 2}};
  j["scales"] = {{"R_levels", 2}};
  j["holder_budget"] = 256;
  j["chain"] = {{"pairs", 25}, {"averages", 1}};
  j["suites"] = {"m1", "symmetry", "chain"};
  j["out"] = outdir;
  j["seed"] = 11;
  j["threads"] = 1;
  return j;
}

}  // namespace

TEST_CASE("plan parsing is strict and round-trips") {
  std::string out = scratch("verify_plan");
  json j = square_plan_json(out);
  ExperimentPlan plan = ExperimentPlan::from_json(j);
  CHECK(plan.domain_name == "square");
  CHECK(plan.poles.size() == 3);
  CHECK(plan.eps0 == 0.1);
  CHECK(plan.cert_scale() == 0.5);
  plan.validate();

  // round trip: serialize, parse again, serialize again, byte-equal
  json j2 = plan.to_json();
  ExperimentPlan plan2 = ExperimentPlan::from_json(j2);
  CHECK(json_dump(plan2.to_json()) == json_dump(j2));

  json bad = j;
  bad["typo_key"] = 1;
  CHECK_THROWS_AS(ExperimentPlan::from_json(bad), InvalidParameter);
  json bad2 = j;
  bad2["mesh"]["hmax"] = 0.1;
  CHECK_THROWS_AS(ExperimentPlan::from_json(bad2), InvalidParameter);
}

TEST_CASE("plan preconditions carry their citations") {
  std::string out = scratch("verify_pre");
  ExperimentPlan plan = ExperimentPlan::from_json(square_plan_json(out));

  ExperimentPlan p1 = plan;
  p1.R_base = 1.2;  // above the certificate scale 0.5
  try {
    run_theorem_m1(p1);
    FAIL("R above the certificate scale must abort");
  } catch (const InvalidParameter& e) {
    CHECK(std::string(e.what()).find("R ∈ (0, R0]") != std::string::npos);
  }

  ExperimentPlan p2 = plan;
  p2.eps0 = 0.7;
  CHECK_THROWS_AS(p2.validate(), OutOfScale);

  ExperimentPlan p3 = plan;
  p3.q_local = {2.5};
  CHECK_THROWS_AS(p3.validate(), InvalidParameter);

  ExperimentPlan p4 = plan;
  p4.poles.push_back({1.4, 0.5});
  CHECK_THROWS_AS(p4.validate(), InvalidParameter);

  ExperimentPlan p5 = plan;
  p5.domain = unit_square();  // drops the certificate
  CHECK_THROWS_AS(p5.validate(), InvalidDomain);

  ExperimentPlan p6 = plan;
  p6.suites = {"m2"};
  CHECK_THROWS_AS(p6.validate(), InvalidParameter);
}

TEST_CASE("symmetry suite passes and flags the corrupted pairing") {
  std::string out = scratch("verify_sym");
  ExperimentPlan plan = ExperimentPlan::from_json(square_plan_json(out));
  plan.mesh_h = 0.08;

  SuiteReport rep = run_symmetry_suite(plan);
  CHECK(rep.pass);
  CHECK(rep.data["max_rel"].get<double>() <= 1e-7);
  CHECK(rep.data["control_rel"].get<double>() > 1e-5);
  CHECK(rep.data["pairs"].size() == 6);  // 3 poles, ordered pairs
  REQUIRE(!rep.artifacts.empty());
  CHECK(std::filesystem::exists(rep.artifacts[0]));

  // bit-reproducible report
  SuiteReport rep2 = run_symmetry_suite(plan);
  CHECK(json_dump(rep.to_json()) == json_dump(rep2.to_json()));
}

TEST_CASE("main estimate suite measures and regression-checks its maxima") {
  std::string out = scratch("verify_m1");
  ExperimentPlan plan = ExperimentPlan::from_json(square_plan_json(out));
  plan.poles = {{0.45, 0.55}};

  SuiteReport rep = run_theorem_m1(plan);
  CHECK(rep.pass);
  for (const char* key :
       {"local", "annulus", "holder", "weak_dg", "weak_pi", "log"}) {
    double v = rep.data["max"][key].get<double>();
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
  }
  CHECK(rep.baseline_status == "established");
  for (const std::string& a : rep.artifacts) CHECK(std::filesystem::exists(a));

  // second run compares against the baseline and reproduces the report
  SuiteReport rep2 = run_theorem_m1(plan);
  CHECK(rep2.pass);
  CHECK(rep2.baseline_status == "match");
  CHECK(json_dump(rep.to_json()) == json_dump(rep2.to_json()));
}

TEST_CASE("chain suite validates constructions and the telescoping bound") {
  std::string out = scratch("verify_chain");
  PolygonalDomain disk = regular_ngon(512, 1.0);
  disk.flatness = FlatnessCert{1.0 / 96.0, 0.018};

  ExperimentPlan plan;
  plan.domain = disk;
  plan.domain_name = "disk512_flat";
  plan.mesh_h = 0.045;
  plan.grade_ratio = 6.0;
  plan.eps0 = 0.016;
  plan.chain_pairs = 25;
  plan.chain_averages = 1;
  plan.outdir = out;
  plan.seed = 11;

  SuiteReport rep = run_chain_suite(plan);
  CHECK(rep.pass);
  CHECK(rep.data["failures"].get<int>() == 0);
  CHECK(rep.data["max_log_ratio"].get<double>() <=
        rep.data["count_constant"].get<double>());
  CHECK(rep.data["N0"].get<double>() > 0.0);
  CHECK(std::isfinite(rep.data["N0"].get<double>()));
  CHECK(rep.data["k_interior"].get<int>() <=
        rep.data["k_boundary"].get<int>());
  REQUIRE(rep.data["telescoping"].size() >= 1);
  for (const json& t : rep.data["telescoping"])
    CHECK(t["pass"].get<bool>());
  for (const std::string& a : rep.artifacts) CHECK(std::filesystem::exists(a));
}

TEST_CASE("representation suite is exact same-system and tightens across meshes") {
  std::string out = scratch("verify_rep");
  ExperimentPlan plan = ExperimentPlan::from_json(square_plan_json(out));
  plan.poles = {{0.45, 0.55}};
  plan.mesh_h = 0.1;

  SuiteReport rep = run_representation_suite(plan);
  CHECK(rep.pass);
  REQUIRE(rep.data["cases"].size() == 3);
  for (const json& c : rep.data["cases"]) {
    CHECK(c["same"].get<double>() <= 1e-7);
    CHECK(c["cross_coarse"].get<double>() <= 0.02);
    CHECK(c["cross_fine"].get<double>() <= c["cross_coarse"].get<double>());
  }
}

TEST_CASE("appendix suite verifies the interior constructions") {
  std::string out = scratch("verify_app");
  PolygonalDomain disk = regular_ngon(512, 1.0);
  disk.flatness = FlatnessCert{1.0 / 96.0, 0.018};

  ExperimentPlan plan;
  plan.domain = disk;
  plan.domain_name = "disk512_flat";
  plan.two_scale_samples = 40;
  plan.escape_samples = 30;
  plan.outdir = out;
  plan.seed = 3;

  SuiteReport rep = run_appendix_suite(plan);
  CHECK(rep.pass);
  CHECK(rep.data["two_scale_failures"].get<int>() == 0);
  CHECK(rep.data["escape_failures"].get<int>() == 0);
  CHECK(rep.data["escape_case_a"].get<int>() > 0);
  CHECK(rep.data["escape_case_b"].get<int>() > 0);
  double smin = rep.data["separation_over_R"]["min"].get<double>();
  double smax = rep.data["separation_over_R"]["max"].get<double>();
  CHECK(smin >= 1.0 - 1e-12);
  CHECK(smax <= 1.001);

  // graph-certified domains have no flatness route
  ExperimentPlan bad = ExperimentPlan::from_json(square_plan_json(out));
  CHECK_THROWS_AS(run_appendix_suite(bad), InvalidDomain);
}

TEST_CASE("suite dispatch, report files, and merging") {
  std::string out = scratch("verify_merge");
  CHECK_THROWS_AS(
      run_suite("m2", ExperimentPlan::from_json(square_plan_json(out))),
      InvalidParameter);

  SuiteReport a;
  a.suite = "symmetry";
  a.pass = true;
  a.data["max_rel"] = 1e-9;
  SuiteReport b;
  b.suite = "chain";
  b.pass = false;
  b.notes.push_back("one invariant failed");

  std::string path = write_report(a, out);
  CHECK(std::filesystem::exists(path));
  json back = json::parse(read_text_file(path));
  CHECK(back["suite"] == "symmetry");
  CHECK(back["pass"] == true);

  json merged = merge_reports({a, b});
  CHECK(merged["pass"] == false);
  CHECK(merged["total"] == 2);
  REQUIRE(merged["failed"].size() == 1);
  CHECK(merged["failed"][0] == "chain");
  // order-independent: sorted by suite name
  json merged2 = merge_reports({b, a});
  CHECK(json_dump(merged) == json_dump(merged2));
  CHECK(merged["suites"][0]["suite"] == "chain");
}
