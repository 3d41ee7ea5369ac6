// Command-line front end: domain certification, chain construction, column
// computation, verification suites, and report merging.  Exit codes: 0 on
// success, 1 when a measured contract fails, 2 on invalid usage or a
// precondition violation.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "greenlab/chain.hpp"
#include "greenlab/errors.hpp"
#include "greenlab/frames.hpp"
#include "greenlab/green.hpp"
#include "greenlab/io.hpp"
#include "greenlab/mesh.hpp"
#include "greenlab/verify.hpp"

namespace fs = std::filesystem;
using namespace greenlab;

namespace {

Vec2 parse_point(const std::string& s, const char* flag) {
  size_t comma = s.find(',');
  if (comma == std::string::npos)
    throw InvalidParameter(std::string(flag) + " wants \"x,y\"");
  try {
    size_t ax = 0, ay = 0;
    std::string xs = s.substr(0, comma), ys = s.substr(comma + 1);
    double x = std::stod(xs, &ax);
    double y = std::stod(ys, &ay);
    if (ax != xs.size() || ay != ys.size())
      throw std::invalid_argument("trailing characters");
    return {x, y};
  } catch (const std::exception&) {
    throw InvalidParameter(std::string(flag) + " wants \"x,y\" with numbers");
  }
}

PolygonalDomain load_domain_file(const std::string& path) {
  if (!fs::exists(path))
    throw InvalidParameter("domain file not found: " + path);
  return load_domain(path);
}

// GREENLAB_OUT > explicit --out > fallback.
std::string resolve_out(const CLI::Option* out_opt, const std::string& flag_val,
                        const std::string& fallback) {
  if (const char* env = std::getenv("GREENLAB_OUT"); env && *env)
    return env;
  if (out_opt->count() > 0) return flag_val;
  return fallback;
}

// Dotted-key override "a.b.c=value"; the value is parsed as JSON when it
// parses, otherwise taken as a string.
void apply_override(json& config, const std::string& kv) {
  size_t eq = kv.find('=');
  if (eq == std::string::npos || eq == 0)
    throw InvalidParameter("override wants key.path=value: " + kv);
  std::string path = kv.substr(0, eq), value = kv.substr(eq + 1);
  json* node = &config;
  size_t start = 0;
  while (true) {
    size_t dot = path.find('.', start);
    std::string key = path.substr(start, dot - start);
    if (key.empty()) throw InvalidParameter("empty key segment in: " + kv);
    if (dot == std::string::npos) {
      (*node)[key] = json::accept(value) ? json::parse(value) : json(value);
      return;
    }
    node = &(*node)[key];
    if (!node->is_object() && !node->is_null())
      throw InvalidParameter("override descends into a non-object: " + kv);
    start = dot + 1;
  }
}

int cmd_certify(const std::string& domain_path, const std::string& route,
                double gamma, double L, double R0, const std::string& outdir) {
  PolygonalDomain dom = load_domain_file(domain_path);
  json rep;
  rep["domain"] = domain_path;
  rep["route"] = route;
  bool pass = false;
  if (route == "gamma") {
    double r0 = R0 > 0.0 ? R0 : (dom.flatness ? dom.flatness->R0
                                              : dom.diameter() / 8.0);
    double g = gamma > 0.0 ? gamma : (dom.flatness ? dom.flatness->gamma
                                                   : 1.0 / 96.0);
    FlatnessReport fr = certify_flatness(dom, g, r0);
    pass = fr.pass;
    rep["gamma"] = g;
    rep["R0"] = r0;
    rep["pass"] = fr.pass;
    rep["samples"] = fr.samples;
    rep["violations"] = fr.violations;
    rep["worst_ratio"] = fr.worst_ratio;
    rep["worst"] = {{"x", {fr.worst.x0.x, fr.worst.x0.y}},
                    {"R", fr.worst.R}};
  } else if (route == "lipschitz") {
    double r0 = R0 > 0.0 ? R0 : (dom.lipschitz ? dom.lipschitz->R0
                                               : dom.diameter() / 8.0);
    double l = L > 0.0 ? L : (dom.lipschitz ? dom.lipschitz->L : 1.0);
    LipschitzReport lr = certify_lipschitz(dom, l, r0);
    pass = lr.pass;
    rep["L"] = l;
    rep["R0"] = r0;
    rep["pass"] = lr.pass;
    rep["samples"] = lr.samples;
    rep["violations"] = lr.violations;
    rep["max_slope"] = lr.max_slope;
    rep["worst"] = {{"x", {lr.worst.x, lr.worst.y}}, {"R", lr.worst_R}};
  } else {
    throw InvalidParameter("--route must be gamma or lipschitz");
  }
  std::string path = outdir + "/certify.json";
  write_text_file(path, json_dump(rep));
  std::cout << "certify " << route << ": " << (pass ? "pass" : "fail")
            << "\nwrote " << path << "\n";
  return pass ? 0 : 1;
}

int cmd_chain(const std::string& domain_path, const std::string& xs,
              const std::string& ys, const std::string& outdir) {
  PolygonalDomain dom = load_domain_file(domain_path);
  Vec2 x = parse_point(xs, "--x");
  Vec2 y = parse_point(ys, "--y");
  if (!dom.flatness)
    throw InvalidParameter("chain needs a domain with a flatness certificate");
  double R0 = dom.flatness->R0;
  double rho = dist(x, y);
  if (!(rho > 0.0) || rho >= R0 / 8.0)
    throw TooClose("pair separation must satisfy 0<ρ:=|x−y|<R_0/8 "
                   "(here ρ=" + std::to_string(rho) +
                   ", R_0=" + std::to_string(R0) + ")");

  BallChain ch = chain_of_balls(dom, x, y);
  ChainCheck chk = validate_chain(dom, ch);

  json j;
  j["x"] = {x.x, x.y};
  j["y"] = {y.x, y.y};
  j["rho"] = ch.rho;
  j["R0"] = R0;
  j["boundary_case"] = ch.boundary_case;
  j["detour"] = ch.detour;
  j["terminal"] = {ch.terminal.x, ch.terminal.y};
  j["k"] = chk.k;
  j["log_ratio"] = chk.log_ratio;
  json balls = json::array();
  for (const Ball& b : ch.balls)
    balls.push_back({{"center", {b.center.x, b.center.y}},
                     {"radius", b.radius}});
  j["balls"] = std::move(balls);
  j["validation"] = {{"pass", chk.pass},
                     {"start_in_first", chk.start_in_first},
                     {"terminal_in_last", chk.terminal_in_last},
                     {"radii_lower", chk.radii_lower},
                     {"radii_upper", chk.radii_upper},
                     {"overlaps", chk.overlaps},
                     {"terminal_far", chk.terminal_far},
                     {"terminal_radius", chk.terminal_radius},
                     {"count_bound", chk.count_bound}};
  std::string path = outdir + "/chain.json";
  write_text_file(path, json_dump(j));
  std::cout << "chain: k=" << chk.k << " "
            << (chk.pass ? "pass" : "fail") << "\nwrote " << path << "\n";
  return chk.pass ? 0 : 1;
}

int cmd_green(const std::string& domain_path, const std::string& pole_s,
              double eps, const std::string& coeff_name, double h,
              double grade_ratio, const std::string& outdir) {
  PolygonalDomain dom = load_domain_file(domain_path);
  Vec2 pole = parse_point(pole_s, "--pole");

  CoefficientField coeff = CoefficientField::identity();
  if (coeff_name == "checkerboard")
    coeff = CoefficientField::checkerboard(4.0, 8, 0.25, 0.2);
  else if (coeff_name == "rotated")
    coeff = CoefficientField::rotated(2.0, 0.2);
  else if (coeff_name != "identity")
    throw InvalidParameter("--coeff must be identity, checkerboard, or rotated");

  MeshOptions mo;
  mo.h = h;
  mo.grade = true;
  mo.pole = pole;
  mo.grade_ratio = grade_ratio;
  Mesh mesh = Mesh::build(dom, mo);
  StokesSystem sys(mesh, dom, coeff);
  GreenPair pair = approx_green(sys, pole, eps, false);

  std::vector<Vec2> probes = probe_points(dom, pole, eps, dom.diameter());
  GreenTable table = sample_table(pair, probes);
  std::string csv_path = outdir + "/green_table.csv";
  write_text_file(csv_path, to_csv(table));

  double max_g = 0.0, max_pi = 0.0;
  for (const Mat2& g : table.G) max_g = std::max(max_g, g.max_abs());
  for (const Vec2& p : table.Pi)
    max_pi = std::max(max_pi, std::max(std::abs(p.x), std::abs(p.y)));
  json j;
  j["domain"] = domain_path;
  j["pole"] = {pole.x, pole.y};
  j["eps"] = eps;
  j["coefficients"] = coeff_name;
  j["mesh"] = {{"h", h},
               {"grade_ratio", grade_ratio},
               {"triangles", mesh.num_triangles()}};
  j["probes"] = table.x.size();
  j["max_abs_G"] = max_g;
  j["max_abs_Pi"] = max_pi;
  json cols = json::array();
  for (int k = 0; k < 2; ++k) {
    const GreenColumn& c = pair.col[k];
    cols.push_back({{"velocity_mean", {c.velocity_mean.x, c.velocity_mean.y}},
                    {"divergence", c.divergence},
                    {"pressure_mean", c.pressure_mean}});
  }
  j["columns"] = std::move(cols);
  std::string sum_path = outdir + "/green_summary.json";
  write_text_file(sum_path, json_dump(j));
  std::cout << "green: " << table.x.size() << " probes, max |G| " << max_g
            << "\nwrote " << csv_path << "\nwrote " << sum_path << "\n";
  return 0;
}

int cmd_verify(const std::string& config_path, const std::string& suite,
               const std::vector<std::string>& overrides,
               const CLI::Option* out_opt, const std::string& out_flag,
               const CLI::Option* threads_opt, int threads_flag,
               const CLI::Option* seed_opt, unsigned seed_flag) {
  if (!fs::exists(config_path))
    throw InvalidParameter("config file not found: " + config_path);
  json config = json::parse(read_text_file(config_path), nullptr, true, true);
  if (config.contains("domain") && config["domain"].is_string()) {
    // Relative domain paths resolve against the plan file.
    fs::path dp = config["domain"].get<std::string>();
    if (dp.is_relative())
      config["domain"] = (fs::path(config_path).parent_path() / dp).string();
  }
  for (const std::string& kv : overrides) apply_override(config, kv);

  ExperimentPlan plan = ExperimentPlan::from_json(config);
  plan.outdir = resolve_out(out_opt, out_flag, plan.outdir);
  if (threads_opt->count() > 0) plan.threads = threads_flag;
  if (seed_opt->count() > 0) plan.seed = seed_flag;
  plan.validate();

  std::vector<std::string> names;
  if (suite == "all")
    names = plan.suites;
  else
    names = {suite};

  std::vector<SuiteReport> reports;
  for (const std::string& name : names) {
    SuiteReport rep = run_suite(name, plan);
    std::string path = write_report(rep, plan.outdir);
    std::cout << "suite " << name << ": " << (rep.pass ? "pass" : "fail");
    if (!rep.baseline_status.empty())
      std::cout << " (baseline " << rep.baseline_status << ")";
    std::cout << "\nwrote " << path << "\n";
    reports.push_back(std::move(rep));
  }
  json merged = merge_reports(reports);
  std::string sum_path = plan.outdir + "/summary.json";
  write_text_file(sum_path, json_dump(merged));
  std::cout << "wrote " << sum_path << "\n";
  bool pass = merged["pass"].get<bool>();
  std::cout << "verify: " << (pass ? "pass" : "fail") << "\n";
  return pass ? 0 : 1;
}

int cmd_report(const std::string& indir, const CLI::Option* out_opt,
               const std::string& out_flag) {
  if (!fs::is_directory(indir))
    throw InvalidParameter("report input is not a directory: " + indir);
  std::string outdir = resolve_out(out_opt, out_flag, indir);

  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(indir)) {
    std::string name = e.path().filename().string();
    if (name.size() > 12 &&
        name.compare(name.size() - 12, 12, "_report.json") == 0)
      paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());

  std::vector<SuiteReport> reports;
  for (const std::string& p : paths) {
    json j = json::parse(read_text_file(p));
    if (!j.is_object() || !j.contains("suite")) continue;
    SuiteReport r;
    r.suite = j.at("suite").get<std::string>();
    r.pass = j.at("pass").get<bool>();
    r.notes = j.at("notes").get<std::vector<std::string>>();
    r.data = j.at("data");
    r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    reports.push_back(std::move(r));
  }
  if (reports.empty())
    throw InvalidParameter("no suite reports under " + indir);
  json merged = merge_reports(reports);
  std::string sum_path = outdir + "/summary.json";
  write_text_file(sum_path, json_dump(merged));

  std::vector<Vec2> pts;
  std::vector<std::string> labels;
  int idx = 0;
  for (const json& s : merged["suites"]) {
    pts.push_back({double(idx++), s["pass"].get<bool>() ? 1.0 : 0.0});
    labels.push_back(s["suite"].get<std::string>());
  }
  std::string title = "suite outcomes:";
  for (size_t i = 0; i < labels.size(); ++i)
    title += " " + std::to_string(i) + "=" + labels[i];
  std::string svg_path = outdir + "/summary.svg";
  write_text_file(svg_path, svg_chart(title, "suite", "pass",
                                      {{"outcome", pts, true}}));

  bool pass = merged["pass"].get<bool>();
  std::cout << "merged " << paths.size() << " reports: "
            << (pass ? "pass" : "fail") << "\nwrote " << sum_path
            << "\nwrote " << svg_path << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Green function laboratory for conormal Stokes systems"};
  app.require_subcommand(1);

  std::string out_flag = "out";
  int threads_flag = 0;
  unsigned seed_flag = 7;

  // certify
  auto* certify = app.add_subcommand(
      "certify", "Check a boundary certificate on a domain file");
  std::string cert_domain, cert_route;
  double cert_gamma = 0.0, cert_L = 0.0, cert_R0 = 0.0;
  certify->add_option("--domain", cert_domain, "domain JSON file")->required();
  certify->add_option("--route", cert_route, "gamma | lipschitz")->required();
  certify->add_option("--gamma", cert_gamma,
                      "slab ratio (default: declared, else 1/96)");
  certify->add_option("--L", cert_L,
                      "graph slope (default: declared, else 1.0)");
  certify->add_option("--R0", cert_R0,
                      "certificate scale (default: declared, else diam/8)");
  auto* cert_out = certify->add_option("--out", out_flag, "output directory");

  // chain
  auto* chain = app.add_subcommand(
      "chain", "Build and validate a chain of balls between two points");
  std::string chain_domain, chain_x, chain_y;
  chain->add_option("--domain", chain_domain, "domain JSON file")->required();
  chain->add_option("--x", chain_x, "start point \"x,y\"")->required();
  chain->add_option("--y", chain_y, "pole point \"x,y\"")->required();
  auto* chain_out = chain->add_option("--out", out_flag, "output directory");

  // green
  auto* green = app.add_subcommand(
      "green", "Compute averaged columns at a pole and sample them");
  std::string green_domain, green_pole, green_coeff = "identity";
  double green_eps = 0.0, green_h = 0.05, green_ratio = 6.0;
  green->add_option("--domain", green_domain, "domain JSON file")->required();
  green->add_option("--pole", green_pole, "pole \"x,y\"")->required();
  green->add_option("--eps", green_eps, "averaging radius")->required();
  green->add_option("--coeff", green_coeff,
                    "identity | checkerboard | rotated");
  green->add_option("--mesh-h", green_h, "mesh size away from the pole");
  green->add_option("--grade-ratio", green_ratio, "pole grading ratio");
  auto* green_out = green->add_option("--out", out_flag, "output directory");

  // verify
  auto* verify = app.add_subcommand(
      "verify", "Run verification suites from a plan config");
  std::string verify_config, verify_suite = "all";
  std::vector<std::string> verify_sets;
  verify->add_option("--config", verify_config, "plan JSON file")->required();
  verify->add_option("--suite", verify_suite,
                     "m1 | symmetry | chain | representation | appendix | all");
  verify->add_option("--set", verify_sets,
                     "dotted-key config override key.path=value");
  auto* verify_out = verify->add_option("--out", out_flag, "output directory");
  auto* verify_threads =
      verify->add_option("--threads", threads_flag, "worker threads (0 = auto)");
  auto* verify_seed = verify->add_option("--seed", seed_flag, "sampling seed");

  // report
  auto* report = app.add_subcommand(
      "report", "Merge suite reports into one summary");
  std::string report_in;
  report->add_option("--in", report_in, "directory of *_report.json")
      ->required();
  auto* report_out = report->add_option("--out", out_flag, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (certify->parsed())
      return cmd_certify(cert_domain, cert_route, cert_gamma, cert_L, cert_R0,
                         resolve_out(cert_out, out_flag, "out"));
    if (chain->parsed())
      return cmd_chain(chain_domain, chain_x, chain_y,
                       resolve_out(chain_out, out_flag, "out"));
    if (green->parsed())
      return cmd_green(green_domain, green_pole, green_eps, green_coeff,
                       green_h, green_ratio,
                       resolve_out(green_out, out_flag, "out"));
    if (verify->parsed())
      return cmd_verify(verify_config, verify_suite, verify_sets, verify_out,
                        out_flag, verify_threads, threads_flag, verify_seed,
                        seed_flag);
    if (report->parsed())
      return cmd_report(report_in, report_out, out_flag);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == Error::Kind::precondition ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
