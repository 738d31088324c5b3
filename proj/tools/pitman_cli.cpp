// pitman: exact and asymptotic moments of the Pitman partition length.
//
// Exit codes: 0 success, 1 input or usage error, 2 numerical failure
// (precision exhausted, or the verification grid failed).

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pitman/pitman.hpp"

using namespace pitman;

namespace {

struct Common {
  std::uint64_t n = 0;
  std::string alpha = "1/2";
  std::string theta = "1";
  std::uint64_t r = 1;
  bool exact = false;
  std::string format;
};

void add_params(CLI::App* cmd, Common& c, bool with_n = true) {
  if (with_n) cmd->add_option("--n", c.n, "number of elements")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", c.alpha, "alpha in (0,1), as p/q or decimal")->capture_default_str();
  cmd->add_option("--theta", c.theta, "theta > -alpha, as p/q or decimal")->capture_default_str();
}

void add_format(CLI::App* cmd, Common& c, const std::string& def, std::vector<std::string> choices) {
  c.format = def;
  cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember(choices))->capture_default_str();
}

std::vector<double> read_x_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<double> xs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::string cell = line.substr(0, line.find(','));
    try {
      std::size_t used = 0;
      double x = std::stod(cell, &used);
      xs.push_back(x);
    } catch (const std::logic_error&) {
      if (xs.empty()) continue;  // header line
      throw InputError("bad x value '" + cell + "' in " + path);
    }
  }
  return xs;
}

int cmd_pmf(const Common& c) {
  Rational a = parse_rational(c.alpha), t = parse_rational(c.theta);
  std::vector<std::string> values;
  if (c.exact) {
    for (const Rational& p : length_pmf(make_exact_params(c.n, a, t))) values.push_back(to_string(p));
  } else {
    for (const Real& p : length_pmf(make_float_params(c.n, Real(a), Real(t)))) values.push_back(p.to_string(17));
  }
  if (c.format == "json") {
    Json j;
    j["n"] = c.n;
    j["alpha"] = to_string(a);
    j["theta"] = to_string(t);
    Json pmf = Json::array();
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (c.exact) {
        pmf.push_back(values[k]);
      } else {
        pmf.push_back(std::stod(values[k]));
      }
    }
    j["pmf"] = pmf;
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "k,p\n";
    for (std::size_t k = 0; k < values.size(); ++k) std::cout << k + 1 << ',' << values[k] << '\n';
  }
  return 0;
}

int cmd_moments(const Common& c) {
  Rational a = parse_rational(c.alpha), t = parse_rational(c.theta);
  std::string value;
  if (c.exact) {
    value = to_string(exact_moment(make_exact_params(c.n, a, t), c.r));
  } else {
    value = exact_moment(make_float_params(c.n, Real(a), Real(t)), c.r).to_string(17);
  }
  if (c.format == "json") {
    Json j;
    j["n"] = c.n;
    j["alpha"] = to_string(a);
    j["theta"] = to_string(t);
    Json m;
    if (c.exact) {
      m[std::to_string(c.r)] = value;
    } else {
      m[std::to_string(c.r)] = std::stod(value);
    }
    j["moments"] = m;
    std::cout << j.dump(2) << '\n';
  } else if (c.format == "csv") {
    std::cout << "r,moment\n" << c.r << ',' << value << '\n';
  } else {
    std::cout << value << '\n';
  }
  return 0;
}

struct DiversityOpts {
  std::vector<double> x;
  std::string x_csv;
  double tol = 1e-30;
  std::uint64_t max_terms = 10000;
  double r = 0.0;
};

int cmd_diversity(const Common& c, const DiversityOpts& d) {
  double a = parse_rational(c.alpha).get_d();
  double t = parse_rational(c.theta).get_d();
  require(a > 0.0 && a < 1.0, "alpha must lie in (0, 1)");
  require(t > -a, "theta must exceed -alpha");
  if (d.r > 0.0) {
    double quad = diversity_moment_quadrature(a, t, d.r);
    Json j;
    j["alpha"] = c.alpha;
    j["theta"] = c.theta;
    j["r"] = d.r;
    j["quadrature"] = quad;
    if (d.r == std::floor(d.r)) {
      j["closed_form"] = diversity_moment(Real(parse_rational(c.alpha)), Real(parse_rational(c.theta)),
                                          static_cast<std::uint64_t>(d.r))
                             .to_double();
    }
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::vector<double> xs = d.x;
  if (!d.x_csv.empty()) {
    std::vector<double> more = read_x_csv(d.x_csv);
    xs.insert(xs.end(), more.begin(), more.end());
  }
  require(!xs.empty(), "give --x values or --x-csv");
  GalphaSeries series(a, d.max_terms);
  Real t_real(t);
  Real lambda = t_real / Real(a);
  Real prefactor = exp(lgamma(t_real + Real(1)) - lgamma(lambda + Real(1)));
  std::vector<std::string> values;
  for (double x : xs) {
    require(x > 0.0, "density is evaluated at x > 0");
    values.push_back((prefactor * pow(Real(x), lambda) * series(x, d.tol)).to_string(17));
  }
  if (c.format == "json") {
    Json j;
    j["alpha"] = c.alpha;
    j["theta"] = c.theta;
    Json rows = Json::array();
    for (std::size_t k = 0; k < xs.size(); ++k) rows.push_back({{"x", xs[k]}, {"density", std::stod(values[k])}});
    j["density"] = rows;
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "x,density\n";
    for (std::size_t k = 0; k < xs.size(); ++k) std::cout << Real(xs[k]).to_string(17) << ',' << values[k] << '\n';
  }
  return 0;
}

int cmd_approx(const Common& c, const std::string& scaling) {
  Rational a = parse_rational(c.alpha), t = parse_rational(c.theta);
  FloatParams p = make_float_params(c.n, Real(a), Real(t));
  std::optional<Rational> exact;
  if (c.n <= CNumberTable<Rational>::kExactCap) exact = exact_moment(make_exact_params(c.n, a, t), c.r);
  MomentReport report = make_moment_report(p, c.r, parse_scaling(scaling), exact);
  for (const std::string& w : joint_regime_warnings(p)) {
    if (report.scaling == "kle" || report.scaling == "mthA") std::cerr << "warning: " << w << '\n';
  }
  if (c.format == "json") {
    Json j;
    j["n"] = c.n;
    j["alpha"] = to_string(a);
    j["theta"] = to_string(t);
    j["r"] = c.r;
    if (report.exact_rational) j["exact_rational"] = to_string(*report.exact_rational);
    j["exact"] = report.exact.to_string(17);
    j["scaling"] = report.scaling;
    j["scale"] = report.scale.to_string(17);
    j["normalized"] = report.normalized.to_string(17);
    Json approx = Json::object();
    for (std::size_t k = 0; k < report.approximations.size(); ++k) {
      approx[report.approximations[k].label] = {{"value", report.approximations[k].value.to_string(17)},
                                                {"residual", report.residuals[k].value.to_string(17)}};
    }
    j["approximations"] = approx;
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "label,value,residual\n";
    std::cout << "normalized," << report.normalized.to_string(17) << ",0\n";
    for (std::size_t k = 0; k < report.approximations.size(); ++k) {
      std::cout << report.approximations[k].label << ',' << report.approximations[k].value.to_string(17) << ','
                << report.residuals[k].value.to_string(17) << '\n';
    }
  }
  return 0;
}

struct SampleOpts {
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  std::uint64_t streams = 1;
  std::uint64_t replicates = 1000;
};

int cmd_sample(const Common& c, const SampleOpts& s) {
  Rational a = parse_rational(c.alpha), t = parse_rational(c.theta);
  SamplerParams p = SamplerParams::from(make_exact_params(c.n, a, t));
  if (c.format == "csv") {
    require(s.streams == 1, "csv output lists one stream; use --format json with --streams");
    Engine engine = make_engine({s.seed, s.stream});
    std::cout << "replicate,K\n";
    for (std::uint64_t j = 0; j < s.replicates; ++j) std::cout << j << ',' << sample_k(p, engine) << '\n';
    return 0;
  }
  SeedSpec seed{s.seed, s.stream};
  auto power = [r = c.r](std::uint64_t k) { return std::pow(static_cast<double>(k), static_cast<double>(r)); };
  SampleStats stats = s.streams == 1 ? mc_statistic(p, s.replicates, seed, power)
                                     : mc_statistic_parallel(p, s.replicates, seed, s.streams, power);
  Json j;
  j["n"] = c.n;
  j["alpha"] = to_string(a);
  j["theta"] = to_string(t);
  j["r"] = c.r;
  j["seed"] = s.seed;
  j["stream"] = s.stream;
  j["streams"] = s.streams;
  j["replicates"] = stats.count;
  j["mean"] = stats.mean;
  j["variance"] = stats.variance();
  j["standard_error"] = stats.standard_error();
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct StudyOpts {
  std::string name;
  std::string config;
  std::string alpha, theta, grid, r_values, output;
  double beta = -1.0;
  bool cr = false;
  long seed = -1, replicates = -1, streams = -1, tail = -1;
};

int cmd_study(const StudyOpts& o, long bits) {
  StudyConfig cfg;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw InputError("cannot open config '" + o.config + "'");
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    cfg = config_from_json(j);
  }
  if (!o.name.empty()) cfg.study = parse_study(o.name);
  if (o.config.empty() && o.name.empty()) throw InputError("study needs --name or --config");
  if (!o.alpha.empty()) cfg.alpha = parse_rational(o.alpha);
  if (!o.theta.empty()) cfg.theta = parse_rational(o.theta);
  if (!o.grid.empty()) cfg.n_grid = parse_grid(o.grid);
  if (!o.r_values.empty()) {
    cfg.r_values.clear();
    std::stringstream ss(o.r_values);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        cfg.r_values.push_back(std::stoull(item));
      } catch (const std::logic_error&) {
        throw InputError("bad moment order '" + item + "'");
      }
    }
  }
  if (o.beta >= 0.0) cfg.beta = o.beta;
  if (o.cr) cfg.cr = true;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.replicates >= 0) cfg.replicates = static_cast<std::uint64_t>(o.replicates);
  if (o.streams >= 0) cfg.streams = static_cast<std::uint64_t>(o.streams);
  if (o.tail >= 0) cfg.tail = static_cast<std::size_t>(o.tail);
  if (bits > 0) cfg.precision_bits = bits;
  if (!o.output.empty()) {
    cfg.output_path = o.output;
  } else if (cfg.output_path.empty()) {
    cfg.output_path = to_string(cfg.study);
  }
  StudyResult result = run_study(cfg);
  std::cout << result_to_json(cfg, result).dump(2) << '\n';
  std::cerr << "wrote " << cfg.output_path << ".csv and " << cfg.output_path << ".json\n";
  return 0;
}

int cmd_verify(const std::string& format) {
  StudyResult result = run_verify();
  if (format == "json") {
    Json j = Json::object();
    for (const Check& c : result.checks) j[c.name] = {{"pass", c.pass}, {"detail", c.detail}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "check,pass,detail\n";
    for (const Check& c : result.checks) std::cout << c.name << ',' << (c.pass ? "true" : "false") << ',' << c.detail << '\n';
  }
  return result.all_pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and asymptotic moments of the length of a Pitman partition"};
  app.require_subcommand(1);
  long bits = 0;
  app.add_option("--bits", bits, "working precision in bits (default 128 or PITMAN_PRECISION_BITS)");

  Common pmf_c, mom_c, div_c, apx_c, smp_c;
  Common ver_c;

  CLI::App* pmf = app.add_subcommand("pmf", "pmf of K");
  add_params(pmf, pmf_c);
  pmf->add_flag("--exact", pmf_c.exact, "rational arithmetic (n <= 200)");
  add_format(pmf, pmf_c, "csv", {"csv", "json"});

  CLI::App* moments = app.add_subcommand("moments", "E[K^r]");
  add_params(moments, mom_c);
  moments->add_option("--r", mom_c.r, "moment order")->check(CLI::PositiveNumber);
  moments->add_flag("--exact", mom_c.exact, "rational arithmetic (n <= 200)");
  add_format(moments, mom_c, "text", {"text", "csv", "json"});

  DiversityOpts div_o;
  CLI::App* diversity = app.add_subcommand("diversity", "density or moments of the alpha-diversity");
  add_params(diversity, div_c, false);
  diversity->add_option("--x", div_o.x, "evaluation points");
  diversity->add_option("--x-csv", div_o.x_csv, "one-column CSV of evaluation points");
  diversity->add_option("--tol", div_o.tol, "series tolerance")->capture_default_str();
  diversity->add_option("--max-terms", div_o.max_terms, "series term cap")->capture_default_str();
  diversity->add_option("--r", div_o.r, "print E[S^r] (closed form and quadrature) instead of the density");
  add_format(diversity, div_c, "csv", {"csv", "json"});

  std::string scaling = "n_alpha";
  CLI::App* approx = app.add_subcommand("approx", "normalized moment with its asymptotic approximations");
  add_params(approx, apx_c);
  approx->add_option("--r", apx_c.r, "moment order")->check(CLI::PositiveNumber);
  approx->add_option("--scaling", scaling, "n_alpha | corrected | kle | mthA | ewens_ref")->capture_default_str();
  add_format(approx, apx_c, "csv", {"csv", "json"});

  SampleOpts smp_o;
  CLI::App* sample = app.add_subcommand("sample", "Monte Carlo draws of K");
  add_params(sample, smp_c);
  sample->add_option("--r", smp_c.r, "moment order for the summary")->check(CLI::PositiveNumber);
  sample->add_option("--seed", smp_o.seed, "root seed")->capture_default_str();
  sample->add_option("--stream", smp_o.stream, "first stream index")->capture_default_str();
  sample->add_option("--streams", smp_o.streams, "number of streams")->check(CLI::PositiveNumber);
  sample->add_option("--replicates", smp_o.replicates, "number of draws")->capture_default_str();
  add_format(sample, smp_c, "json", {"csv", "json"});

  StudyOpts st;
  CLI::App* study = app.add_subcommand("study", "convergence study; writes <output>.csv and <output>.json");
  study->add_option("--name", st.name, "thm31 | corrected | kle | mthA | corollary34 | z_moments | lemma_expansions | verify");
  study->add_option("--config", st.config, "JSON config file");
  study->add_option("--alpha", st.alpha, "alpha");
  study->add_option("--theta", st.theta, "theta (fixed-theta studies)");
  study->add_option("--r", st.r_values, "moment orders, comma separated");
  study->add_option("--grid", st.grid, "n grid, e.g. 2^8..2^16");
  study->add_option("--beta", st.beta, "joint path theta = n^beta");
  study->add_flag("--cr", st.cr, "require the strengthened joint regime");
  study->add_option("--seed", st.seed, "root seed");
  study->add_option("--replicates", st.replicates, "Monte Carlo replicates per point");
  study->add_option("--streams", st.streams, "streams per point");
  study->add_option("--tail", st.tail, "points used for slope fits");
  study->add_option("--output", st.output, "output prefix (default: the study name)");

  CLI::App* verify = app.add_subcommand("verify", "exact-vs-enumeration verification grid");
  add_format(verify, ver_c, "csv", {"csv", "json"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (bits != 0) require(bits >= kMinPrecisionBits, "--bits must be at least 53");
    PrecisionScope scope(bits > 0 ? bits : default_precision_bits());
    if (*pmf) return cmd_pmf(pmf_c);
    if (*moments) return cmd_moments(mom_c);
    if (*diversity) return cmd_diversity(div_c, div_o);
    if (*approx) return cmd_approx(apx_c, scaling);
    if (*sample) return cmd_sample(smp_c, smp_o);
    if (*study) return cmd_study(st, bits);
    if (*verify) return cmd_verify(ver_c.format);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 1;
  } catch (const PrecisionError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
