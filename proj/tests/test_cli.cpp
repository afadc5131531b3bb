#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hte/cli.hpp"
#include "hte/csv.hpp"
#include "hte/mdrd.hpp"
#include "hte/random.hpp"

using namespace hte;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hte_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Gaussian outcome on x1 only; x2 and x3 are noise. pi in [0.2, 1].
fs::path write_regression_csv(const fs::path& dir, Index n, std::uint64_t seed, bool uniform_pi = false) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.2, 1.0);
  const fs::path path = dir / "data.csv";
  std::ofstream f(path);
  f << "y,x1,x2,x3,pi,b\n";
  for (Index i = 0; i < n; ++i) {
    const double x1 = z(rng), x2 = z(rng), x3 = z(rng);
    const double y = 1.0 + 0.5 * x1 + z(rng);
    const double pi = uniform_pi ? 0.5 : u(rng);
    f << format_number(y) << ',' << format_number(x1) << ',' << format_number(x2) << ','
      << format_number(x3) << ',' << format_number(pi) << ',' << (x1 + z(rng) > 0 ? 1 : 0) << '\n';
  }
  return path;
}

CsvTable parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("MDRD GFR examples") {
  const MdrdInput ones{1, 1, 1, 1, false, false};
  CHECK(mdrd_gfr(ones) == doctest::Approx(170.0).epsilon(1e-12));
  MdrdInput black = ones;
  black.is_black = true;
  CHECK(mdrd_gfr(black) / mdrd_gfr(ones) == doctest::Approx(1.180).epsilon(1e-12));
  MdrdInput female = ones;
  female.is_female = true;
  CHECK(mdrd_gfr(female) / mdrd_gfr(ones) == doctest::Approx(0.762).epsilon(1e-12));

  const MdrdInput subject{1.0, 60.0, 15.0, 4.0, false, true};
  const double oracle = 170.0 * std::pow(60.0, -0.176) * std::pow(15.0, -0.170) *
                        std::pow(4.0, 0.318) * 0.762;
  CHECK(std::abs(mdrd_gfr(subject) - oracle) < 1e-9);

  MdrdInput shifted = subject;
  shifted.scr = 1.23;
  CHECK(mdrd_gfr(shifted, true) == doctest::Approx(oracle).epsilon(1e-12));
  shifted.scr = 0.2;
  CHECK_THROWS_AS(mdrd_gfr(shifted, true), DomainError);
  CHECK_THROWS_AS(mdrd_gfr({0.0, 60, 15, 4, false, false}), DomainError);
  CHECK(ckd_stage3(59.9));
  CHECK_FALSE(ckd_stage3(60.0));
}

TEST_CASE("gfr command") {
  const Run r = run({"gfr", "--scr", "1", "--age", "1", "--bun", "1", "--salb", "1"});
  CHECK(r.code == 0);
  CHECK(r.out == "gfr 170\nckd_stage3 0\n");
  CHECK(run({"gfr", "--scr", "1", "--age", "1", "--bun", "1"}).code == 2);
  CHECK(run({"gfr", "--scr", "0.1", "--age", "1", "--bun", "1", "--salb", "1", "--recalibrate"}).code == 2);
  CHECK(run({"gfr", "--scr", "1", "--age", "1", "--bun", "1", "--salb", "1", "--black", "2"}).code == 2);

  const fs::path dir = scratch_dir("gfr");
  {
    std::ofstream f(dir / "in.csv");
    f << "id,cr,a,u,alb,sex\n1,1,1,1,1,0\n2,NA,1,1,1,1\n3,1,1,1,1,1\n";
  }
  const Run c = run({"gfr", "--data", (dir / "in.csv").string(), "--scr", "cr", "--age", "a", "--bun", "u",
                     "--salb", "alb", "--female", "sex"});
  CHECK(c.code == 0);
  const CsvTable t = parse_text(c.out);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.header.back() == "ckd_stage3");
  CHECK(t.rows[0][6] == "170");
  CHECK(t.rows[1][6] == "NA");
  CHECK(*parse_number(t.rows[2][6]) == doctest::Approx(170 * 0.762));
  CHECK(run({"gfr", "--data", (dir / "missing.csv").string(), "--scr", "cr", "--age", "a", "--bun", "u",
             "--salb", "alb"}).code == 4);
}

TEST_CASE("argument errors map to exit code 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"nonsense"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"simulate", "--reps", "2"}).code == 2);  // no seed
}

TEST_CASE("fit writes the JSON report") {
  const fs::path dir = scratch_dir("fit");
  const fs::path data = write_regression_csv(dir, 300, 5);
  const Run r = run({"fit", "--data", data.string(), "--outcome", "y", "--covariates", "x1,x2", "--pi", "pi",
                     "--out-json", (dir / "fit.json").string()});
  REQUIRE(r.code == 0);
  const auto j = read_json(dir / "fit.json");
  for (const char* key : {"command", "family", "method", "columns", "n", "p", "pop_size", "rows_dropped",
                          "converged", "theta", "v_diag", "condition_number", "weighted_deviance",
                          "report"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["n"] == 300);
  CHECK(j["p"] == 3);
  CHECK(j["columns"][0] == "(intercept)");
  CHECK(std::abs(j["theta"][1].get<double>() - 0.5) < 0.2);
  const auto& rep = j["report"];
  CHECK(rep["p_hat"].get<double>() == doctest::Approx(300 * rep["trace_jv"].get<double>()));
  CHECK(rep["daic"].get<double>() ==
        doctest::Approx(j["weighted_deviance"].get<double>() / j["pop_size"].get<double>() +
                        2 * rep["trace_jv"].get<double>()));

  CHECK(run({"fit", "--data", data.string(), "--outcome", "y", "--covariates", "x1", "--weights", "nope"}).code == 2);
  CHECK(run({"fit", "--data", data.string(), "--outcome", "y", "--covariates", "x1"}).code == 2);
  CHECK(run({"fit", "--data", data.string(), "--outcome", "y", "--covariates", "x1", "--pi", "pi", "--weights",
             "pi"}).code == 2);
  CHECK(run({"fit", "--data", (dir / "absent.csv").string(), "--outcome", "y", "--covariates", "x1", "--pi",
             "pi"}).code == 4);
  CHECK(run({"fit", "--data", data.string(), "--outcome", "y", "--covariates", "x1", "--pi", "pi", "--family",
             "bernoulli"}).code == 2);
  CHECK(run({"fit", "--data", data.string(), "--outcome", "y", "--covariates", "x1", "--pi", "pi", "--method",
             "hte-bootstrap", "--B", "20"}).code == 2);  // no seed
}

TEST_CASE("dAIC effective parameters grow with nested covariates") {
  const fs::path dir = scratch_dir("nested");
  const fs::path data = write_regression_csv(dir, 400, 6);
  double last = 0.0;
  for (const std::string cov : {"x1", "x1,x2", "x1,x2,x3"}) {
    REQUIRE(run({"fit", "--data", data.string(), "--outcome", "y", "--covariates", cov, "--pi", "pi",
                 "--out-json", (dir / "f.json").string()}).code == 0);
    const double p_hat = read_json(dir / "f.json")["report"]["p_hat"].get<double>();
    CHECK(p_hat > last);
    last = p_hat;
  }
}

TEST_CASE("uniform-design gaussian p-hat is close to p") {
  const fs::path dir = scratch_dir("uniform");
  const fs::path data = write_regression_csv(dir, 2000, 7, true);
  REQUIRE(run({"fit", "--data", data.string(), "--outcome", "y", "--covariates", "x1,x2,x3", "--pi", "pi",
               "--out-json", (dir / "f.json").string()}).code == 0);
  const double p_hat = read_json(dir / "f.json")["report"]["p_hat"].get<double>();
  CHECK(std::abs(p_hat - 4.0) < 0.4);
}

TEST_CASE("fit bootstrap block") {
  const fs::path dir = scratch_dir("boot");
  const fs::path data = write_regression_csv(dir, 200, 8);
  REQUIRE(run({"fit", "--data", data.string(), "--outcome", "y", "--covariates", "x1", "--pi", "pi", "--method",
               "hte-bootstrap", "--B", "100", "--seed", "3", "--intervals", "5", "--out-json",
               (dir / "f.json").string()}).code == 0);
  const auto b = read_json(dir / "f.json")["bootstrap"];
  CHECK(b["B"] == 100);
  CHECK(b["intervals"] == 5);
  CHECK(b["p_hat_q025"].get<double>() <= b["p_hat_median"].get<double>());
  CHECK(b["p_hat_median"].get<double>() <= b["p_hat_q975"].get<double>());
}

TEST_CASE("knn command") {
  const fs::path dir = scratch_dir("knn");
  const fs::path data = write_regression_csv(dir, 150, 9);
  CHECK(run({"knn", "--data", data.string(), "--outcome", "y", "--covariates", "x1", "--pi", "pi", "--seed",
             "1"}).code == 2);
  const std::vector<std::string> args{"knn", "--data", data.string(), "--outcome", "b", "--covariates", "x1,x2",
                                      "--pi", "pi", "--seed", "1", "--B", "30", "--k", "5,15",
                                      "--out-csv", (dir / "k.csv").string()};
  REQUIRE(run(args).code == 0);
  const CsvTable t = parse_text(slurp(dir / "k.csv"));
  REQUIRE(t.rows.size() == 2);
  CHECK(t.header == std::vector<std::string>{"k", "err", "half_omega", "err_hat"});
  CHECK(t.rows[0][0] == "5");
  const std::string first = slurp(dir / "k.csv");
  auto threaded = args;
  threaded.insert(threaded.end(), {"--threads", "3"});
  REQUIRE(run(threaded).code == 0);
  CHECK(slurp(dir / "k.csv") == first);
  CHECK(run({"knn", "--data", data.string(), "--outcome", "b", "--covariates", "x1", "--pi", "pi", "--seed", "1",
             "--k", "151"}).code == 2);
}

TEST_CASE("simulate outputs are byte-identical across runs and thread counts") {
  const fs::path dir = scratch_dir("sim");
  auto sim = [&](const std::string& threads, const std::string& tag) {
    return run({"simulate", "--scenario", "s3", "--pop", "3000", "--n", "100", "--reps", "8", "--seed", "11",
                "--threads", threads, "--out-csv", (dir / (tag + ".csv")).string(), "--out-json",
                (dir / (tag + ".json")).string()});
  };
  REQUIRE(sim("1", "a").code == 0);
  REQUIRE(sim("1", "b").code == 0);
  REQUIRE(sim("4", "c").code == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv") == slurp(dir / "c.csv"));
  CHECK(slurp(dir / "a.json") == slurp(dir / "c.json"));

  // Shortest round-trip formatting keeps every bit of each value.
  const CsvTable t = parse_text(slurp(dir / "a.csv"));
  for (const auto& row : t.rows) {
    for (std::size_t c = 1; c < row.size(); ++c) {
      const double v = *parse_number(row[c]);
      CHECK(format_number(v) == row[c]);
    }
  }
  CHECK(run({"simulate", "--scenario", "s9", "--seed", "1"}).code == 2);
  CHECK(run({"simulate", "--experiment", "other", "--seed", "1"}).code == 2);
}
