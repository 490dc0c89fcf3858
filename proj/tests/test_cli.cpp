#include <gtest/gtest.h>
#include <sys/wait.h>

#include <gmpxx.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

using nlohmann::json;

namespace {

struct CliRun {
  std::string out;
  int status = -1;
};

CliRun run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(PADIC_CELLS_BIN) + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.out += buf.data();
  const int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string sample(const std::string& name) { return std::string(SAMPLES_DIR) + "/" + name; }

std::string temp_problem(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("padic_cells_test_" + name + ".json");
  std::ofstream(path) << body;
  return path.string();
}

std::string one_var_problem(long p, const std::string& integrand) {
  return R"({"version": 1, "p": )" + std::to_string(p) +
         R"(, "variables": {"params": 0, "integrate": 1}, "integrand": ")" + integrand + R"(", "cells": "auto"})";
}

}  // namespace

TEST(CliDecompose, TwoRoots) {
  const CliRun r = run("decompose --f 'x0^2 - 1' --p 3");
  ASSERT_EQ(r.status, 0) << r.out;
  const json j = json::parse(r.out);
  EXPECT_GE(j["cells"].size(), 4u);
  EXPECT_TRUE(j["verify"]["pass"].get<bool>());
}

TEST(CliDecompose, Constant) {
  const CliRun r = run("decompose --f 5 --p 3");
  ASSERT_EQ(r.status, 0) << r.out;
  const json j = json::parse(r.out);
  ASSERT_EQ(j["terms"].size(), 1u);
  EXPECT_EQ(j["terms"][0]["a"], 0);
  EXPECT_EQ(j["terms"][0]["delta"], "5");
}

TEST(CliDecompose, ZeroPolynomial) {
  const CliRun r = run("decompose --f 0 --p 3");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("f identically zero"), std::string::npos);
}

TEST(CliDecompose, PrecisionExhausted) {
  const CliRun r = run("decompose --f 'x0^2 - 1' --p 3 --precision 0");
  EXPECT_EQ(r.status, 2) << r.out;
}

TEST(CliDecompose, IrrationalRootsSerialize) {
  const CliRun r = run("decompose --f 'x0^2 + 1' --p 5");
  ASSERT_EQ(r.status, 0) << r.out;
  const json j = json::parse(r.out);
  bool saw_root = false;
  for (const auto& c : j["cells"])
    if (c["conditions"][0]["gamma"].is_object()) saw_root = true;
  EXPECT_TRUE(saw_root);
  EXPECT_TRUE(j["verify"]["pass"].get<bool>());
}

TEST(CliIntegrate, AbsT) {
  const CliRun r = run("integrate " + sample("abs_t.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(json::parse(r.out)["results"][0]["value"], "3/4");
  const CliRun v = run("verify " + sample("abs_t.json"));
  ASSERT_EQ(v.status, 0) << v.out;
  EXPECT_TRUE(json::parse(v.out)["pass"].get<bool>());
  EXPECT_EQ(json::parse(v.out)["symbolic"], "3/4");
}

TEST(CliIntegrate, Nonintegrable) {
  const CliRun r = run("integrate " + sample("abs_inverse.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["results"][0]["value"], "0");
  EXPECT_TRUE(j["results"][0]["nonintegrable"].get<bool>());
}

TEST(CliIntegrate, TwoVariableProductMatchesFactors) {
  const CliRun both = run("integrate " + sample("product_2d.json"));
  ASSERT_EQ(both.status, 0) << both.out;
  const CliRun u = run("integrate " + temp_problem("u", one_var_problem(5, "abs(x0)")));
  const CliRun w = run("integrate " + temp_problem("w", one_var_problem(5, "abs(x0^2 - 1)")));
  ASSERT_EQ(u.status, 0);
  ASSERT_EQ(w.status, 0);
  const mpq_class a(json::parse(u.out)["results"][0]["value"].get<std::string>());
  const mpq_class b(json::parse(w.out)["results"][0]["value"].get<std::string>());
  const mpq_class ab(json::parse(both.out)["results"][0]["value"].get<std::string>());
  EXPECT_EQ(ab, a * b);
}

TEST(CliIntegrate, SymbolicParametrizedCell) {
  const CliRun r = run("integrate " + sample("annulus_squares.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["results"][0]["value"], "1/3");
  EXPECT_EQ(j["results"][2]["value"], "82/243");
  EXPECT_EQ(j["results"][3]["value"], "0");
  const CliRun c = run("integrate " + sample("annulus_squares.json") + " --mode concrete --point 27");
  ASSERT_EQ(c.status, 0) << c.out;
  EXPECT_EQ(json::parse(c.out)["results"][0]["value"], "82/243");
  const CliRun v = run("verify " + sample("annulus_squares.json") + " --point 27 --N 6");
  EXPECT_EQ(v.status, 0) << v.out;
}

TEST(CliIntegrate, OutputIsByteIdentical) {
  const CliRun a = run("integrate " + sample("annulus_squares.json"));
  const CliRun b = run("integrate " + sample("annulus_squares.json"));
  EXPECT_EQ(a.out, b.out);
  const CliRun c = run("verify " + sample("abs_t.json"));
  const CliRun d = run("verify " + sample("abs_t.json"));
  EXPECT_EQ(c.out, d.out);
}

TEST(CliIntegrate, PrettyAndCompactAgree) {
  const CliRun a = run("integrate " + sample("abs_t.json"));
  const CliRun b = run("integrate " + sample("abs_t.json") + " --pretty");
  EXPECT_NE(a.out, b.out);
  EXPECT_EQ(json::parse(a.out), json::parse(b.out));
}

TEST(CliIntegrate, PrimeFlagOverridesFile) {
  const CliRun r = run("integrate " + sample("abs_t.json") + " --p 5");
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(json::parse(r.out)["results"][0]["value"], "5/6");
}

TEST(CliIntegrate, SchemaErrors) {
  EXPECT_EQ(run("integrate " + temp_problem("bad_version", R"({"version": 2, "p": 3})")).status, 1);
  EXPECT_EQ(run("integrate " + temp_problem("bad_json", "{")).status, 1);
  EXPECT_EQ(run("integrate /nonexistent/problem.json").status, 1);
  EXPECT_EQ(run("integrate " + temp_problem("bad_integrand", one_var_problem(3, "abs(x0 +)"))).status, 1);
}

TEST(CliVerify, MissingBoundFails) {
  const std::string path = temp_problem("val", one_var_problem(3, "v(x0)"));
  const CliRun r = run("verify " + path);
  EXPECT_EQ(r.status, 3) << r.out;
  EXPECT_TRUE(json::parse(r.out)["bound"].is_null());
  const CliRun s = run("verify " + path + " --sup 10");
  EXPECT_EQ(s.status, 0) << s.out;
}

TEST(CliVerify, BudgetPrecedence) {
  const CliRun env = run("verify " + sample("abs_t.json"), "PADIC_CELLS_BUDGET=10");
  EXPECT_EQ(env.status, 3);
  EXPECT_TRUE(json::parse(env.out)["sampled"].get<bool>());
  const CliRun flag = run("verify " + sample("abs_t.json") + " --budget 100000", "PADIC_CELLS_BUDGET=10");
  EXPECT_EQ(flag.status, 0) << flag.out;
  EXPECT_FALSE(json::parse(flag.out)["sampled"].get<bool>());
}

TEST(CliZeta, Examples) {
  const CliRun t = run("zeta x0 --p 3");
  ASSERT_EQ(t.status, 0) << t.out;
  const json z = json::parse(t.out)["zeta"];
  EXPECT_EQ(z["numerator"], json::array({"2/3"}));
  EXPECT_EQ(z["denominator_factors"], json::parse(R"([{"c": 1, "d": 1}])"));
  EXPECT_EQ(json::parse(run("zeta 1 --p 3").out)["zeta"]["text"], "1");
  const CliRun sq = run("zeta 'x0^2' --p 3 --check-poincare 3");
  ASSERT_EQ(sq.status, 0) << sq.out;
  const json pc = json::parse(sq.out)["poincare"];
  EXPECT_TRUE(pc["pass"].get<bool>());
  EXPECT_EQ(pc["counted"][1], "1");
  EXPECT_EQ(pc["counted"][2], "3");
}

TEST(CliMeasure, Squares) {
  const CliRun r = run("measure " + sample("squares_measure.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(json::parse(r.out)["measure"], "3/8");
}

TEST(CliParse, Errors) {
  const CliRun ok = run("parse 'x0^2 - 3'");
  EXPECT_EQ(ok.status, 0) << ok.out;
  const CliRun bad = run("parse 'x0 + * 2'");
  EXPECT_EQ(bad.status, 1);
  const json j = json::parse(bad.out);
  EXPECT_EQ(j["span"], json::array({5, 6}));
  EXPECT_EQ(run("parse 'v(x0)*abs(x1)' --constructible").status, 0);
}

TEST(CliUsage, UnknownFlagsExitOne) {
  EXPECT_EQ(run("--bogus").status, 1);
  EXPECT_EQ(run("integrate").status, 1);
}
