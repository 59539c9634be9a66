#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <string>

#include "relerr/io/csv.hpp"
#include "relerr/io/report.hpp"
#include "support/fixtures.hpp"

using namespace relerr;

namespace {

std::filesystem::path write_file(const testutil::TempDir& dir, const std::string& name,
                                 const std::string& content) {
  const auto p = dir.file(name);
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

}  // namespace

TEST_CASE("csv reader parses headers, rows and numbers", "[io]") {
  testutil::TempDir dir;
  const auto p = write_file(dir, "plain.csv", "a,b\n1,2\n3,4.5\n");
  const CsvTable t = read_csv(p);
  REQUIRE(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.column_index("b") == 1);
  CHECK(t.has_column("a"));
  CHECK(!t.has_column("c"));
  CHECK(t.numeric_column("b") == std::vector<double>{2.0, 4.5});
  CHECK(t.numeric_cell(1, 0) == 3.0);
}

TEST_CASE("csv reader handles quoting, crlf and blank lines", "[io]") {
  testutil::TempDir dir;
  const auto p = write_file(dir, "quoted.csv",
                            "name,v\r\n\"x,1\",3\r\n\"he said \"\"hi\"\"\",4\n\n\"plain\",5\n");
  const CsvTable t = read_csv(p);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0][0] == "x,1");
  CHECK(t.rows[1][0] == "he said \"hi\"");
  CHECK(t.rows[2][0] == "plain");
  CHECK(t.numeric_column("v") == std::vector<double>{3.0, 4.0, 5.0});
}

TEST_CASE("csv reader reports malformed input precisely", "[io]") {
  testutil::TempDir dir;
  CHECK_THROWS_AS(read_csv(dir.file("absent.csv")), FileError);
  CHECK_THROWS_AS(read_csv(write_file(dir, "empty.csv", "")), DataError);
  CHECK_THROWS_WITH(read_csv(write_file(dir, "ragged.csv", "a,b\n1,2\n3\n")),
                    Catch::Matchers::ContainsSubstring("line 3"));
  CHECK_THROWS_WITH(read_csv(write_file(dir, "quote.csv", "a\n\"oops\n")),
                    Catch::Matchers::ContainsSubstring("unterminated quote"));

  const CsvTable t = read_csv(write_file(dir, "cells.csv", "a,b\n1,x\n2,inf\n3,\n4,5e\n"));
  CHECK_THROWS_AS(t.column_index("missing"), SchemaError);
  CHECK_THROWS_WITH(t.numeric_cell(0, 1), Catch::Matchers::ContainsSubstring("row 1"));
  CHECK_THROWS_WITH(t.numeric_cell(0, 1), Catch::Matchers::ContainsSubstring("column 'b'"));
  CHECK_THROWS_AS(t.numeric_cell(1, 1), DataError);
  CHECK_THROWS_AS(t.numeric_cell(2, 1), DataError);
  CHECK_THROWS_AS(t.numeric_cell(3, 1), DataError);
  CHECK(t.numeric_cell(3, 0) == 4.0);
}

TEST_CASE("atomic write leaves no temp file and replaces content", "[io]") {
  testutil::TempDir dir;
  const auto p = dir.file("out.txt");
  atomic_write(p, "first\n");
  atomic_write(p, "second\n");
  std::ifstream in(p);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == "second\n");
  CHECK(!std::filesystem::exists(dir.file("out.txt.tmp")));
}

TEST_CASE("fit report survives the json round trip bit for bit", "[io]") {
  FitReport r;
  r.loss = "lpre";
  r.gamma = 0.1;
  r.objective = -1.0 / 3.0;
  r.iterations = 17;
  r.converged = true;
  r.j_condition_number = 1.23456789012345e8;
  r.ci_level = 0.95;
  r.response = "load";
  r.intercept = true;
  r.coefficients.push_back({"(intercept)", 12345.678901234567, 1e-300, -0.1, 0.1});
  r.coefficients.push_back({"x1", -2.0000000000000004, 0.25, -2.5, -1.5});

  testutil::TempDir dir;
  const auto p = dir.file("model.json");
  r.save(p);
  const FitReport back = FitReport::load(p);
  CHECK(back.loss == r.loss);
  CHECK(back.gamma == r.gamma);
  CHECK(back.objective == r.objective);
  CHECK(back.iterations == r.iterations);
  CHECK(back.converged == r.converged);
  CHECK(back.j_condition_number == r.j_condition_number);
  CHECK(back.ci_level == r.ci_level);
  CHECK(back.response == r.response);
  CHECK(back.intercept == r.intercept);
  REQUIRE(back.coefficients.size() == 2);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(back.coefficients[j].name == r.coefficients[j].name);
    CHECK(back.coefficients[j].estimate == r.coefficients[j].estimate);
    CHECK(back.coefficients[j].std_error == r.coefficients[j].std_error);
    CHECK(back.coefficients[j].ci_low == r.coefficients[j].ci_low);
    CHECK(back.coefficients[j].ci_high == r.coefficients[j].ci_high);
  }
}

TEST_CASE("fit report rejects malformed model files", "[io]") {
  testutil::TempDir dir;
  CHECK_THROWS_AS(FitReport::load(dir.file("absent.json")), FileError);
  CHECK_THROWS_AS(FitReport::load(write_file(dir, "bad.json", "not json")), SchemaError);
  CHECK_THROWS_AS(FitReport::load(write_file(dir, "partial.json", "{\"loss\":\"lpre\"}")),
                  SchemaError);
}
