#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "slgp/io.hpp"
#include "slgp/reference_fields.hpp"

using namespace slgp;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "slgp_io_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << content;
  return p;
}

}  // namespace

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, 0.1, 1.0 / 3.0, 1e-300, 0.8348745913688966, -2.5e10}) {
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("observation CSV round trip and validation") {
  Dataset d;
  d.add(0.1, 1.0 / 3.0);
  d.add(0.0, 1.0);
  d.add(0.123456789012345, 0.5);
  std::ostringstream out;
  io::write_observations(out, d);
  const auto back = io::read_observations(write_temp("obs.csv", out.str()));
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].x == d[i].x);
    CHECK(back[i].t == d[i].t);
  }

  CHECK(io::read_observations(write_temp("spaces.csv", "x, t\n0.2 , 0.4\n\n0.3,0.1\n")).size() == 2);
  CHECK_THROWS_AS(io::read_observations(write_temp("empty.csv", "")), io::ValidationError);
  CHECK_THROWS_AS(io::read_observations(write_temp("header_only.csv", "x,t\n")), io::ValidationError);
  CHECK_THROWS_AS(io::read_observations(write_temp("bad_header.csv", "a,b\n0.1,0.2\n")), io::ParseError);

  try {
    io::read_observations(write_temp("garbage.csv", "x,t\n0.1,0.2\n0.3,abc\n"));
    FAIL("expected a parse error");
  } catch (const io::ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  try {
    io::read_observations(write_temp("short.csv", "x,t\n0.1\n"));
    FAIL("expected a parse error");
  } catch (const io::ParseError& e) {
    CHECK(e.line() == 2);
  }
  try {
    io::read_observations(write_temp("range.csv", "x,t\n0.1,0.2\n1.5,0.2\n0.3,-0.1\n"));
    FAIL("expected a validation error");
  } catch (const io::ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2 observation(s)") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
  }
}

TEST_CASE("field and ensemble CSV round trips") {
  const GridPtr g = std::make_shared<const QuadratureGrid>(QuadratureGrid::regular(101));
  const std::vector<double> xs{0.0, 0.25, 0.5, 1.0};
  const auto field = reference_field_grid(ReferenceField{}, xs, g);
  std::ostringstream out;
  io::write_field(out, xs, field);
  CHECK(out.str().rfind("x,t,density\n", 0) == 0);
  const auto back = io::read_field(write_temp("field.csv", out.str()));
  CHECK(back.x_grid == xs);
  REQUIRE(back.slices.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back.slices[i].values == field[i].values);
    CHECK(back.slices[i].grid->same_nodes(*g, 0.0));
  }

  PosteriorEnsemble e;
  Rng rng(1);
  e.draws.resize(6, 3);
  for (int j = 0; j < 3; ++j) e.draws.col(j) = standard_normal(6, rng);
  std::ostringstream eo;
  io::write_ensemble(eo, e);
  CHECK(eo.str().rfind("eps_1,eps_2,eps_3,eps_4,eps_5,eps_6\n", 0) == 0);
  CHECK(io::read_ensemble(write_temp("ens.csv", eo.str())).draws == e.draws);
  CHECK_THROWS_AS(io::read_ensemble(write_temp("ens_empty.csv", "eps_1\n")), io::ValidationError);

  std::ostringstream co;
  const std::vector<double> v{0.5, 0.25};
  io::write_curve(co, std::span<const double>(xs).first(2), v);
  CHECK(co.str() == "x,value\n0,0.5\n0.25,0.25\n");
}
