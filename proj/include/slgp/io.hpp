#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "slgp/functionals.hpp"
#include "slgp/mcmc.hpp"
#include "slgp/model.hpp"

namespace slgp::io {

/// Malformed input file; the message carries the offending line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input whose values violate the data contract.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// CSV with header `x,t`. Rejects rows outside [0, 1] with a ValidationError
/// that lists every offender, and empty files.
Dataset read_observations(const std::filesystem::path& path);
void write_observations(std::ostream& out, const Dataset& data);

/// Long format `x,t,density`, one row per grid cell, x-major.
void write_field(std::ostream& out, std::span<const double> x_grid,
                 std::span<const DensityGrid> field);

struct FieldTable {
  std::vector<double> x_grid;
  std::vector<DensityGrid> slices;
};

FieldTable read_field(const std::filesystem::path& path);

/// One row per draw, header eps_1..eps_p.
void write_ensemble(std::ostream& out, const PosteriorEnsemble& ensemble);
PosteriorEnsemble read_ensemble(const std::filesystem::path& path);

/// Header `x,value`.
void write_curve(std::ostream& out, std::span<const double> x_grid,
                 std::span<const double> values);

}  // namespace slgp::io
