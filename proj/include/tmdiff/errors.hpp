#ifndef TMDIFF_ERRORS_HPP
#define TMDIFF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tmdiff {

/// Invalid user input (bad material value, bad volume fraction, bad scale, ...).
/// The message names the offending field.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A periodic cell problem whose right-hand side has nonzero mean. Signals an
/// inconsistent upstream coefficient rather than a user mistake.
class SolvabilityError : public std::runtime_error {
public:
    SolvabilityError(const std::string& what_problem, double mean_defect)
        : std::runtime_error(what_problem +
              ": cell-problem source has nonzero mean (" + std::to_string(mean_defect) +
              "); an upstream coefficient is inconsistent"),
          defect(mean_defect) {}
    double defect;
};

/// Piecewise-polynomial degree budget exceeded.
class DegreeOverflowError : public std::runtime_error {
public:
    explicit DegreeOverflowError(int degree)
        : std::runtime_error("piecewise-polynomial degree " + std::to_string(degree) +
              " exceeds the representable bound; resample the profiles onto a "
              "piecewise-linear partition (UnitCellFunction::sampled) and retry") {}
};

/// Malformed configuration file or schema violation.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structural failure in the Floquet-Bloch machinery (e.g. an all-zero matrix row).
class SingularStructureError : public std::runtime_error {
public:
    explicit SingularStructureError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tmdiff

#endif
