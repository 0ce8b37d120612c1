#pragma once

#include <stdexcept>
#include <string>

namespace relrad {

// Root of the library's exception hierarchy. Everything relrad throws on a
// domain violation derives from this, so callers can catch one type at the
// boundary and map it to an exit code.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Configuration / input problems (exit code 2 at the CLI boundary).
class ConfigError : public Error {
  public:
    using Error::Error;
};

// ---- graph construction ----------------------------------------------------

class UnknownNodeError : public Error {
  public:
    explicit UnknownNodeError(const std::string& id)
        : Error("unknown node id: " + id), id_(id) {}
    const std::string& id() const { return id_; }

  private:
    std::string id_;
};

class DuplicateNodeError : public Error {
  public:
    explicit DuplicateNodeError(const std::string& id)
        : Error("duplicate node id: " + id) {}
};

// ---- ingest ----------------------------------------------------------------

// Malformed surface syntax. Carries a 1-based line and column so tools can
// point at the offending token.
class ParseError : public Error {
  public:
    ParseError(int line, int col, const std::string& expected)
        : Error("parse error at line " + std::to_string(line) + ", col " +
                std::to_string(col) + ": expected " + expected),
          line_(line),
          col_(col),
          expected_(expected) {}
    int line() const { return line_; }
    int col() const { return col_; }
    const std::string& expected() const { return expected_; }

  private:
    int line_;
    int col_;
    std::string expected_;
};

// Structurally valid input that references something undefined (e.g. a foreign
// key to a table that was never declared).
class LinkError : public Error {
  public:
    using Error::Error;
};

// Input that parses but violates a format-level contract (bad enum value,
// negative count, fraction outside [0,1], ...).
class FormatError : public Error {
  public:
    using Error::Error;
};

// ---- synthetic generation --------------------------------------------------

// Generator parameters that cannot produce a well-formed schema at all.
class InfeasibleParamsError : public Error {
  public:
    using Error::Error;
};

// The requested distance cue cannot be planted in the sampled topology (too
// few hosts at the required distance, or calibration missed the target band).
class CueInfeasibleError : public Error {
  public:
    using Error::Error;
};

// ---- task assembly / sampling ----------------------------------------------

class TooFewSamplesError : public Error {
  public:
    using Error::Error;
};

// Task labeling found no positive examples to anchor a dataset.
class NoPositivesError : public Error {
  public:
    using Error::Error;
};

// Negative-pair pool ran dry before the requested ratio was met.
class PoolExhaustedError : public Error {
  public:
    using Error::Error;
};

// A split or metric needs both classes present and got only one.
class DegenerateLabelsError : public Error {
  public:
    using Error::Error;
};

// ---- features / models -----------------------------------------------------

// Lexical scoring requires nonempty names.
class EmptyNameError : public Error {
  public:
    using Error::Error;
};

// Transform called before fit, or with a different dimensionality than fit saw.
class ScalerStateError : public Error {
  public:
    using Error::Error;
};

class ShapeMismatchError : public Error {
  public:
    using Error::Error;
};

// Training produced a non-finite loss or parameter.
class DivergedError : public Error {
  public:
    using Error::Error;
};

// ---- statistics ------------------------------------------------------------

class ZeroVarianceError : public Error {
  public:
    using Error::Error;
};

class TooFewPairsError : public Error {
  public:
    using Error::Error;
};

class TooFewPointsError : public Error {
  public:
    using Error::Error;
};

// ---- runner / IO -----------------------------------------------------------

class IoError : public Error {
  public:
    using Error::Error;
};

// Correlation sweeps need at least 3 tasks with distinct radii.
class TooFewTasksError : public Error {
  public:
    using Error::Error;
};

// Capacity matching found no width inside the tolerance band.
class InfeasibleError : public Error {
  public:
    using Error::Error;
};

}  // namespace relrad
