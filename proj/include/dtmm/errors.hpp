#pragma once

#include <stdexcept>
#include <string>

namespace dtmm {

/// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Problem-file or expression syntax error, with 1-based position.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column)
        : Error(msg + " (line " + std::to_string(line) + ", column " +
                std::to_string(column) + ")"),
          line(line), column(column) {}
    int line;
    int column;
};

/// Expression evaluated outside its domain (division by zero, non-finite
/// result). coeff_index is >= 0 when the offending coefficient is known.
class EvalError : public Error {
public:
    explicit EvalError(const std::string& msg, int coeff_index = -1)
        : Error(msg), coeff_index(coeff_index) {}
    int coeff_index;
};

/// A coefficient expression that the symbolic differentiator cannot handle.
class UnsupportedCoefficientError : public Error {
public:
    using Error::Error;
};

/// Two characteristic roots closer than the degeneracy threshold. Carries
/// the location and the colliding pair so the caller can decide whether to
/// treat it as a singularity.
class DegeneracyError : public Error {
public:
    DegeneracyError(const std::string& msg, double x, int i, int j, double gap)
        : Error(msg + " at x=" + std::to_string(x)), x(x), i(i), j(j), gap(gap) {}
    double x;
    int i;
    int j;
    double gap;
};

/// The characteristic equation is degenerate on a whole subinterval; the
/// formalism does not apply without a change of dependent variable.
class EntirelyDegenerateError : public Error {
public:
    using Error::Error;
};

/// Root finder non-convergence, overflow, singular linear system, and the like.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg, double x = 0.0)
        : Error(msg), x(x) {}
    double x;
};

/// compose_transfers received transfers whose endpoints do not chain.
class ChainError : public Error {
public:
    ChainError(const std::string& msg, std::size_t index)
        : Error(msg), index(index) {}
    std::size_t index;
};

}  // namespace dtmm
