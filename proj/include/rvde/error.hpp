#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rvde {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
  public:
    using Error::Error;
};

class EmptyDataset : public Error {
  public:
    EmptyDataset() : Error("empty dataset") {}
};

class DuplicatePoints : public Error {
  public:
    DuplicatePoints(std::size_t first, std::size_t second)
        : Error("duplicate points at rows " + std::to_string(first) + " and " +
                std::to_string(second)),
          first_(first),
          second_(second) {}

    std::size_t first() const noexcept { return first_; }
    std::size_t second() const noexcept { return second_; }

  private:
    std::size_t first_;
    std::size_t second_;
};

class DimensionError : public Error {
  public:
    DimensionError(std::size_t expected, std::size_t got)
        : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(got)) {}
};

class DegenerateDirection : public Error {
  public:
    DegenerateDirection() : Error("ray direction is zero or not finite") {}
};

/// Argument outside the kernel domain (t <= A, or beta <= A / l).
class DomainError : public Error {
  public:
    using Error::Error;
};

class IntegrationError : public Error {
  public:
    IntegrationError(double achieved_tolerance)
        : Error("quadrature did not converge, achieved error estimate " +
                std::to_string(achieved_tolerance)),
          achieved_(achieved_tolerance) {}

    double achieved_tolerance() const noexcept { return achieved_; }

  private:
    double achieved_;
};

class NotIntegrable : public Error {
  public:
    using Error::Error;
};

class KernelNotAdmissible : public Error {
  public:
    using Error::Error;
};

class ConvergenceError : public Error {
  public:
    ConvergenceError(double best_beta, double residual)
        : Error("beta solver did not converge: best beta " + std::to_string(best_beta) +
                ", residual " + std::to_string(residual)),
          best_beta_(best_beta),
          residual_(residual) {}

    double best_beta() const noexcept { return best_beta_; }
    double residual() const noexcept { return residual_; }

  private:
    double best_beta_;
    double residual_;
};

class NeedsTwoPoints : public Error {
  public:
    NeedsTwoPoints() : Error("alpha selection needs at least two points") {}
};

class PilotUnderflow : public Error {
  public:
    explicit PilotUnderflow(std::size_t index)
        : Error("pilot density underflows to zero at point " + std::to_string(index)),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }

  private:
    std::size_t index_;
};

class ParseError : public Error {
  public:
    ParseError(std::size_t row, std::size_t column, const std::string& what)
        : Error("parse error at row " + std::to_string(row) +
                (column ? ", column " + std::to_string(column) : std::string()) + ": " + what),
          row_(row),
          column_(column) {}

    /// 1-based line number in the input.
    std::size_t row() const noexcept { return row_; }
    /// 1-based column, 0 when the whole row is at fault.
    std::size_t column() const noexcept { return column_; }

  private:
    std::size_t row_;
    std::size_t column_;
};

}  // namespace rvde
