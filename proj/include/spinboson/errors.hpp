#pragma once

#include <stdexcept>
#include <string>

namespace spinboson {

// Exit-code taxonomy used by the CLI: DomainError -> 1, NumericalError -> 2,
// IoError -> 3.

class DomainError : public std::invalid_argument {
public:
    DomainError(std::string field, const std::string& what)
        : std::invalid_argument(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class NumericalError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class CutoffTooSmall : public NumericalError {
public:
    CutoffTooSmall(double estimate, double tolerance)
        : NumericalError("matsubara cutoff too small: tail estimate " +
                         std::to_string(estimate) + " exceeds tolerance " +
                         std::to_string(tolerance)),
          estimate_(estimate), tolerance_(tolerance) {}
    double estimate() const noexcept { return estimate_; }
    double tolerance() const noexcept { return tolerance_; }

private:
    double estimate_;
    double tolerance_;
};

class FrequencyNotOnGrid : public NumericalError {
    using NumericalError::NumericalError;
};

// Requested formula is only valid in the normal phase; carries the value of
// the transition condition and which factor diverged.
class SuperradiantRegime : public NumericalError {
public:
    SuperradiantRegime(double condition, std::string factor)
        : NumericalError("superradiant regime: a(0)+2c(0) = " +
                         std::to_string(condition) + " >= 1 (" + factor + ")"),
          condition_(condition), factor_(std::move(factor)) {}
    double condition() const noexcept { return condition_; }
    const std::string& factor() const noexcept { return factor_; }

private:
    double condition_;
    std::string factor_;
};

class PoleProximity : public NumericalError {
    using NumericalError::NumericalError;
};

class PoleDense : public NumericalError {
    using NumericalError::NumericalError;
};

class GridTooCoarse : public NumericalError {
    using NumericalError::NumericalError;
};

class DimensionOverflow : public NumericalError {
    using NumericalError::NumericalError;
};

class ConvergenceFailure : public NumericalError {
public:
    ConvergenceFailure(const std::string& what, int iterations, double residual)
        : NumericalError(what + " (iterations=" + std::to_string(iterations) +
                         ", residual=" + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}
    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

class TruncationUnconverged : public NumericalError {
public:
    TruncationUnconverged(double delta, int n_max)
        : NumericalError("fock truncation unconverged: ln Z moved by " +
                         std::to_string(delta) + " under n_max -> n_max+10 (n_max=" +
                         std::to_string(n_max) + ")"),
          delta_(delta), n_max_(n_max) {}
    double delta() const noexcept { return delta_; }
    int n_max() const noexcept { return n_max_; }

private:
    double delta_;
    int n_max_;
};

class IoError : public std::runtime_error {
public:
    IoError(const std::string& path, const std::string& what)
        : std::runtime_error(what + ": " + path), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace spinboson
