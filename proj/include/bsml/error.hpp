#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bsml {

// Precondition or shape violation by the caller.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failed factorization or non-finite intermediate. `quantity` names what broke.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string quantity, const std::string& detail)
      : std::runtime_error(quantity + ": " + detail), quantity_(std::move(quantity)) {}

  const std::string& quantity() const noexcept { return quantity_; }

 private:
  std::string quantity_;
};

// A numerical failure inside a chain, tagged with the sweep that raised it.
class ChainError : public NumericalError {
 public:
  ChainError(std::size_t iteration, const NumericalError& cause)
      : NumericalError(cause.quantity(),
                       std::string(cause.what()) + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// Malformed user input (files, configs). Carries an optional location.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bsml
