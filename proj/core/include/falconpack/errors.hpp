#pragma once

#include <stdexcept>
#include <string>

namespace falconpack {

// Shape or parameter combination that can never describe a valid convolution.
struct geometry_error : std::invalid_argument {
  explicit geometry_error(const std::string& what) : std::invalid_argument(what) {}
};

// Tensor shapes that disagree with each other or with the declared geometry.
struct dimension_error : std::invalid_argument {
  explicit dimension_error(const std::string& what) : std::invalid_argument(what) {}
};

// A packing that does not fit in the polynomial degree, or an operator
// geometry with no feasible tile at all.
struct capacity_error : std::runtime_error {
  explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

// Mixing polynomials or ciphertexts with different (N, q) parameters.
struct parameter_mismatch : std::invalid_argument {
  explicit parameter_mismatch(const std::string& what) : std::invalid_argument(what) {}
};

// Tracked ciphertext noise bound exceeded q/2; decryption results are no
// longer covered by the analytical budget.
struct noise_budget_error : std::runtime_error {
  explicit noise_budget_error(const std::string& what) : std::runtime_error(what) {}
};

struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace falconpack
