#pragma once

#include <stdexcept>
#include <string>

namespace lsc {

// Raised when a request falls outside the model class the library covers
// (e.g. exponent queries in a regime where no scaling exponent is defined,
// or a balanced-case limit that is not available).
class model_error : public std::runtime_error {
public:
    explicit model_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a computation cannot reach its accuracy target within its
// configured caps (grid sizes, quadrature subdivisions, memory budget).
class resource_error : public std::runtime_error {
public:
    explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace lsc
