#pragma once
#include <stdexcept>
#include <string>

namespace etree {

// Malformed or inconsistent input data: manifests, data files, invariant
// violations detected while building a Dataset or a model.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An observation does not conform to a fitted model's schema (unknown level,
// wrong grid length, wrong vertex count, ...).
struct SchemaError : DataError {
    using DataError::DataError;
};

}  // namespace etree
