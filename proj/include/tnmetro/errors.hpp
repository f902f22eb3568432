#pragma once

#include <stdexcept>
#include <string>

namespace tnmetro {

// Shape/extent mismatches between tensors or chains.
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(const std::string& msg) : std::runtime_error("dimension error: " + msg) {}
};

// Invalid argument values (empty tensors, zero site counts, shrinking bonds, ...).
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& msg) : std::runtime_error("domain error: " + msg) {}
};

// Input fails a declared mathematical precondition (non-Hermitian, non-TP, bad density matrix).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error("validation error: " + msg) {}
};

// An internal quantity violates a numerical consistency bound; signals a contraction bug.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error("numerical-consistency error: " + msg) {}
};

// Requested operation not available for the given representation.
class UnsupportedError : public std::runtime_error {
public:
    explicit UnsupportedError(const std::string& msg) : std::runtime_error("unsupported operation: " + msg) {}
};

// Dense conversion or memory cap exceeded.
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& msg) : std::runtime_error("resource error: " + msg) {}
};

// Generalized eigenproblem metric is singular or indefinite.
class MetricError : public std::runtime_error {
public:
    explicit MetricError(const std::string& msg) : std::runtime_error("metric error: " + msg) {}
};

} // namespace tnmetro
