#pragma once

#include <stdexcept>
#include <string>

namespace hmor {

// Bad user input: scenario parameters, config files, optimizer settings.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: singular factorization, degenerate data.
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Geometric queries that cannot be answered (point outside domain, ...).
class LookupError : public std::runtime_error {
public:
  explicit LookupError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or truncated artifact files.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hmor
