#pragma once

#include <stdexcept>
#include <string>

namespace diqkd {

// Invalid experiment or protocol configuration (bad angles, probabilities
// not summing to 1, unknown config keys, ...).
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A CHSH correlator is undefined because one of the designated input pairs
// was never observed.
class IncompleteStatisticsError : public std::runtime_error {
  public:
    explicit IncompleteStatisticsError(const std::string& what)
        : std::runtime_error(what) {}
};

// An operation was invoked outside its contract (e.g. BINARY on a block
// whose parities agree).
class ContractViolationError : public std::logic_error {
  public:
    explicit ContractViolationError(const std::string& what)
        : std::logic_error(what) {}
};

// The protocol decided to abort (insufficient Bell violation); not a crash.
class AbortSignal : public std::runtime_error {
  public:
    explicit AbortSignal(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace diqkd
