#pragma once

#include <stdexcept>
#include <string>

namespace v2sim {

// Base for everything the library throws on its own account.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input (files, CLI flags, scenario fields).
// The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnknownStation : public Error {
 public:
  using Error::Error;
};

class UnknownBus : public Error {
 public:
  using Error::Error;
};

class NotRadial : public Error {
 public:
  using Error::Error;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

class CapacityExceeded : public Error {
 public:
  using Error::Error;
};

class PluginCycle : public Error {
 public:
  using Error::Error;
};

class MissingDependency : public Error {
 public:
  using Error::Error;
};

}  // namespace v2sim
