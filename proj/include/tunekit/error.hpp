#pragma once

#include <stdexcept>
#include <string>

namespace tunekit {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidSpace : public Error {
public:
  using Error::Error;
};

// A value string that is not a member of its parameter's value list.
class InvalidValue : public Error {
public:
  using Error::Error;
};

class CapExceeded : public Error {
public:
  using Error::Error;
};

class SurrogateError : public Error {
public:
  using Error::Error;
};

class SpaceExhausted : public Error {
public:
  using Error::Error;
};

class DuplicateTrial : public Error {
public:
  using Error::Error;
};

class MoldError : public Error {
public:
  using Error::Error;
};

class LaunchError : public Error {
public:
  using Error::Error;
};

class ParseFailed : public Error {
public:
  using Error::Error;
};

class StoreError : public Error {
public:
  using Error::Error;
};

// Problem-file diagnostics carry a "file:line:col" anchor in what().
class ProblemError : public Error {
public:
  using Error::Error;
};

}  // namespace tunekit
