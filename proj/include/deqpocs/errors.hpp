#pragma once

#include <stdexcept>
#include <string>

namespace deqpocs {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Non-finite or otherwise malformed numeric input.
class InvalidInputError : public Error
{
public:
  using Error::Error;
};

class ShapeError : public Error
{
public:
  using Error::Error;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

// Raised when a fixed-point iterate becomes non-finite.
class DivergenceError : public Error
{
public:
  DivergenceError(std::string const &msg, int iteration)
    : Error(msg)
    , iteration_(iteration)
  {
  }
  int iteration() const { return iteration_; }

private:
  int iteration_;
};

class TrainingError : public Error
{
public:
  using Error::Error;
};

} // namespace deqpocs
