#ifndef HOLOQ_ERROR_HPP_
#define HOLOQ_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace holoq {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor / image dimensions that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid argument values (degenerate ranges, bad descriptors, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

// Malformed or unsupported on-disk data.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

// A condition that the construction of the pipeline should rule out, e.g.
// a possible INT32 accumulator overflow.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace holoq

#endif  // HOLOQ_ERROR_HPP_
