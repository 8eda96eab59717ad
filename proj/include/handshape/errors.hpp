#pragma once

#include <stdexcept>
#include <string>

namespace handshape {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line/row number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row = -1);
  long row() const noexcept { return row_; }

 private:
  long row_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The glove color filter kept no pixel.
class SegmentationEmpty : public Error {
 public:
  using Error::Error;
};

class EmptyMask : public Error {
 public:
  using Error::Error;
};

class EmptyTrainingSet : public Error {
 public:
  using Error::Error;
};

class EmptySample : public Error {
 public:
  using Error::Error;
};

class ModelFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace handshape
