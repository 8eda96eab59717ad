#include "handshape/errors.hpp"

namespace handshape {

ParseError::ParseError(const std::string& what, long row)
    : Error(row >= 0 ? "row " + std::to_string(row) + ": " + what : what), row_(row) {}

}  // namespace handshape
