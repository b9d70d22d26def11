#pragma once

#include <stdexcept>
#include <string>

namespace cfikit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// malformed graph, twist, pebble tuple or blurer
struct ValidationError : Error {
    using Error::Error;
};

// unreadable or inconsistent serialized data
struct DecodeError : Error {
    using Error::Error;
};

// a size guard or search budget was exceeded
struct ResourceError : Error {
    using Error::Error;
};

// bad argument to a library call (mixed moduli, wrong shapes)
struct ArgumentError : Error {
    using Error::Error;
};

// nothing satisfying the request exists or was found
struct NotFoundError : Error {
    using Error::Error;
};

// a construction's hypotheses or checks failed
struct AuditError : Error {
    using Error::Error;
};

}  // namespace cfikit
