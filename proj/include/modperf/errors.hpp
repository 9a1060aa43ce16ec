#pragma once

#include <stdexcept>
#include <string>

namespace modperf {

/// Bad or inconsistent caller input (lengths, empty data, missing fields).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A parameter or index outside its permitted range.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// A graph violates a structural invariant (cycle, bad edge kind).
class StructuralError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Requested more distinct samples than the space holds.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem or parse failure on persisted artifacts.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace modperf
