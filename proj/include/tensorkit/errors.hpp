#pragma once

#include <stdexcept>
#include <string>

namespace tensorkit {

/// Base class of every error thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument value (bad rank, non-positive tolerance, ...).
class argument_error : public error {
public:
    using error::error;
};

/// Incompatible shapes or sizes.
class dimension_error : public error {
public:
    using error::error;
};

/// Mode or element index out of range.
class index_error : public error {
public:
    using error::error;
};

/// Illegal use of the transformation-state log (e.g. folding a raw tensor).
class state_error : public error {
public:
    using error::error;
};

/// Violated invariant of an efficient form (CPD/TKD/TT).
class form_error : public error {
public:
    using error::error;
};

/// Ill-formed dataset (missing class, inconsistent labels, ...).
class data_error : public error {
public:
    using error::error;
};

/// Numerical failure: non-finite input, non-PD matrix, singular update.
class numeric_error : public error {
public:
    using error::error;
};

/// Unparseable input file (JSON syntax, CSV cells).
class format_error : public error {
public:
    using error::error;
};

/// Parsed file violates a schema invariant; the message names the field.
class validation_error : public error {
public:
    using error::error;
};

/// Unsupported format_version in a file.
class version_error : public error {
public:
    using error::error;
};

/// Filesystem failure while reading or writing.
class io_error : public error {
public:
    using error::error;
};

} // namespace tensorkit
