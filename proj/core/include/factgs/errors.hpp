#pragma once

#include <stdexcept>
#include <string>

namespace factgs {

/// Malformed input data: bad scene files, violated invariants, shape mismatches.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem and encoding failures.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class CheckpointError : public std::runtime_error {
public:
    explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

class CheckpointVersionError : public CheckpointError {
public:
    explicit CheckpointVersionError(const std::string& what) : CheckpointError(what) {}
};

class CheckpointTruncatedError : public CheckpointError {
public:
    explicit CheckpointTruncatedError(const std::string& what) : CheckpointError(what) {}
};

class CheckpointChecksumError : public CheckpointError {
public:
    explicit CheckpointChecksumError(const std::string& what) : CheckpointError(what) {}
};

} // namespace factgs
