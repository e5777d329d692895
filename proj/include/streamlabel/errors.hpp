#ifndef STREAMLABEL_ERRORS_HPP
#define STREAMLABEL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace streamlabel {

// Thrown for unreadable/unwritable files and failed network operations.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown for malformed input data: bad image headers, bad wire bytes,
// invalid topic names, label overflow under the error policy.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class LabelOverflowError : public DataError {
public:
    explicit LabelOverflowError(const std::string& what) : DataError(what) {}
};

}  // namespace streamlabel

#endif
