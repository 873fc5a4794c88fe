#pragma once

#include <stdexcept>
#include <string>

namespace qloop {

// Base class for all library errors. Subclasses carry the failure kind in
// the type so callers can map them to exit codes without string matching.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Domain violations (Im tau <= 0, diverging products, ...).
class NonConvergent : public Error {
public:
    explicit NonConvergent(const std::string& msg) : Error(msg) {}
};

class InvalidRank : public Error {
public:
    explicit InvalidRank(const std::string& msg) : Error(msg) {}
};

class TruncationTooSmall : public Error {
public:
    explicit TruncationTooSmall(const std::string& msg) : Error(msg) {}
};

class DimMismatch : public Error {
public:
    explicit DimMismatch(const std::string& msg) : Error(msg) {}
};

class AlgebraMismatch : public Error {
public:
    explicit AlgebraMismatch(const std::string& msg) : Error(msg) {}
};

class DefectiveMonodromy : public Error {
public:
    explicit DefectiveMonodromy(const std::string& msg) : Error(msg) {}
};

class NotSpecialOrthogonal : public Error {
public:
    explicit NotSpecialOrthogonal(const std::string& msg) : Error(msg) {}
};

class NotInWeylGroup : public Error {
public:
    explicit NotInWeylGroup(const std::string& msg) : Error(msg) {}
};

class ZeroMode : public Error {
public:
    explicit ZeroMode(const std::string& msg) : Error(msg) {}
};

// Malformed input files / JSON that fails schema or algebra validation.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

}  // namespace qloop
