#pragma once

#include <stdexcept>
#include <string>

namespace jcpba {

struct InvalidPartition : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroRate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyClientSet : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Base for every constraint-infeasibility failure; carries the constraint
// identifier ("C1".."C5") so callers can report which one broke.
struct Infeasible : std::runtime_error {
    explicit Infeasible(const std::string& constraint, const std::string& what)
        : std::runtime_error(constraint + ": " + what), constraint_id(constraint) {}
    std::string constraint_id;
};

struct InfeasibleC5 : Infeasible {
    explicit InfeasibleC5(const std::string& what) : Infeasible("C5", what) {}
};

struct InfeasibleMemory : Infeasible {
    explicit InfeasibleMemory(const std::string& what) : Infeasible("C3", what) {}
};

struct InfeasibleBox : Infeasible {
    explicit InfeasibleBox(const std::string& what) : Infeasible("C4", what) {}
};

struct TooManyClients : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Names the offending config key path.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_path(key) {}
    std::string key_path;
};

struct UnknownKey : ValidationError {
    explicit UnknownKey(const std::string& key)
        : ValidationError(key, "unknown configuration key") {}
};

}  // namespace jcpba
