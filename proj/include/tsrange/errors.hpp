#pragma once

#include <stdexcept>
#include <string>

namespace tsrange {

/// The requested estimate does not have a unique solution for this data
/// (too few messages, one-directional links, disconnected network, ...).
class identifiability_error : public std::runtime_error {
public:
    explicit identifiability_error(const std::string& what) : std::runtime_error(what) {}
};

/// A solve that should have succeeded broke down numerically
/// (rank collapse after scaling, non-finite results, ...).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace tsrange
