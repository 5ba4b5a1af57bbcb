#pragma once

#include <stdexcept>
#include <string>

namespace tweetscope {

// Bad parameters or inconsistent configuration; the caller must fix its input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or unreadable data (files, streams, payloads).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An operation was invoked in a state that does not permit it.
class StateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tweetscope
