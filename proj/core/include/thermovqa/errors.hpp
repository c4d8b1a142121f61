#pragma once

#include <stdexcept>
#include <string>

namespace thermovqa {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration or unusable arguments. The CLI maps this to exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Network failure that survived the retry policy. The CLI maps this to exit code 2.
class TransportError : public Error {
public:
    using Error::Error;
};

// Temperature outside the encodable range of the active colormap.
class RangeError : public Error {
public:
    using Error::Error;
};

// No battery region could be located in an image.
class DetectionError : public Error {
public:
    using Error::Error;
};

}  // namespace thermovqa
