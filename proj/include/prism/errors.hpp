#pragma once

#include <stdexcept>
#include <string>

namespace prism {

// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Two grids were combined whose shapes do not match.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

// A spectrum handed to ifft2 is not Hermitian-symmetric (corrupted data).
class SymmetryViolation : public Error {
public:
    using Error::Error;
};

// A scale parameter (rho, sigma, prior variance) is non-positive or non-finite.
class DegenerateScale : public Error {
public:
    using Error::Error;
};

// The dense oracle was asked to materialize a system beyond its size cap.
class TooLarge : public Error {
public:
    using Error::Error;
};

// A grid is below the minimum size an operation supports (e.g. SSIM windows).
class TooSmall : public Error {
public:
    using Error::Error;
};

class BadSupport : public Error {
public:
    using Error::Error;
};

class BridgeTimeout : public Error {
public:
    using Error::Error;
};

class MalformedResponse : public Error {
public:
    using Error::Error;
};

class EmptySampleSet : public Error {
public:
    using Error::Error;
};

class InsufficientSamples : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace prism
