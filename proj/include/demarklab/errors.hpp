#pragma once

#include <stdexcept>
#include <string>

namespace dml {

// Contract violations on operation inputs (bad shapes, empty latents, ...).
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

// PR needs at least one super-threshold element on each side.
class DegenerateSupportError : public DomainError {
public:
    explicit DegenerateSupportError(const std::string& msg) : DomainError(msg) {}
};

// No match count can reach the requested false-positive rate.
class UnachievableThresholdError : public DomainError {
public:
    explicit UnachievableThresholdError(const std::string& msg) : DomainError(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class NotFoundError : public IoError {
public:
    explicit NotFoundError(const std::string& msg) : IoError(msg) {}
};

// Bytes that do not decode as a supported image or checkpoint container.
class FormatError : public IoError {
public:
    explicit FormatError(const std::string& msg) : IoError(msg) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class EmptyDatasetError : public ConfigError {
public:
    explicit EmptyDatasetError(const std::string& msg) : ConfigError(msg) {}
};

class RegistryError : public std::runtime_error {
public:
    explicit RegistryError(const std::string& msg) : std::runtime_error(msg) {}
};

class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Ablation budget ran out; completed cells were written before throwing.
class PartialResultError : public std::runtime_error {
public:
    explicit PartialResultError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace dml
