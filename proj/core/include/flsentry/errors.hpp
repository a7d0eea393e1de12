#pragma once

#include <stdexcept>
#include <string>

namespace flsentry {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

struct DegenerateVectorError : Error {
    using Error::Error;
};

struct InsufficientSamplesError : Error {
    using Error::Error;
};

struct PartitionError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

struct EmptyAggregationError : Error {
    using Error::Error;
};

struct InsufficientClientsError : Error {
    using Error::Error;
};

struct RangeError : Error {
    using Error::Error;
};

struct UndefinedMetricError : Error {
    using Error::Error;
};

struct ProverInconsistencyError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

/// Raised when a detection pass would leave no survivors. The round driver
/// catches this and falls back to the previous global model.
struct AllRemovedSignal : Error {
    using Error::Error;
};

} // namespace flsentry
