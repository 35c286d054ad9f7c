#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace diskprep {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or schema (missing mandatory column, invalid parameter).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data that cannot support the requested computation.
class DataError : public Error {
public:
    using Error::Error;
};

/// A statistic is undefined for the given input (e.g. zero rank variance).
class UndefinedStatistic : public DataError {
public:
    using DataError::DataError;
};

/// Day index relative to the dataset epoch.
using Day = int;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

enum class FailureType {
    DataCorruption,
    IoRequestError,
    UnhandledError,
    DiskNotFound,
    UnhealthyDisk,
    FsCorruption,
    Other,
    Unknown,
};

inline constexpr std::array<FailureType, 8> kAllFailureTypes = {
    FailureType::DataCorruption, FailureType::IoRequestError, FailureType::UnhandledError,
    FailureType::DiskNotFound,   FailureType::UnhealthyDisk,  FailureType::FsCorruption,
    FailureType::Other,          FailureType::Unknown,
};

inline std::string_view to_string(FailureType t) noexcept {
    switch (t) {
    case FailureType::DataCorruption: return "data_corruption";
    case FailureType::IoRequestError: return "io_request_error";
    case FailureType::UnhandledError: return "unhandled_error";
    case FailureType::DiskNotFound: return "disk_not_found";
    case FailureType::UnhealthyDisk: return "unhealthy_disk";
    case FailureType::FsCorruption: return "fs_corruption";
    case FailureType::Other: return "other";
    case FailureType::Unknown: return "unknown";
    }
    return "unknown";
}

namespace detail {

inline std::string normalize_token(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

/// SplitMix64 finalizer; derives independent seeds from (seed, index).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Case-insensitive; separators ('_', '-', ' ') are ignored, so "DataCorruption",
/// "data_corruption" and "DATA-CORRUPTION" all map to the same type.
inline std::optional<FailureType> parse_failure_type(std::string_view s) {
    const std::string key = detail::normalize_token(s);
    for (FailureType t : kAllFailureTypes) {
        if (detail::normalize_token(to_string(t)) == key) return t;
    }
    return std::nullopt;
}

/// Receives non-fatal warnings. Defaults to stderr; tests and the CLI may
/// replace it.
inline std::function<void(std::string_view)>& warning_sink() {
    static std::function<void(std::string_view)> sink = [](std::string_view msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return sink;
}

inline void warn(std::string_view msg) {
    if (auto& s = warning_sink()) s(msg);
}

/// 64-bit FNV-1a. Used for schema hashes, config fingerprints and manifests.
class Fnv1a {
public:
    Fnv1a& update(std::string_view bytes) noexcept {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Fnv1a& update(double v) noexcept {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        std::memcpy(&bits, &v, sizeof bits);
        return update_u64(bits);
    }
    Fnv1a& update_u64(std::uint64_t v) noexcept {
        for (int i = 0; i < 8; ++i) {
            state_ ^= (v >> (8 * i)) & 0xffU;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

} // namespace diskprep
