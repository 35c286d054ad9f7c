#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "diskprep.hpp"

namespace testutil {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("diskprep_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string str(const std::string& leaf = {}) const { return (leaf.empty() ? path_ : path_ / leaf).string(); }

private:
    fs::path path_;
};

/// Disk with one value per listed day for each column.
inline diskprep::DiskSeries make_disk(const std::string& serial, const std::string& model,
                                      const std::vector<diskprep::Day>& days,
                                      const std::vector<std::vector<double>>& columns) {
    diskprep::DiskSeries d;
    d.serial = serial;
    d.model = model;
    d.days = days;
    d.columns = columns;
    d.first_day = days.empty() ? 0 : days.front();
    d.last_day = days.empty() ? -1 : days.back();
    return d;
}

/// Collects warnings for the lifetime of the object.
class WarningCapture {
public:
    WarningCapture() : saved_(diskprep::warning_sink()) {
        diskprep::warning_sink() = [this](std::string_view m) { messages.emplace_back(m); };
    }
    ~WarningCapture() { diskprep::warning_sink() = saved_; }
    std::vector<std::string> messages;

private:
    std::function<void(std::string_view)> saved_;
};

} // namespace testutil
