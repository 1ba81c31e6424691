#pragma once

#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "hfo/error.hpp"

namespace hfo::test {

/// Runs `fn` and returns the ErrorCode it throws; fails the test otherwise.
template <class Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected hfo::Error");
    return ErrorCode::Io;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("hfo_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace hfo::test
