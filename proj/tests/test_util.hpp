#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <optional>

#include "ldlab/error.hpp"

// Error code raised by f, or nullopt when it returns normally.
template <class F>
std::optional<ldlab::ErrorCode> error_code_of(F&& f) {
    try {
        f();
    } catch (const ldlab::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

#define EXPECT_LDLAB_ERROR(stmt, expected) EXPECT_EQ(error_code_of([&] { (void)(stmt); }), (expected))

inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }
