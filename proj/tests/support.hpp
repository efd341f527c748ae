#pragma once

#include <catch_amalgamated.hpp>

#include "maser/error.hpp"

namespace testing {

/// Kind of the MaserError thrown by f; fails the test if nothing is thrown.
template <class F>
maser::ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const maser::MaserError& e) {
        return e.kind();
    }
    FAIL("expected a MaserError");
    return maser::ErrorKind::InvalidArgument;
}

}  // namespace testing
