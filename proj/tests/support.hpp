#pragma once

#include <gtest/gtest.h>

#include "crossview/error.hpp"
#include "random_scene.hpp"

namespace crossview::testing {

template <typename F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected crossview::Error";
  return ErrorCode::kInvalidArgument;
}

}  // namespace crossview::testing
