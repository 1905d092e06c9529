/*
 * Copyright 2026 The gbrtl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <gtest/gtest.h>

#include <string>

#include "gbrtl/error.hpp"

/// Expects `stmt` to throw gbrtl::Error of the given kind whose message
/// contains `needle`.
#define EXPECT_GBRTL_ERROR(stmt, error_kind, needle)                                   \
  do {                                                                                 \
    try {                                                                              \
      stmt;                                                                            \
      ADD_FAILURE() << "expected gbrtl::Error from: " #stmt;                           \
    } catch (const gbrtl::Error& e__) {                                                \
      EXPECT_EQ(e__.kind(), error_kind) << e__.what();                                 \
      EXPECT_NE(std::string(e__.what()).find(needle), std::string::npos) << e__.what(); \
    }                                                                                  \
  } while (0)
