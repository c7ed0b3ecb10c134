// Copyright 2026 The ldpfed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LDPFED_LDPFED_HPP
#define LDPFED_LDPFED_HPP

#include "ldpfed/compare.hpp"
#include "ldpfed/config.hpp"
#include "ldpfed/dataset.hpp"
#include "ldpfed/errors.hpp"
#include "ldpfed/federation.hpp"
#include "ldpfed/mechanism.hpp"
#include "ldpfed/metrics.hpp"
#include "ldpfed/nn.hpp"
#include "ldpfed/rng.hpp"
#include "ldpfed/schedule.hpp"

#endif  // LDPFED_LDPFED_HPP
