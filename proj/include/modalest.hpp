// Copyright 2026 The modalest Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================
#pragma once

#include "modalest/datasets.hpp"
#include "modalest/errors.hpp"
#include "modalest/estimate.hpp"
#include "modalest/experiments.hpp"
#include "modalest/io.hpp"
#include "modalest/numerics.hpp"
#include "modalest/parallel.hpp"
#include "modalest/placement.hpp"
#include "modalest/pod.hpp"
#include "modalest/risk.hpp"
#include "modalest/rng.hpp"
#include "modalest/selection.hpp"
