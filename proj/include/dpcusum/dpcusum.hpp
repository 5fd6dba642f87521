// Copyright 2026 The dpcusum Authors
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

#pragma once

#include "dpcusum/calibrate.hpp"
#include "dpcusum/detect.hpp"
#include "dpcusum/errors.hpp"
#include "dpcusum/harness.hpp"
#include "dpcusum/model.hpp"
#include "dpcusum/noise.hpp"
#include "dpcusum/parallel.hpp"
#include "dpcusum/rng.hpp"
#include "dpcusum/special.hpp"
